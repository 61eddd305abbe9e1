"""Multi-turn sessions and deterministic transcript export.

Sessions live in memory (optionally mirrored to an append-only JSONL log).
A turn stores every artifact of one question: the plan (with the
provider's raw output), the evidence, the synthesized answer, and
timestamps. Both the ask response and the transcript endpoint serialize
the same stored turn, so they can never drift apart.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import RamanQAError
from ..planner import QueryPlan
from ..qa import Evidence, SynthesizedAnswer


class UnknownSessionError(RamanQAError):
    pass


@dataclass
class Turn:
    index: int
    question: str
    plan: QueryPlan
    evidence: Evidence
    answer: SynthesizedAnswer
    started_at: float
    finished_at: float

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "question": self.question,
            "plan": self.plan.to_json(),
            "evidence": self.evidence.to_json(),
            "answer": self.answer.to_json(),
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }


@dataclass
class Session:
    session_id: str
    created_at: float
    turns: list[Turn] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def to_json(self) -> dict:
        return {
            "session_id": self.session_id,
            "created_at": self.created_at,
            "turns": [t.to_json() for t in self.turns],
        }


class SessionStore:
    """In-memory session registry; per-session turn append is serialized."""

    def __init__(self, log_path: str | Path | None = None):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._log_path = Path(log_path) if log_path else None

    def create(self) -> Session:
        session = Session(session_id=uuid.uuid4().hex, created_at=time.time())
        with self._lock:
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSessionError(f"unknown session: {session_id}")
        return session

    def append_turn(self, session_id: str, turn_builder) -> Turn:
        """Build and append a turn under the session lock; the builder gets
        the next turn index."""
        session = self.get(session_id)
        with session.lock:
            turn = turn_builder(len(session.turns))
            session.turns.append(turn)
        if self._log_path:
            record = {"session_id": session_id, "turn": turn.to_json()}
            with self._lock:
                with self._log_path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, sort_keys=True) + "\n")
        return turn


def export_transcript(session: Session) -> str:
    """Deterministic text rendering of a whole session, turn by turn."""
    lines = [f"# transcript {session.session_id}"]
    lines.append(f"created_at: {session.created_at!r}")
    lines.append(f"turns: {len(session.turns)}")
    for turn in session.turns:
        lines.append("")
        lines.append(f"## turn {turn.index + 1}")
        lines.append("### question")
        lines.append(turn.question)
        lines.append("### filters")
        lines.append(json.dumps(turn.plan.applied_filters.to_json(), sort_keys=True))
        lines.append("### sql")
        lines.append(turn.plan.sql)
        lines.append("### literature query")
        lines.append(turn.plan.lit_query)
        lines.append("### evidence")
        from ..qa import format_evidence

        lines.append(format_evidence(turn.evidence))
        lines.append("### answer")
        lines.append(turn.answer.text)
        lines.append("### citations")
        lines.append(f"data: {json.dumps(turn.answer.data_citations)}")
        lines.append(f"literature: {json.dumps(turn.answer.literature_citations)}")
        if turn.answer.warnings:
            lines.append("### warnings")
            for w in turn.answer.warnings:
                lines.append(f"- {w}")
    return "\n".join(lines) + "\n"
