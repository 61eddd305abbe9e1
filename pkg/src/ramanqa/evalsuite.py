"""Evaluation harness: judge-rubric scoring, retrieval metrics, and the
benchmark runner with diffable text reports."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .errors import EvalError, JudgeError
from .index import RetrievedPassage, VectorIndex
from .planner import ContextFilters, plan
from .providers import ChatProvider
from .qa import Evidence, check_citations, execute_plan, format_evidence, synthesize
from .resources import load_text
from .store import PeakStore

logger = logging.getLogger(__name__)

JUDGE_SQL_RESOURCE = "judge_sql_v1.txt"
JUDGE_GROUNDEDNESS_RESOURCE = "judge_groundedness_v1.txt"
BENCHMARK_RESOURCE = "benchmark_questions.jsonl"

RUBRIC_VALUES = (0.0, 0.5, 1.0)
RETRIEVAL_KS = (1, 3, 5)


@dataclass(frozen=True)
class BenchmarkQuestion:
    qid: int
    text: str
    category: str
    gold_papers: tuple[str, ...] | None = None

    def __post_init__(self):
        if not 1 <= self.qid <= 30:
            raise EvalError(f"qid must be in 1..30, got {self.qid}")
        if self.category not in ("A", "B", "C", "D"):
            raise EvalError(f"category must be A-D, got {self.category!r}")
        if self.gold_papers is not None and len(self.gold_papers) > 5:
            raise EvalError(f"gold_papers capped at 5, got {len(self.gold_papers)}")


def load_benchmark_questions(path=None) -> list[BenchmarkQuestion]:
    """Load the shipped 30-question fixture (or a compatible file)."""
    if path is None:
        raw = load_text(BENCHMARK_RESOURCE)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    questions = []
    seen = set()
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        q = BenchmarkQuestion(
            qid=rec["qid"],
            text=rec["text"],
            category=rec["category"],
            gold_papers=tuple(rec["gold_papers"]) if rec.get("gold_papers") else None,
        )
        if q.qid in seen:
            raise EvalError(f"duplicate qid {q.qid} at line {lineno}")
        seen.add(q.qid)
        questions.append(q)
    return questions


@dataclass(frozen=True)
class EvalScore:
    value: float
    rationale: str
    run_index: int
    k: int | None = None

    def __post_init__(self):
        if self.value not in RUBRIC_VALUES:
            raise EvalError(f"score must be one of {RUBRIC_VALUES}, got {self.value}")


def _parse_judge_response(raw: str) -> tuple[float, str]:
    from .planner import extract_first_object

    try:
        data = json.loads(extract_first_object(raw))
        value = float(data["score"])
        rationale = str(data.get("rationale", ""))
    except Exception as exc:
        raise JudgeError(f"unparseable judge response: {exc}") from exc
    if value not in RUBRIC_VALUES:
        raise JudgeError(f"judge score {value} outside rubric {RUBRIC_VALUES}")
    return value, rationale


def _ask_judge(system: str, user: str, judge: ChatProvider) -> tuple[float, str]:
    raw = judge.complete(system, user)
    try:
        return _parse_judge_response(raw)
    except JudgeError as first:
        reprompt = (
            user
            + "\nYour previous reply could not be scored: "
            + str(first)
            + '\nReply with exactly {"score": 0, 0.5 or 1, "rationale": "..."}.'
        )
        raw2 = judge.complete(system, reprompt)
        return _parse_judge_response(raw2)


def judge_sql(
    question: str,
    sql: str,
    exec_ok: bool,
    result_rows_text: str,
    judge: ChatProvider,
    run_index: int,
) -> EvalScore:
    """Three-level SQL correctness score; failed execution short-circuits
    to 0.0 without consulting the judge."""
    if not exec_ok:
        return EvalScore(0.0, "query failed to execute", run_index)
    user = (
        f"Question: {question}\n\nGenerated SQL:\n{sql}\n\n"
        f"Execution status: ok\nReturned rows:\n{result_rows_text}\n"
    )
    value, rationale = _ask_judge(load_text(JUDGE_SQL_RESOURCE), user, judge)
    return EvalScore(value, rationale, run_index)


def judge_groundedness(
    answer_text: str,
    evidence_context: str,
    judge: ChatProvider,
    run_index: int,
    k: int,
) -> EvalScore:
    """Three-level groundedness score against the evidence context
    (result table + top-k passages); an empty context short-circuits to 0."""
    context = evidence_context.strip()
    if not context or _context_is_empty(context):
        return EvalScore(0.0, "empty evidence context", run_index, k=k)
    user = (
        f"Context:\n{evidence_context}\n\nAnswer to grade:\n{answer_text}\n"
    )
    value, rationale = _ask_judge(load_text(JUDGE_GROUNDEDNESS_RESOURCE), user, judge)
    return EvalScore(value, rationale, run_index, k=k)


def _context_is_empty(context: str) -> bool:
    return "no rows" in context and "no passages" in context


# -- retrieval metrics ------------------------------------------------------


def _dedup(items) -> list:
    seen = set()
    out = []
    for it in items:
        if it not in seen:
            seen.add(it)
            out.append(it)
    return out


def precision_at_k(retrieved_docs, gold, k: int, dedup: bool = True) -> float:
    """|top-k ∩ gold| / min(k, |retrieved|); paper-level dedup by default."""
    if k < 1:
        raise EvalError(f"k must be >= 1, got {k}")
    docs = _dedup(retrieved_docs) if dedup else list(retrieved_docs)
    if not docs:
        logger.warning("precision_at_k over empty retrieval list")
        return 0.0
    top = docs[:k]
    hits = sum(1 for d in top if d in set(gold))
    return hits / min(k, len(docs))


def recall_at_k(retrieved_docs, gold, k: int, dedup: bool = True) -> float:
    """|top-k ∩ gold| / |gold|; error on empty gold (undefined)."""
    if k < 1:
        raise EvalError(f"k must be >= 1, got {k}")
    gold = set(gold)
    if not gold:
        raise EvalError("recall undefined for an empty gold set")
    docs = _dedup(retrieved_docs) if dedup else list(retrieved_docs)
    top = docs[:k]
    return sum(1 for d in top if d in gold) / len(gold)


def unique_docs_at_k(passages: list[RetrievedPassage], k: int) -> int:
    """Distinct source documents among the top-k passages."""
    if k < 1:
        raise EvalError(f"k must be >= 1, got {k}")
    return len({p.doc_id for p in passages[:k]})


# -- benchmark runner -------------------------------------------------------


@dataclass
class SystemHandle:
    """Everything the benchmark needs wired together (may be all-mock)."""

    store: PeakStore
    index: VectorIndex
    embedder: object
    planner_provider: ChatProvider
    synth_provider: ChatProvider
    judge_provider: ChatProvider
    row_limit: int = 50
    leg_timeout: float = 30.0


@dataclass
class QuestionResult:
    qid: int
    sql: str | None
    plan_failed: bool
    exec_ok: bool
    result: object = None  # executed ResultTable (None if plan/exec failed)
    retrieved_docs: list[str] = field(default_factory=list)
    citations_ok: bool = True
    retrieval: dict = field(default_factory=dict)  # k -> {metric: value}


@dataclass
class EvalReport:
    runs: int
    k_values: tuple[int, ...]
    qids: list[int]
    sql_scores: dict = field(default_factory=dict)  # run -> {qid: EvalScore}
    groundedness: dict = field(default_factory=dict)  # k -> run -> {qid: EvalScore}
    question_results: dict = field(default_factory=dict)  # qid -> QuestionResult
    aggregates: dict = field(default_factory=dict)

    def recompute_aggregates(self) -> dict:
        """Aggregates derived purely from the score matrices."""
        agg: dict = {"sql": {}, "groundedness": {}, "retrieval": {}}
        for run in range(1, self.runs + 1):
            scores = [self.sql_scores[run][qid].value for qid in self.qids]
            agg["sql"][run] = {
                "fully_correct_fraction": _mean([1.0 if s == 1.0 else 0.0 for s in scores]),
                "mean_score": _mean(scores),
            }
        for k in self.k_values:
            agg["groundedness"][k] = {}
            for run in range(1, self.runs + 1):
                scores = [self.groundedness[k][run][qid].value for qid in self.qids]
                agg["groundedness"][k][run] = {
                    "fully_grounded_fraction": _mean(
                        [1.0 if s == 1.0 else 0.0 for s in scores]
                    ),
                    "mean_score": _mean(scores),
                }
        with_gold = [
            q for q in self.qids if self.question_results[q].retrieval
        ]
        for k in RETRIEVAL_KS:
            if not with_gold:
                break
            agg["retrieval"][k] = {
                metric: _mean(
                    [self.question_results[q].retrieval[k][metric] for q in with_gold]
                )
                for metric in ("precision", "recall", "unique_docs")
            }
        return agg

    def to_text(self) -> str:
        """Diffable report: per-run matrices then aggregate blocks."""
        lines = ["benchmark report"]
        lines.append(f"runs: {self.runs}")
        lines.append(f"questions: {len(self.qids)}")
        lines.append(f"k_values: {', '.join(str(k) for k in self.k_values)}")
        lines.append("")
        lines.append("[sql scores]")
        header = "qid " + " ".join(f"run{r}" for r in range(1, self.runs + 1))
        lines.append(header)
        for qid in self.qids:
            row = [str(qid)] + [
                f"{self.sql_scores[r][qid].value:.1f}" for r in range(1, self.runs + 1)
            ]
            lines.append(" ".join(row))
        lines.append("")
        lines.append("[sql aggregates]")
        lines.append("run fully_correct mean")
        for run in range(1, self.runs + 1):
            a = self.aggregates["sql"][run]
            lines.append(
                f"{run} {a['fully_correct_fraction']:.6f} {a['mean_score']:.6f}"
            )
        for k in self.k_values:
            lines.append("")
            lines.append(f"[groundedness k={k}]")
            lines.append(header)
            for qid in self.qids:
                row = [str(qid)] + [
                    f"{self.groundedness[k][r][qid].value:.1f}"
                    for r in range(1, self.runs + 1)
                ]
                lines.append(" ".join(row))
            lines.append("")
            lines.append(f"[groundedness aggregates k={k}]")
            lines.append("run fully_grounded mean")
            for run in range(1, self.runs + 1):
                a = self.aggregates["groundedness"][k][run]
                lines.append(
                    f"{run} {a['fully_grounded_fraction']:.6f} {a['mean_score']:.6f}"
                )
        if self.aggregates.get("retrieval"):
            lines.append("")
            lines.append("[retrieval]")
            lines.append("qid k precision recall unique_docs")
            for qid in self.qids:
                qr = self.question_results[qid]
                for k in sorted(qr.retrieval):
                    m = qr.retrieval[k]
                    lines.append(
                        f"{qid} {k} {m['precision']:.6f} {m['recall']:.6f} "
                        f"{m['unique_docs']}"
                    )
            lines.append("")
            lines.append("[retrieval aggregates]")
            lines.append("k precision recall unique_docs")
            for k, m in sorted(self.aggregates["retrieval"].items()):
                lines.append(
                    f"{k} {m['precision']:.6f} {m['recall']:.6f} {m['unique_docs']:.6f}"
                )
        lines.append("")
        lines.append("[citations]")
        bad = [q for q in self.qids if not self.question_results[q].citations_ok]
        lines.append(f"questions with ungrounded citations: {len(bad)}")
        for qid in bad:
            lines.append(f"- qid {qid}")
        return "\n".join(lines) + "\n"


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values) if values else 0.0


def run_benchmark(
    questions: list[BenchmarkQuestion],
    system: SystemHandle,
    runs: int = 3,
    k_values: tuple[int, ...] = (10,),
    filters: ContextFilters | None = None,
) -> EvalReport:
    """Evaluate every question end to end: plan, execute both legs,
    synthesize per k, judge SQL per run and groundedness per (k, run),
    and compute retrieval metrics where gold papers exist.

    A question whose plan hard-fails scores 0.0 everywhere and the run
    continues. Deterministic under deterministic providers.
    """
    if runs < 1:
        raise EvalError(f"runs must be >= 1, got {runs}")
    if not k_values:
        raise EvalError("k_values must be non-empty")
    qids = [q.qid for q in questions]
    report = EvalReport(runs=runs, k_values=tuple(k_values), qids=qids)
    for run in range(1, runs + 1):
        report.sql_scores[run] = {}
    for k in k_values:
        report.groundedness[k] = {r: {} for r in range(1, runs + 1)}

    kmax = max(max(k_values), max(RETRIEVAL_KS))
    for question in questions:
        qr = QuestionResult(qid=question.qid, sql=None, plan_failed=False, exec_ok=False)
        report.question_results[question.qid] = qr
        try:
            qplan = plan(
                question.text, filters, system.planner_provider, system.row_limit
            )
        except Exception as exc:
            logger.warning("plan failed for qid %d: %s", question.qid, exc)
            qr.plan_failed = True
            for run in range(1, runs + 1):
                report.sql_scores[run][question.qid] = EvalScore(
                    0.0, f"plan failed: {exc}", run
                )
            for k in k_values:
                for run in range(1, runs + 1):
                    report.groundedness[k][run][question.qid] = EvalScore(
                        0.0, "plan failed", run, k=k
                    )
            continue

        qr.sql = qplan.sql
        evidence = execute_plan(
            qplan,
            system.store,
            system.index,
            system.embedder,
            k=kmax,
            leg_timeout=system.leg_timeout,
        )
        qr.exec_ok = evidence.table_error is None
        qr.result = evidence.table if qr.exec_ok else None
        rows_text = format_evidence(evidence.with_k(0)).split("[literature]")[0]
        for run in range(1, runs + 1):
            report.sql_scores[run][question.qid] = judge_sql(
                question.text,
                qplan.sql,
                qr.exec_ok,
                rows_text,
                system.judge_provider,
                run,
            )

        for k in k_values:
            ev_k = evidence.with_k(k)
            context = format_evidence(ev_k)
            answer = synthesize(question.text, ev_k, system.synth_provider)
            if k == max(k_values):
                qr.citations_ok = check_citations(answer, ev_k).all_grounded
            for run in range(1, runs + 1):
                report.groundedness[k][run][question.qid] = judge_groundedness(
                    answer.text, context, system.judge_provider, run, k
                )

        qr.retrieved_docs = _dedup([p.doc_id for p in evidence.passages])
        if question.gold_papers:
            for k in RETRIEVAL_KS:
                qr.retrieval[k] = {
                    "precision": precision_at_k(qr.retrieved_docs, question.gold_papers, k),
                    "recall": recall_at_k(qr.retrieved_docs, question.gold_papers, k),
                    "unique_docs": unique_docs_at_k(evidence.passages, k),
                }

    report.aggregates = report.recompute_aggregates()
    return report


class ScriptedJudgeProvider:
    """Judge mock: returns scripted scores in rotation (or a constant)."""

    def __init__(self, scores=1.0, rationale: str = "scripted"):
        if isinstance(scores, (int, float)):
            scores = [float(scores)]
        self._scores = [float(s) for s in scores]
        self._i = 0
        self.rationale = rationale
        self.calls = 0

    def complete(self, system: str, user: str) -> str:
        score = self._scores[self._i % len(self._scores)]
        self._i += 1
        self.calls += 1
        return json.dumps({"score": score, "rationale": self.rationale})

    def healthcheck(self) -> bool:
        return True
