"""Plan execution (two concurrent evidence legs) and cited answer synthesis."""

from __future__ import annotations

import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .errors import QAError
from .index import RetrievedPassage, VectorIndex
from .planner import QueryPlan
from .providers import ChatProvider
from .resources import load_text
from .store import PeakStore, ResultTable, validate_sql

logger = logging.getLogger(__name__)

SYNTHESIS_SYSTEM_RESOURCE = "synthesis_system_v1.txt"
SYNTHESIS_USER_RESOURCE = "synthesis_user_v1.txt"

DEFAULT_K = 10
DEFAULT_LEG_TIMEOUT = 30.0

_DATA_CITATION = re.compile(r"\(Data:\s*([^)]*)\)")
_SOURCE_CITATION = re.compile(r"\(Source:\s*([^)]*)\)")


@dataclass
class Evidence:
    """Joined result of both plan legs, with per-leg error markers."""

    table: ResultTable
    passages: list[RetrievedPassage]
    k: int
    table_error: str | None = None
    passages_error: str | None = None
    timings: dict = field(default_factory=dict)

    def ok(self) -> bool:
        return self.table_error is None or self.passages_error is None

    def with_k(self, k: int) -> "Evidence":
        """Prefix slice of the passage list; exact search makes the top-k
        of a larger search identical to a direct top-k search."""
        return replace(self, k=k, passages=self.passages[:k])

    def to_json(self) -> dict:
        return {
            "table": self.table.to_json(),
            "passages": [p.to_json() for p in self.passages],
            "k": self.k,
            "table_error": self.table_error,
            "passages_error": self.passages_error,
        }


def execute_plan(
    plan: QueryPlan,
    store: PeakStore,
    index: VectorIndex,
    embedder,
    k: int = DEFAULT_K,
    leg_timeout: float = DEFAULT_LEG_TIMEOUT,
    parallel: bool = True,
) -> Evidence:
    """Run the SQL leg and the retrieval leg, concurrently by default.

    A failed leg is recorded as an error marker instead of raising; only
    both legs failing is a hard error.
    """
    row_limit = plan.validated.row_limit if plan.validated else 50

    def sql_leg() -> ResultTable:
        return store.execute_sql(validate_sql(plan.sql, row_limit=row_limit))

    def search_leg() -> list[RetrievedPassage]:
        return index.search(embedder.embed(plan.lit_query), k)

    table = ResultTable(columns=[], rows=[])
    passages: list[RetrievedPassage] = []
    table_error = passages_error = None
    timings: dict = {}

    if parallel:
        pool = ThreadPoolExecutor(max_workers=2)
        try:
            t0 = time.perf_counter()
            sql_future = pool.submit(sql_leg)
            search_future = pool.submit(search_leg)
            try:
                table = sql_future.result(timeout=leg_timeout)
            except Exception as exc:
                table_error = str(exc) or type(exc).__name__
            timings["sql_s"] = time.perf_counter() - t0
            try:
                passages = search_future.result(timeout=leg_timeout)
            except Exception as exc:
                passages_error = str(exc) or type(exc).__name__
            timings["search_s"] = time.perf_counter() - t0
        finally:
            # don't let a hung leg block the caller past its timeout
            pool.shutdown(wait=False, cancel_futures=True)
    else:
        t0 = time.perf_counter()
        try:
            table = sql_leg()
        except Exception as exc:
            table_error = str(exc) or type(exc).__name__
        timings["sql_s"] = time.perf_counter() - t0
        t1 = time.perf_counter()
        try:
            passages = search_leg()
        except Exception as exc:
            passages_error = str(exc) or type(exc).__name__
        timings["search_s"] = time.perf_counter() - t1

    if table_error is not None and passages_error is not None:
        raise QAError(
            f"both evidence legs failed: sql: {table_error}; search: {passages_error}"
        )
    if table_error is not None:
        logger.warning("sql leg failed: %s", table_error)
    if passages_error is not None:
        logger.warning("search leg failed: %s", passages_error)
    return Evidence(
        table=table,
        passages=passages,
        k=k,
        table_error=table_error,
        passages_error=passages_error,
        timings=timings,
    )


def _format_cell(value) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_evidence(ev: Evidence) -> str:
    """Deterministic prompt rendering: aligned table, then numbered passages."""
    lines = ["[data]"]
    if ev.table_error is not None:
        lines.append(f"sql leg failed: {ev.table_error}")
    elif not ev.table.rows:
        lines.append("no rows")
    else:
        cells = [[_format_cell(v) for v in row] for row in ev.table.rows]
        headers = ev.table.columns or [
            f"col{i}" for i in range(len(cells[0]))
        ]
        widths = [
            max(len(headers[i]), max(len(row[i]) for row in cells))
            for i in range(len(headers))
        ]
        lines.append(" | ".join(h.ljust(w) for h, w in zip(headers, widths)))
        lines.append("-+-".join("-" * w for w in widths))
        for row in cells:
            lines.append(" | ".join(v.ljust(w) for v, w in zip(row, widths)))
        if ev.table.truncated:
            lines.append(
                f"(truncated: showing {len(ev.table.rows)} of "
                f"~{ev.table.total_row_estimate} rows)"
            )
    lines.append("")
    lines.append("[literature]")
    if ev.passages_error is not None:
        lines.append(f"search leg failed: {ev.passages_error}")
    elif not ev.passages:
        lines.append("no passages")
    else:
        for i, p in enumerate(ev.passages, start=1):
            section = f", section: {p.section}" if p.section else ""
            lines.append(f'[{i}] "{p.title}" (page {p.page}, score {p.score:.4f}{section})')
            lines.append(p.text)
    return "\n".join(lines)


@dataclass
class SynthesizedAnswer:
    text: str
    data_citations: list[str]
    literature_citations: list[str]
    provider_raw: str
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "data_citations": self.data_citations,
            "literature_citations": self.literature_citations,
            "provider_raw": self.provider_raw,
            "warnings": self.warnings,
        }


def synthesize(question: str, ev: Evidence, provider: ChatProvider) -> SynthesizedAnswer:
    """Ask the synthesis provider for a cited answer over the evidence.

    Literature citations are extracted from (Source: ...) markers plus
    verbatim title mentions; titles that do not appear among the evidence
    passages are stripped with a warning rather than failing the request.
    """
    if not ev.ok():
        raise QAError("cannot synthesize: both evidence legs failed")
    user = load_text(SYNTHESIS_USER_RESOURCE).format(
        question=question, evidence=format_evidence(ev)
    )
    raw = provider.complete(load_text(SYNTHESIS_SYSTEM_RESOURCE), user)
    if not raw or not raw.strip():
        raise QAError("synthesis provider returned an empty answer")

    titles = [p.title for p in ev.passages]
    data_citations = [m.strip() for m in _DATA_CITATION.findall(raw)]
    candidates = [m.strip() for m in _SOURCE_CITATION.findall(raw)]
    for title in titles:
        if title in raw and title not in candidates:
            candidates.append(title)

    warnings: list[str] = []
    literature_citations: list[str] = []
    for cand in candidates:
        if cand in titles:
            if cand not in literature_citations:
                literature_citations.append(cand)
        else:
            warnings.append(f"ungrounded citation stripped: {cand!r}")
    return SynthesizedAnswer(
        text=raw,
        data_citations=data_citations,
        literature_citations=literature_citations,
        provider_raw=raw,
        warnings=warnings,
    )


@dataclass
class CitationReport:
    entries: list[tuple[str, str, bool]]  # (kind, citation, grounded)

    @property
    def all_grounded(self) -> bool:
        return all(g for _, _, g in self.entries)

    @property
    def ungrounded(self) -> list[tuple[str, str]]:
        return [(kind, c) for kind, c, g in self.entries if not g]


def check_citations(ans: SynthesizedAnswer, ev: Evidence) -> CitationReport:
    """Grounding report: literature citations must name evidence passage
    titles; data citations need a live, non-empty result table."""
    entries: list[tuple[str, str, bool]] = []
    titles = {p.title for p in ev.passages}
    for cand in _SOURCE_CITATION.findall(ans.text):
        entries.append(("literature", cand.strip(), cand.strip() in titles))
    for cand in _DATA_CITATION.findall(ans.text):
        grounded = ev.table_error is None and bool(ev.table.rows)
        entries.append(("data", cand.strip(), grounded))
    return CitationReport(entries=entries)


class MockSynthesisProvider:
    """Deterministic synthesizer that echoes the evidence it was given:
    cites the result table when it has rows and every retrieved title."""

    _TITLE_LINE = re.compile(r'^\[\d+\] "(.*)" \(page \d+', re.MULTILINE)

    def complete(self, system: str, user: str) -> str:
        titles: list[str] = []
        for t in self._TITLE_LINE.findall(user):
            if t not in titles:
                titles.append(t)
        parts = []
        if "\nno rows" in user or "sql leg failed" in user:
            parts.append("The structured query returned no usable rows.")
        else:
            parts.append(
                "The structured query results are summarized above "
                "(Data: result table rows)."
            )
        if titles:
            for t in titles:
                parts.append(f'Supporting literature: "{t}" (Source: {t}).')
        else:
            parts.append("No literature passages were retrieved.")
        return "\n".join(parts)

    def healthcheck(self) -> bool:
        return True
