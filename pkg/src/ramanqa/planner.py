"""Question -> QueryPlan: schema-aware prompting, response parsing, and
validation with one repair round-trip.

The planner asks a chat provider for a JSON object with exactly two string
fields ("sql", "lit_query"), validates the SQL through the store's safety
validator, and, on rejection, retries once with the rejection reason
appended before giving up.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import PlanError, PlanParseError
from .families import FAMILY_NAMES
from .providers import ChatProvider
from .resources import load_text
from .store import ValidatedQuery, validate_sql

PLANNER_SYSTEM_RESOURCE = "planner_system_v1.txt"


@dataclass(frozen=True)
class ContextFilters:
    """User-supplied filters carried alongside the question."""

    ts_range: tuple[int, int] | None = None
    coords: tuple[tuple[int, int], ...] | None = None
    families: tuple[str, ...] | None = None
    qualifiers: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.ts_range is not None:
            lo, hi = self.ts_range
            if lo > hi:
                raise PlanError(f"ts_range must be ordered, got ({lo}, {hi})")
        if self.families is not None:
            bad = set(self.families) - FAMILY_NAMES
            if bad:
                raise PlanError(f"unknown families in filter: {sorted(bad)}")

    def is_empty(self) -> bool:
        return not (self.ts_range or self.coords or self.families or self.qualifiers)

    def to_json(self) -> dict:
        return {
            "ts_range": list(self.ts_range) if self.ts_range else None,
            "coords": [list(c) for c in self.coords] if self.coords else None,
            "families": list(self.families) if self.families else None,
            "qualifiers": list(self.qualifiers) if self.qualifiers else None,
        }

    @classmethod
    def from_json(cls, data: dict | None) -> "ContextFilters":
        if not data:
            return cls()
        return cls(
            ts_range=tuple(data["ts_range"]) if data.get("ts_range") else None,
            coords=tuple(tuple(c) for c in data["coords"]) if data.get("coords") else None,
            families=tuple(data["families"]) if data.get("families") else None,
            qualifiers=tuple(data["qualifiers"]) if data.get("qualifiers") else None,
        )

    def describe(self) -> str:
        """Human-readable constraints block for the planner prompt."""
        if self.is_empty():
            return "no filters"
        lines = []
        if self.ts_range:
            lines.append(f"- timesteps between {self.ts_range[0]} and {self.ts_range[1]}")
        if self.coords:
            coords = ", ".join(f"({x},{y})" for x, y in self.coords)
            lines.append(f"- only coordinates: {coords}")
        if self.families:
            lines.append(f"- only peak families: {', '.join(self.families)}")
        if self.qualifiers:
            for q in self.qualifiers:
                lines.append(f"- qualifier: {q}")
        return "\n".join(lines)


@dataclass(frozen=True)
class PlannerPrompt:
    system: str
    user: str


@dataclass
class QueryPlan:
    sql: str
    lit_query: str
    applied_filters: ContextFilters = field(default_factory=ContextFilters)
    planner_raw: str = ""
    fallback: bool = False
    validated: ValidatedQuery | None = None

    def to_json(self) -> dict:
        return {
            "sql": self.sql,
            "lit_query": self.lit_query,
            "applied_filters": self.applied_filters.to_json(),
            "planner_raw": self.planner_raw,
            "fallback": self.fallback,
        }


def build_prompt(question: str, filters: ContextFilters | None = None) -> PlannerPrompt:
    """Compose the schema-aware planner prompt.

    The system text carries the schema block and both few-shot exemplars
    (derived-ratio self-join, cross-timestep samples self-join); the user
    text carries the question plus the serialized filters.
    """
    if not question or not question.strip():
        raise PlanError("question must be non-empty")
    filters = filters or ContextFilters()
    user = (
        f"Question: {question.strip()}\n\n"
        f"Filters: {json.dumps(filters.to_json(), sort_keys=True)}\n"
        f"Constraints:\n{filters.describe()}\n"
    )
    return PlannerPrompt(system=load_text(PLANNER_SYSTEM_RESOURCE), user=user)


def extract_first_object(raw: str) -> str:
    """Return the first balanced top-level {...} block in ``raw``.

    Scans bracket depth while honoring JSON string literals and escapes, so
    prose around the object or braces inside strings cannot derail it.
    """
    start = raw.find("{")
    if start < 0:
        raise PlanParseError("no JSON object found in planner response")
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(raw)):
        c = raw[i]
        if in_string:
            if escaped:
                escaped = False
            elif c == "\\":
                escaped = True
            elif c == '"':
                in_string = False
        elif c == '"':
            in_string = True
        elif c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return raw[start : i + 1]
    raise PlanParseError("unbalanced JSON object in planner response")


def parse_plan_response(raw: str) -> QueryPlan:
    """Extract sql and lit_query from a provider response; keep raw verbatim."""
    if not raw or not raw.strip():
        raise PlanParseError("empty planner response")
    block = extract_first_object(raw)
    try:
        data = json.loads(block)
    except json.JSONDecodeError as exc:
        raise PlanParseError(f"planner response is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise PlanParseError("planner response must be a JSON object")
    for fieldname in ("sql", "lit_query"):
        value = data.get(fieldname)
        if not isinstance(value, str) or not value.strip():
            raise PlanParseError(f"planner response missing field {fieldname!r}")
    return QueryPlan(
        sql=data["sql"].strip(),
        lit_query=data["lit_query"].strip(),
        planner_raw=raw,
        fallback=bool(data.get("fallback", False)),
    )


def plan(
    question: str,
    filters: ContextFilters | None,
    provider: ChatProvider,
    row_limit: int = 50,
) -> QueryPlan:
    """Produce a validated QueryPlan, with one repair round-trip.

    The returned plan's SQL has passed the store validator; the provider's
    raw output is preserved byte-for-byte for transcripts.
    """
    filters = filters or ContextFilters()
    prompt = build_prompt(question, filters)
    raw = provider.complete(prompt.system, prompt.user)
    try:
        return _finish(raw, filters, row_limit)
    except (PlanParseError, PlanError) as first_error:
        reason = str(first_error)
        repair_user = (
            prompt.user
            + f"\nYour previous response was rejected: {reason}\n"
            + f"Previous response:\n{raw}\n"
            + "Respond again with a corrected JSON object."
        )
        raw2 = provider.complete(prompt.system, repair_user)
        try:
            return _finish(raw2, filters, row_limit)
        except (PlanParseError, PlanError) as second_error:
            raise PlanError(
                f"planner failed twice: first: {reason}; then: {second_error}"
            ) from second_error


def _finish(raw: str, filters: ContextFilters, row_limit: int) -> QueryPlan:
    result = parse_plan_response(raw)
    try:
        validated = validate_sql(result.sql, row_limit=row_limit)
    except Exception as exc:
        raise PlanError(f"SQL rejected: {exc}") from exc
    result.applied_filters = filters
    result.validated = validated
    return result


# -- deterministic mock provider ------------------------------------------

FALLBACK_SQL = (
    "SELECT s.ts, COUNT(*) AS n_samples FROM samples s "
    "WHERE {ts_pred} GROUP BY s.ts ORDER BY s.ts"
)

_FILTER_LINE = re.compile(r"^Filters: (\{.*\})$", re.MULTILINE)


def _ts_predicate(filters: ContextFilters) -> str:
    if filters.ts_range is None:
        return "1=1"
    lo, hi = filters.ts_range
    return f"(s.ts >= {lo} AND s.ts <= {hi})"


def instantiate_template(sql_template: str, filters: ContextFilters) -> str:
    return sql_template.replace("{ts_pred}", _ts_predicate(filters))


def load_mock_templates() -> list[dict]:
    return json.loads(load_text("mock_templates.json"))


class MockPlannerProvider:
    """Pattern-matching planner: maps known question shapes to SQL and
    literature-query templates; unmatched questions get a flagged fallback.

    Filters are read back from the prompt's serialized Filters line, so
    timestep predicates land in the SQL just like a live planner would
    compile them.
    """

    def __init__(self, templates: list[dict] | None = None):
        self.templates = templates if templates is not None else load_mock_templates()
        self._compiled = [
            (re.compile(t["pattern"], re.IGNORECASE), t) for t in self.templates
        ]

    def complete(self, system: str, user: str) -> str:
        m = _FILTER_LINE.search(user)
        filters = ContextFilters.from_json(json.loads(m.group(1)) if m else None)
        for pattern, template in self._compiled:
            if pattern.search(user):
                return json.dumps(
                    {
                        "sql": instantiate_template(template["sql"], filters),
                        "lit_query": template["lit_query"],
                    }
                )
        question = user.split("\n", 1)[0].removeprefix("Question:").strip()
        return json.dumps(
            {
                "sql": instantiate_template(FALLBACK_SQL, filters),
                "lit_query": question or "raman battery spectra",
                "fallback": True,
            }
        )

    def healthcheck(self) -> bool:
        return True
