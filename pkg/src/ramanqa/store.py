"""Relational store for samples and peaks, plus SELECT-only SQL validation.

The backing engine is embedded SQLite behind the ``PeakStore`` interface.
Validation is parser-based: candidate SQL is prepared against a scratch
in-memory schema under an authorizer that only permits read actions, so
statement kind and referenced tables come from the engine's own parse, with
a keyword denylist retained as defense in depth.
"""

from __future__ import annotations

import hashlib
import re
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import IngestError, SqlExecutionError, SqlValidationError, StoreError
from .families import FAMILY_NAMES

ALLOWED_TABLES = frozenset({"samples", "peaks"})
DEFAULT_ROW_LIMIT = 50

# Hard ceiling on rows pulled from the engine regardless of row_limit, so a
# runaway cross join cannot exhaust memory.
_FETCH_CEILING = 1_000_000

_DENYLIST = re.compile(
    r"\b(insert|update|delete|drop|alter|create|replace|truncate|attach|detach|"
    r"pragma|vacuum|reindex|analyze|grant|revoke|merge|transaction|commit|rollback)\b",
    re.IGNORECASE,
)

_SCHEMA_SQL = (
    """
    CREATE TABLE IF NOT EXISTS samples (
        id INTEGER PRIMARY KEY,
        ts INTEGER NOT NULL,
        x  INTEGER NOT NULL,
        y  INTEGER NOT NULL,
        UNIQUE (ts, x, y)
    )
    """,
    """
    CREATE TABLE IF NOT EXISTS peaks (
        id INTEGER PRIMARY KEY,
        sample_id INTEGER NOT NULL REFERENCES samples(id),
        family TEXT NOT NULL CHECK (family IN
            ('a1g_c','a1g_d','eg','d','g','u1','u2','u3')),
        center REAL NOT NULL,
        height REAL NOT NULL,
        width  REAL NOT NULL,
        UNIQUE (sample_id, family)
    )
    """,
)


@dataclass(frozen=True)
class SampleRow:
    id: int
    ts: int
    x: int
    y: int


@dataclass(frozen=True)
class PeakRow:
    id: int
    sample_id: int
    family: str
    center: float
    height: float
    width: float


@dataclass(frozen=True)
class ValidatedQuery:
    """A SELECT statement that passed safety validation."""

    text: str
    referenced_tables: frozenset[str]
    row_limit: int = DEFAULT_ROW_LIMIT


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[tuple]
    truncated: bool = False
    total_row_estimate: int = 0

    def to_json(self) -> dict:
        return {
            "columns": self.columns,
            "rows": [list(r) for r in self.rows],
            "truncated": self.truncated,
            "total_row_estimate": self.total_row_estimate,
        }


def strip_strings_and_comments(sql: str) -> str:
    """Replace string/identifier literals and comments with placeholders.

    Used so the keyword scan and statement split cannot be fooled by
    content smuggled inside literals or comments.
    """
    out = []
    i = 0
    n = len(sql)
    while i < n:
        c = sql[i]
        if c == "'" or c == '"' or c == "`":
            quote = c
            j = i + 1
            while j < n:
                if sql[j] == quote:
                    if j + 1 < n and sql[j + 1] == quote:  # doubled escape
                        j += 2
                        continue
                    break
                j += 1
            out.append(" str ")
            i = j + 1
        elif c == "[":
            j = sql.find("]", i + 1)
            j = n if j < 0 else j
            out.append(" str ")
            i = j + 1
        elif c == "-" and sql.startswith("--", i):
            j = sql.find("\n", i)
            j = n if j < 0 else j
            out.append(" ")
            i = j
        elif c == "/" and sql.startswith("/*", i):
            j = sql.find("*/", i + 2)
            j = n - 2 if j < 0 else j
            out.append(" ")
            i = j + 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _collecting_authorizer(tables: set[str]):
    """Authorizer permitting read-only actions, recording read tables."""
    ok_actions = {
        sqlite3.SQLITE_SELECT,
        sqlite3.SQLITE_READ,
        getattr(sqlite3, "SQLITE_FUNCTION", 31),
    }

    def authorize(action, arg1, arg2, dbname, source):
        if action == sqlite3.SQLITE_READ:
            if arg1:
                tables.add(arg1)
            return sqlite3.SQLITE_OK
        if action in ok_actions:
            return sqlite3.SQLITE_OK
        return sqlite3.SQLITE_DENY

    return authorize


def validate_sql(text: str, row_limit: int = DEFAULT_ROW_LIMIT) -> ValidatedQuery:
    """Accept a single SELECT over the allowed tables; reject everything else.

    Raises SqlValidationError with the rejection reason otherwise.
    """
    if not text or not text.strip():
        raise SqlValidationError("empty SQL", text)
    stripped = strip_strings_and_comments(text)

    body = stripped.rstrip()
    if body.endswith(";"):
        body = body[:-1]
    if ";" in body:
        raise SqlValidationError("multiple statements are not allowed", text)

    hit = _DENYLIST.search(stripped)
    if hit:
        raise SqlValidationError(
            f"disallowed keyword {hit.group().upper()!r}", text
        )

    first = body.strip().split(None, 1)
    first_word = first[0].upper() if first else ""
    if first_word not in ("SELECT", "WITH"):
        raise SqlValidationError(
            f"only SELECT statements are allowed, got {first_word or 'nothing'}", text
        )

    tables: set[str] = set()
    conn = sqlite3.connect(":memory:")
    try:
        for ddl in _SCHEMA_SQL:
            conn.execute(ddl)
        conn.set_authorizer(_collecting_authorizer(tables))
        try:
            conn.execute(text)
        except sqlite3.OperationalError as exc:
            message = str(exc)
            m = re.search(r"no such table: (\S+)", message)
            if m:
                raise SqlValidationError(f"unknown table: {m.group(1)}", text) from exc
            raise SqlValidationError(f"parse error: {message}", text) from exc
        except sqlite3.DatabaseError as exc:
            raise SqlValidationError(f"unsafe operation: {exc}", text) from exc
        except sqlite3.Warning as exc:
            raise SqlValidationError(str(exc), text) from exc
    finally:
        conn.close()

    unknown = tables - ALLOWED_TABLES
    if unknown:
        raise SqlValidationError(
            f"unknown table: {', '.join(sorted(unknown))}", text
        )
    return ValidatedQuery(text=text, referenced_tables=frozenset(tables), row_limit=row_limit)


class PeakStore:
    """File-backed store; every operation opens its own connection, so
    instances are safe to share across threads."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def _connect(self, readonly: bool = False) -> sqlite3.Connection:
        if readonly:
            if not self.path.exists():
                raise StoreError(f"store not initialized: {self.path}")
            conn = sqlite3.connect(
                f"file:{self.path}?mode=ro", uri=True, check_same_thread=False
            )
        else:
            try:
                conn = sqlite3.connect(self.path, check_same_thread=False)
            except sqlite3.OperationalError as exc:
                raise StoreError(f"cannot open store at {self.path}: {exc}") from exc
        conn.execute("PRAGMA busy_timeout = 5000")
        conn.execute("PRAGMA foreign_keys = ON")
        return conn

    def init_schema(self) -> None:
        """Create both tables; idempotent on an existing schema."""
        try:
            conn = self._connect()
            with conn:
                for ddl in _SCHEMA_SQL:
                    conn.execute(ddl)
            conn.close()
        except sqlite3.OperationalError as exc:
            raise StoreError(f"cannot initialize schema at {self.path}: {exc}") from exc

    def insert_scan(
        self, samples: Sequence[SampleRow], peaks: Sequence[PeakRow]
    ) -> tuple[int, int]:
        """Insert a batch atomically; returns (samples_inserted, peaks_inserted).

        Rejects duplicate (ts, x, y), peaks referencing samples neither in
        the batch nor already stored, and families outside the allowlist.
        Nothing is inserted on rejection.
        """
        seen_pos: set[tuple[int, int, int]] = set()
        for s in samples:
            pos = (s.ts, s.x, s.y)
            if pos in seen_pos:
                raise IngestError(f"duplicate (ts, x, y) in batch: {pos}")
            seen_pos.add(pos)
        batch_ids = {s.id for s in samples}
        for p in peaks:
            if p.family not in FAMILY_NAMES:
                raise IngestError(f"unknown family {p.family!r}")

        conn = self._connect()
        try:
            known = {r[0] for r in conn.execute("SELECT id FROM samples")}
            for p in peaks:
                if p.sample_id not in batch_ids and p.sample_id not in known:
                    raise IngestError(
                        f"peak {p.id} references unknown sample {p.sample_id}"
                    )
            try:
                with conn:
                    conn.executemany(
                        "INSERT INTO samples (id, ts, x, y) VALUES (?, ?, ?, ?)",
                        [(s.id, s.ts, s.x, s.y) for s in samples],
                    )
                    conn.executemany(
                        "INSERT INTO peaks (id, sample_id, family, center, height, width)"
                        " VALUES (?, ?, ?, ?, ?, ?)",
                        [
                            (p.id, p.sample_id, p.family, p.center, p.height, p.width)
                            for p in peaks
                        ],
                    )
            except sqlite3.IntegrityError as exc:
                raise IngestError(f"batch rejected: {exc}") from exc
            except sqlite3.OperationalError as exc:
                raise StoreError(str(exc)) from exc
        finally:
            conn.close()
        return len(samples), len(peaks)

    def execute_sql(self, query: ValidatedQuery) -> ResultTable:
        """Run a validated query read-only; rows capped at query.row_limit."""
        conn = self._connect(readonly=True)
        conn.set_authorizer(_collecting_authorizer(set()))
        try:
            try:
                cursor = conn.execute(query.text)
                columns = (
                    [d[0] for d in cursor.description] if cursor.description else []
                )
                rows: list[tuple] = []
                while len(rows) <= _FETCH_CEILING:
                    chunk = cursor.fetchmany(10_000)
                    if not chunk:
                        break
                    rows.extend(chunk)
            except sqlite3.Error as exc:
                raise SqlExecutionError(str(exc)) from exc
            total = len(rows)
            truncated = total > query.row_limit
            return ResultTable(
                columns=columns,
                rows=rows[: query.row_limit],
                truncated=truncated,
                total_row_estimate=total,
            )
        finally:
            conn.close()

    def digest(self) -> str:
        """Content hash over both tables; unchanged digest == unchanged store."""
        conn = self._connect(readonly=True)
        try:
            h = hashlib.sha256()
            for row in conn.execute("SELECT * FROM samples ORDER BY id"):
                h.update(repr(row).encode())
            for row in conn.execute("SELECT * FROM peaks ORDER BY id"):
                h.update(repr(row).encode())
            return h.hexdigest()
        finally:
            conn.close()

    def counts(self) -> tuple[int, int]:
        conn = self._connect(readonly=True)
        try:
            ns = conn.execute("SELECT COUNT(*) FROM samples").fetchone()[0]
            np_ = conn.execute("SELECT COUNT(*) FROM peaks").fetchone()[0]
            return ns, np_
        finally:
            conn.close()


def rows_from_truth(record, id_start: int = 1) -> tuple[list[SampleRow], list[PeakRow]]:
    """Convert a synthetic scan truth record into insertable rows.

    Samples are numbered in first-appearance order of (ts, x, y); every
    planted peak becomes one PeakRow with its exact planted parameters.
    """
    sample_ids: dict[tuple[int, int, int], int] = {}
    samples: list[SampleRow] = []
    peaks: list[PeakRow] = []
    next_sample = id_start
    next_peak = id_start
    for rec in record.planted:
        pos = (rec.ts, rec.x, rec.y)
        if pos not in sample_ids:
            sample_ids[pos] = next_sample
            samples.append(SampleRow(id=next_sample, ts=rec.ts, x=rec.x, y=rec.y))
            next_sample += 1
        peaks.append(
            PeakRow(
                id=next_peak,
                sample_id=sample_ids[pos],
                family=rec.family,
                center=rec.center,
                height=rec.height,
                width=rec.width,
            )
        )
        next_peak += 1
    return samples, peaks
