"""Document extraction and overlapping-window chunking.

Tokenization for chunking is whitespace-delimited, which keeps chunk
coordinates deterministic and dependency-free. Extraction sits behind a
small extractor registry; plain text (pages separated by form feeds) is
always available, and a PDF adapter can be registered where a PDF library
is installed.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable

from .errors import CorpusError

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 1000
DEFAULT_CHUNK_OVERLAP = 150

# A heading is a numbered line ("2.", "3.1 Results") or a short line in
# all capitals; purely best-effort.
_NUMBERED_HEADING = re.compile(r"^\s*\d+(\.\d+)*[.)]?\s+\S+")
_CAPS_HEADING = re.compile(r"^[A-Z][A-Z0-9 \-:]{2,79}$")


@dataclass(frozen=True)
class SourceDocument:
    doc_id: str
    title: str
    pages: tuple[str, ...]
    origin: str = ""

    def __post_init__(self):
        if not self.doc_id:
            raise CorpusError("doc_id must be non-empty")
        if not self.title:
            raise CorpusError(f"document {self.doc_id!r} has an empty title")


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    text: str
    token_span: tuple[int, int]
    page: int = 0
    section: str | None = None


def extract_plain_text(data: bytes) -> list[str]:
    """Plain-text extractor: pages are form-feed separated."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusError(f"not valid UTF-8 text: {exc}") from exc
    return text.split("\f")


EXTRACTORS: dict[str, Callable[[bytes], list[str]]] = {
    "text": extract_plain_text,
}

try:  # optional PDF adapter; absent in minimal installs
    import fitz  # type: ignore

    def _extract_pdf(data: bytes) -> list[str]:
        with fitz.open(stream=data, filetype="pdf") as doc:
            return [page.get_text() for page in doc]

    EXTRACTORS["pdf"] = _extract_pdf
except ImportError:
    pass


def extract_text(
    data: bytes,
    title: str,
    doc_id: str,
    origin: str = "",
    extractor: str = "text",
) -> SourceDocument:
    """Extract page-ordered text from raw document bytes.

    Empty extraction is an error; pages without any tokens are preserved
    as empty strings with a warning.
    """
    fn = EXTRACTORS.get(extractor)
    if fn is None:
        raise CorpusError(
            f"no {extractor!r} extractor available (have: {sorted(EXTRACTORS)})"
        )
    if not data:
        raise CorpusError(f"document {doc_id!r}: empty input")
    try:
        raw_pages = fn(data)
    except CorpusError:
        raise
    except Exception as exc:
        raise CorpusError(f"document {doc_id!r}: extraction failed: {exc}") from exc
    pages = tuple(p if p.strip() else "" for p in raw_pages)
    if not pages:
        raise CorpusError(f"document {doc_id!r}: extraction produced no pages")
    if all(not p for p in pages):
        logger.warning(
            "document %r: all %d pages empty (image-only source?)", doc_id, len(pages)
        )
    return SourceDocument(doc_id=doc_id, title=title, pages=pages, origin=origin)


class _DocTokens:
    """Token-coordinate view of a document: flat token list, the page each
    token starts on, and heading positions."""

    def __init__(self, doc: SourceDocument):
        self.tokens: list[str] = []
        self.token_page: list[int] = []
        self.headings: list[tuple[int, str]] = []  # (first token index, text)
        for page_no, page in enumerate(doc.pages):
            for line in page.splitlines():
                line_tokens = line.split()
                if line_tokens and _is_heading(line):
                    self.headings.append((len(self.tokens), line.strip()))
                for tok in line_tokens:
                    self.tokens.append(tok)
                    self.token_page.append(page_no)

    def page_of(self, token_index: int) -> int:
        if not self.token_page:
            return 0
        token_index = min(token_index, len(self.token_page) - 1)
        return self.token_page[token_index]

    def section_of(self, token_index: int) -> str | None:
        current = None
        for pos, text in self.headings:
            if pos <= token_index:
                current = text
            else:
                break
        return current


def _is_heading(line: str) -> bool:
    line = line.strip()
    if _NUMBERED_HEADING.match(line) and len(line.split()) <= 12:
        return True
    return bool(_CAPS_HEADING.match(line))


def chunk_text(
    doc: SourceDocument,
    size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_CHUNK_OVERLAP,
) -> list[Chunk]:
    """Split a document into overlapping token windows.

    Chunk i covers tokens [i*stride, i*stride + size) with
    stride = size - overlap, clipped at the document end; the final chunk
    may be short. A document of <= size tokens yields exactly one chunk.
    """
    if size < 1:
        raise CorpusError(f"chunk size must be >= 1, got {size}")
    if not 0 <= overlap < size:
        raise CorpusError(f"overlap must satisfy 0 <= overlap < size, got {overlap}")
    toks = _DocTokens(doc)
    n = len(toks.tokens)
    if n == 0:
        return []
    stride = size - overlap
    chunks: list[Chunk] = []
    start = 0
    index = 0
    while True:
        end = min(start + size, n)
        chunks.append(
            Chunk(
                chunk_id=f"{doc.doc_id}:{index:04d}",
                doc_id=doc.doc_id,
                text=" ".join(toks.tokens[start:end]),
                token_span=(start, end),
            )
        )
        if end >= n:
            break
        start += stride
        index += 1
    return chunks


def attach_metadata(chunk: Chunk, doc: SourceDocument) -> Chunk:
    """Fill page and section for a chunk from its source document.

    Page is the page of the span's first token; section is the nearest
    preceding detected heading, or None.
    """
    toks = _DocTokens(doc)
    start = chunk.token_span[0]
    if start >= len(toks.tokens):
        raise CorpusError(
            f"chunk {chunk.chunk_id}: span {chunk.token_span} outside document"
        )
    return replace(chunk, page=toks.page_of(start), section=toks.section_of(start))


def chunk_document(
    doc: SourceDocument,
    size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_CHUNK_OVERLAP,
) -> list[Chunk]:
    """chunk_text + attach_metadata in one pass (shared tokenization)."""
    toks = _DocTokens(doc)
    return [
        replace(c, page=toks.page_of(c.token_span[0]), section=toks.section_of(c.token_span[0]))
        for c in chunk_text(doc, size=size, overlap=overlap)
    ]


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    title: str
    doc_id: str


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    """Corpus manifest: JSONL of {"path", "title", "doc_id"} records."""
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                entry = ManifestEntry(
                    path=rec["path"], title=rec["title"], doc_id=rec["doc_id"]
                )
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise CorpusError(f"{path}:{lineno}: bad manifest entry: {exc}") from exc
            if entry.doc_id in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate doc_id {entry.doc_id!r}")
            seen.add(entry.doc_id)
            entries.append(entry)
    if not entries:
        raise CorpusError(f"{path}: empty manifest")
    return entries


def write_chunk_records(
    path: str | Path, chunks: Iterable[tuple[Chunk, str]]
) -> int:
    """Write (chunk, title) pairs as JSONL records for the index builder."""
    count = 0
    with Path(path).open("w", encoding="utf-8") as fh:
        for chunk, title in chunks:
            fh.write(
                json.dumps(
                    {
                        "chunk_id": chunk.chunk_id,
                        "doc_id": chunk.doc_id,
                        "title": title,
                        "page": chunk.page,
                        "section": chunk.section,
                        "token_span": list(chunk.token_span),
                        "text": chunk.text,
                    }
                )
            )
            fh.write("\n")
            count += 1
    return count


def read_chunk_records(path: str | Path) -> list[dict]:
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: bad chunk record: {exc}") from exc
    return records
