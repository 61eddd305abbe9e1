"""Exact top-k cosine similarity index with file persistence.

The index is a dense float64 matrix scanned linearly: at the target corpus
scale (tens of documents, a few thousand chunks) exact search is cheap and
reproducible, so no approximate structure is used. Ranking ties break by
chunk_id ascending.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmbeddingError, IndexLoadError

logger = logging.getLogger(__name__)

INDEX_FORMAT = "ramanqa-index"
INDEX_VERSION = 1

DEFAULT_DIM = 256

_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class IndexedPassage:
    chunk_id: str
    doc_id: str
    title: str
    page: int
    section: str | None
    text: str


@dataclass(frozen=True)
class RetrievedPassage:
    chunk_id: str
    doc_id: str
    title: str
    page: int
    section: str | None
    text: str
    score: float

    def to_json(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "doc_id": self.doc_id,
            "title": self.title,
            "page": self.page,
            "section": self.section,
            "text": self.text,
            "score": self.score,
        }


class LocalHashEmbedder:
    """Deterministic offline embedder: hashed bag-of-words term frequencies
    folded into a fixed dimension and L2-normalized."""

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim < 1:
            raise EmbeddingError(f"dimension must be >= 1, got {dim}")
        self.dim = dim
        self.provider_tag = f"local-hash-v1:{dim}"

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise EmbeddingError("cannot embed empty text")
        tokens = _TOKEN.findall(text.lower())
        if not tokens:
            raise EmbeddingError("text has no embeddable tokens")
        vec = np.zeros(self.dim)
        for tok in tokens:
            digest = hashlib.sha1(tok.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:8], "big") % self.dim
            vec[bucket] += 1.0
        return vec / np.linalg.norm(vec)

    def healthcheck(self) -> bool:
        return True


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """dot(a, b) / (|a| |b|); rejects mismatched dims and zero vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise EmbeddingError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise EmbeddingError("cosine undefined for zero-norm vectors")
    return float(np.dot(a, b) / (na * nb))


class VectorIndex:
    """In-memory exact index; build once, then search concurrently."""

    def __init__(self, dim: int, provider_tag: str = ""):
        if dim < 1:
            raise EmbeddingError(f"dimension must be >= 1, got {dim}")
        self.dim = dim
        self.provider_tag = provider_tag
        self._passages: list[IndexedPassage] = []
        self._vectors: list[np.ndarray] = []
        self._chunk_ids: set[str] = set()

    def __len__(self) -> int:
        return len(self._passages)

    def add_passages(self, items: list[tuple[IndexedPassage, np.ndarray]]) -> int:
        for passage, vector in items:
            vec = np.asarray(vector, dtype=np.float64)
            if vec.shape != (self.dim,):
                raise EmbeddingError(
                    f"vector for {passage.chunk_id!r} has shape {vec.shape}, "
                    f"index dimension is {self.dim}"
                )
            if not np.all(np.isfinite(vec)):
                raise EmbeddingError(f"vector for {passage.chunk_id!r} is not finite")
            if np.linalg.norm(vec) == 0.0:
                raise EmbeddingError(f"vector for {passage.chunk_id!r} has zero norm")
            if passage.chunk_id in self._chunk_ids:
                raise EmbeddingError(f"duplicate chunk_id {passage.chunk_id!r}")
            self._chunk_ids.add(passage.chunk_id)
            self._passages.append(passage)
            self._vectors.append(vec)
        return len(items)

    def search(self, query_vector: np.ndarray, k: int) -> list[RetrievedPassage]:
        """Exact top-k by cosine score, ties broken by chunk_id ascending."""
        if k < 1:
            raise EmbeddingError(f"k must be >= 1, got {k}")
        if not self._passages:
            logger.warning("search on empty index returns no passages")
            return []
        q = np.asarray(query_vector, dtype=np.float64)
        if q.shape != (self.dim,):
            raise EmbeddingError(
                f"query has shape {q.shape}, index dimension is {self.dim}"
            )
        qn = np.linalg.norm(q)
        if qn == 0.0:
            raise EmbeddingError("cosine undefined for zero-norm query")
        matrix = np.vstack(self._vectors)
        norms = np.linalg.norm(matrix, axis=1)
        scores = (matrix @ q) / (norms * qn)
        order = sorted(
            range(len(self._passages)),
            key=lambda i: (-scores[i], self._passages[i].chunk_id),
        )
        out = []
        for i in order[: min(k, len(order))]:
            p = self._passages[i]
            out.append(
                RetrievedPassage(
                    chunk_id=p.chunk_id,
                    doc_id=p.doc_id,
                    title=p.title,
                    page=p.page,
                    section=p.section,
                    text=p.text,
                    score=float(scores[i]),
                )
            )
        return out

    def save(self, path: str | Path) -> None:
        """Versioned single-file persistence (npz container)."""
        header = json.dumps(
            {
                "format": INDEX_FORMAT,
                "version": INDEX_VERSION,
                "dim": self.dim,
                "count": len(self._passages),
                "provider": self.provider_tag,
            }
        )
        n = len(self._passages)
        vectors = (
            np.vstack(self._vectors) if n else np.zeros((0, self.dim))
        )
        sections = np.array(
            [p.section if p.section is not None else "" for p in self._passages],
            dtype="U",
        )
        has_section = np.array(
            [p.section is not None for p in self._passages], dtype=bool
        )
        with open(path, "wb") as fh:
            np.savez(
                fh,
                header=np.array(header),
                vectors=vectors,
                chunk_ids=np.array([p.chunk_id for p in self._passages], dtype="U"),
                doc_ids=np.array([p.doc_id for p in self._passages], dtype="U"),
                titles=np.array([p.title for p in self._passages], dtype="U"),
                pages=np.array([p.page for p in self._passages], dtype=np.int64),
                sections=sections,
                has_section=has_section,
                texts=np.array([p.text for p in self._passages], dtype="U"),
            )

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        try:
            with np.load(path, allow_pickle=False) as data:
                header = json.loads(str(data["header"]))
                if header.get("format") != INDEX_FORMAT:
                    raise IndexLoadError(f"{path}: not a {INDEX_FORMAT} file")
                if header.get("version") != INDEX_VERSION:
                    raise IndexLoadError(
                        f"{path}: index version {header.get('version')} "
                        f"unsupported (want {INDEX_VERSION})"
                    )
                index = cls(dim=int(header["dim"]), provider_tag=header.get("provider", ""))
                vectors = data["vectors"]
                count = int(header["count"])
                if vectors.shape != (count, index.dim):
                    raise IndexLoadError(f"{path}: vector block shape mismatch")
                items = []
                for i in range(count):
                    section = str(data["sections"][i]) if data["has_section"][i] else None
                    items.append(
                        (
                            IndexedPassage(
                                chunk_id=str(data["chunk_ids"][i]),
                                doc_id=str(data["doc_ids"][i]),
                                title=str(data["titles"][i]),
                                page=int(data["pages"][i]),
                                section=section,
                                text=str(data["texts"][i]),
                            ),
                            vectors[i],
                        )
                    )
        except IndexLoadError:
            raise
        except Exception as exc:  # zipfile/format errors vary by failure mode
            raise IndexLoadError(f"{path}: corrupt or unreadable index: {exc}") from exc
        index.add_passages(items)
        return index


def build_index(chunk_records: list[dict], embedder) -> VectorIndex:
    """Embed chunk records (from the corpus pipeline) into a fresh index."""
    index = VectorIndex(dim=embedder.dim, provider_tag=embedder.provider_tag)
    items = []
    for rec in chunk_records:
        passage = IndexedPassage(
            chunk_id=rec["chunk_id"],
            doc_id=rec["doc_id"],
            title=rec["title"],
            page=int(rec.get("page", 0)),
            section=rec.get("section"),
            text=rec["text"],
        )
        items.append((passage, embedder.embed(passage.text)))
    index.add_passages(items)
    return index
