"""Sentence embedding providers: native hashed TF-IDF and external files.

Every vector leaving this module has unit L2 norm. External embeddings come
from JSONL files, one document per line:
``{"id": str, "dim": int, "vectors": [[float, ...], ...]}``
with one vector per corpus sentence.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from redsum.corpus import Document

DEFAULT_DIM = 256
_HASH_PERSON = b"redsum-v1"


class EmbeddingError(ValueError):
    """Malformed or inconsistent embedding data."""


@dataclass(frozen=True)
class DocumentFrequencies:
    """Document-frequency table for IDF weighting."""

    counts: Mapping[str, int]
    n_docs: int


def build_document_frequencies(docs: Iterable[Document]) -> DocumentFrequencies:
    counts: Counter = Counter()
    n = 0
    for doc in docs:
        n += 1
        seen = set()
        for sent in doc.sentences:
            seen.update(sent.tokens)
        counts.update(seen)
    return DocumentFrequencies(counts=dict(counts), n_docs=n)


def _token_slot(token: str, dim: int) -> tuple[int, float]:
    """Stable (bucket, sign) for a token; independent of PYTHONHASHSEED."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, person=_HASH_PERSON).digest()
    h = int.from_bytes(digest, "big")
    sign = 1.0 if h & 1 == 0 else -1.0
    return (h >> 1) % dim, sign


def _idf(token: str, stats: DocumentFrequencies) -> float:
    df = stats.counts.get(token, 0)
    return math.log((1.0 + stats.n_docs) / (1.0 + df)) + 1.0


def normalize(vec: np.ndarray) -> np.ndarray:
    """Unit L2 norm; a zero vector maps to the uniform unit vector so the
    result is deterministic and permutation-invariant."""
    norm = float(np.linalg.norm(vec))
    if norm < 1e-12:
        return np.full(vec.shape, 1.0 / math.sqrt(vec.size))
    return vec / norm


def hash_tfidf_embed(doc: Document, dim: int, stats: DocumentFrequencies) -> np.ndarray:
    """Signed-hash TF-IDF sentence vectors, one unit row per sentence."""
    if dim < 8:
        raise ValueError("dim must be >= 8")
    out = np.zeros((len(doc.sentences), dim))
    for row, sent in enumerate(doc.sentences):
        for token, tf in Counter(sent.tokens).items():
            bucket, sign = _token_slot(token, dim)
            out[row, bucket] += sign * tf * _idf(token, stats)
        out[row] = normalize(out[row])
    return out


def document_vector(sentence_vectors: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Normalized arithmetic mean of the sentence vectors."""
    mat = np.asarray(sentence_vectors, dtype=np.float64)
    if mat.ndim == 1:
        mat = mat[None, :]
    if mat.shape[0] == 0:
        raise EmbeddingError("document has no sentence vectors")
    return normalize(mat.mean(axis=0))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of unit vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise EmbeddingError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.clip(np.dot(a, b), -1.0, 1.0))


def load_embeddings(path) -> dict[str, np.ndarray]:
    """Read an embedding JSONL file into {doc id: (L, dim) unit-row matrix}.

    Raises on malformed lines (with the line number) and on dimension
    mismatches across documents.
    """
    by_doc: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                doc_id = record["id"]
                rec_dim = int(record["dim"])
                vectors = record["vectors"]
                mat = np.asarray(vectors, dtype=np.float64)
                if mat.ndim != 2 or mat.shape[1] != rec_dim or mat.shape[0] == 0:
                    raise EmbeddingError(f"vector block shape {mat.shape} does not match dim {rec_dim}")
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise EmbeddingError(f"embeddings line {lineno}: {exc}") from exc
            if dim is None:
                dim = rec_dim
            elif rec_dim != dim:
                raise EmbeddingError(f"embeddings line {lineno}: dim {rec_dim} != {dim} seen earlier")
            if not np.isfinite(mat).all():
                raise EmbeddingError(f"embeddings line {lineno}: non-finite values")
            by_doc[doc_id] = np.vstack([normalize(row) for row in mat])
    return by_doc


def write_embeddings(by_doc: Mapping[str, np.ndarray], fh: IO[str]) -> None:
    for doc_id, mat in by_doc.items():
        record = {"id": doc_id, "dim": int(mat.shape[1]), "vectors": [list(map(float, row)) for row in mat]}
        fh.write(json.dumps(record) + "\n")


def save_embeddings(by_doc: Mapping[str, np.ndarray], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_embeddings(by_doc, fh)


class EmbeddingSet:
    """Per-corpus sentence embeddings plus cached document vectors.

    Construct with :meth:`native` (hashed TF-IDF) or :meth:`from_file`
    (external exporter output); frozen after construction, safe to share.
    """

    def __init__(self, by_doc: dict[str, np.ndarray], dim: int):
        self.by_doc = by_doc
        self.dim = dim
        self._doc_vectors: dict[str, np.ndarray] = {}

    @classmethod
    def native(
        cls,
        docs: Sequence[Document],
        dim: int = DEFAULT_DIM,
        stats: DocumentFrequencies | None = None,
    ) -> "EmbeddingSet":
        stats = stats or build_document_frequencies(docs)
        return cls({doc.id: hash_tfidf_embed(doc, dim, stats) for doc in docs}, dim)

    @classmethod
    def from_file(cls, path, docs: Sequence[Document]) -> "EmbeddingSet":
        by_doc = load_embeddings(path)
        if not by_doc:
            raise EmbeddingError(f"no embeddings in {path}")
        for doc in docs:
            if doc.id not in by_doc:
                raise EmbeddingError(f"document {doc.id!r}: missing from embeddings file")
            got = by_doc[doc.id].shape[0]
            if got != len(doc.sentences):
                raise EmbeddingError(
                    f"document {doc.id!r}: {got} vectors for {len(doc.sentences)} sentences"
                )
        dim = next(iter(by_doc.values())).shape[1]
        return cls(by_doc, dim)

    def matrix(self, doc: Document) -> np.ndarray:
        """(L, dim) unit-row matrix for one document."""
        try:
            return self.by_doc[doc.id]
        except KeyError:
            raise EmbeddingError(f"document {doc.id!r}: no embeddings") from None

    def doc_vector(self, doc: Document) -> np.ndarray:
        vec = self._doc_vectors.get(doc.id)
        if vec is None:
            vec = document_vector(self.matrix(doc))
            self._doc_vectors[doc.id] = vec
        return vec
