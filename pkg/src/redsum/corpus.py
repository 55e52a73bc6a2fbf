"""Document/sentence data model, tokenization and corpus (de)serialization.

Corpus files are UTF-8 JSONL, one document per line:
``{"id": str, "sentences": [str, ...], "abstract": [str, ...]?, "labels": [int, ...]?}``
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Iterator

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)

DEFAULT_MAX_TOKENS = 512
DEFAULT_MAX_SUMMARY_SENTENCES = 3


class CorpusError(ValueError):
    """Malformed corpus input."""


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace and punctuation boundaries.

    Punctuation marks become their own tokens; no stemming or stopword
    removal. ``""`` tokenizes to ``[]``.
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Sentence:
    """One document sentence: 0-based position, raw text, lowercase tokens."""

    index: int
    text: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class Document:
    id: str
    sentences: tuple[Sentence, ...]
    abstract: tuple[tuple[str, ...], ...] | None = None
    abstract_text: tuple[str, ...] | None = None
    oracle_labels: frozenset[int] | None = None

    def __post_init__(self):
        if not self.sentences:
            raise CorpusError(f"document {self.id!r} has no sentences")
        if self.oracle_labels is not None:
            bad = [i for i in self.oracle_labels if not 0 <= i < len(self.sentences)]
            if bad:
                raise CorpusError(f"document {self.id!r}: labels {bad} out of range")

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def token_count(self) -> int:
        return sum(len(s.tokens) for s in self.sentences)

    def with_labels(self, labels: Iterable[int]) -> "Document":
        return replace(self, oracle_labels=frozenset(labels))


@dataclass(frozen=True)
class CorpusConfig:
    max_tokens: int = DEFAULT_MAX_TOKENS
    max_summary_sentences: int = DEFAULT_MAX_SUMMARY_SENTENCES
    lowercase: bool = True

    def __post_init__(self):
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.max_summary_sentences < 1:
            raise ValueError("max_summary_sentences must be >= 1")


def truncate_document(doc: Document, max_tokens: int) -> Document:
    """Keep the longest sentence prefix within the token budget.

    Sentences are never split; the first sentence is kept even when it alone
    exceeds the budget so selection always has a candidate.
    """
    if max_tokens <= 0:
        raise ValueError("max_tokens must be positive")
    kept: list[Sentence] = []
    total = 0
    for sent in doc.sentences:
        if kept and total + len(sent.tokens) > max_tokens:
            break
        kept.append(sent)
        total += len(sent.tokens)
    if len(kept) == len(doc.sentences):
        return doc
    labels = None
    if doc.oracle_labels is not None:
        labels = frozenset(i for i in doc.oracle_labels if i < len(kept))
    return replace(doc, sentences=tuple(kept), oracle_labels=labels)


def _document_from_record(record: dict, cfg: CorpusConfig) -> Document | None:
    doc_id = record["id"]
    raw_sentences = record["sentences"]
    if not isinstance(doc_id, str) or not isinstance(raw_sentences, list):
        raise CorpusError("record must have string 'id' and list 'sentences'")
    sentences = []
    for raw in raw_sentences:
        tokens = tokenize(raw)
        if not tokens:
            continue
        sentences.append(Sentence(index=len(sentences), text=raw, tokens=tuple(tokens)))
    if not sentences:
        return None
    abstract_text = record.get("abstract")
    abstract = None
    if abstract_text is not None:
        abstract = tuple(tuple(tokenize(a)) for a in abstract_text)
        abstract = tuple(a for a in abstract if a)
        abstract_text = tuple(abstract_text)
        if not abstract:
            abstract = None
            abstract_text = None
    labels = record.get("labels")
    doc = Document(
        id=doc_id,
        sentences=tuple(sentences),
        abstract=abstract,
        abstract_text=abstract_text,
        oracle_labels=None,
    )
    doc = truncate_document(doc, cfg.max_tokens)
    if labels is not None:
        labels = frozenset(i for i in labels if 0 <= i < len(doc.sentences))
        doc = replace(doc, oracle_labels=labels)
    return doc


def parse_corpus(lines: Iterable[str], cfg: CorpusConfig | None = None) -> list[Document]:
    """Parse line-delimited JSON records into Documents.

    A malformed line is reported with its line number and skipped; a record
    whose sentences all tokenize to nothing is skipped with a warning.
    """
    cfg = cfg or CorpusConfig()
    docs: list[Document] = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
            doc = _document_from_record(record, cfg)
        except (json.JSONDecodeError, KeyError, TypeError, CorpusError) as exc:
            logger.error("corpus line %d: malformed record (%s)", lineno, exc)
            continue
        if doc is None:
            logger.warning("corpus line %d: no surviving sentences, skipped", lineno)
            continue
        docs.append(doc)
    return docs


def load_corpus(path, cfg: CorpusConfig | None = None) -> list[Document]:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh, cfg)


def document_to_record(doc: Document) -> dict:
    record: dict = {"id": doc.id, "sentences": [s.text for s in doc.sentences]}
    if doc.abstract_text is not None:
        record["abstract"] = list(doc.abstract_text)
    if doc.oracle_labels is not None:
        record["labels"] = sorted(doc.oracle_labels)
    return record


def write_corpus(docs: Iterable[Document], fh: IO[str]) -> None:
    for doc in docs:
        fh.write(json.dumps(document_to_record(doc), ensure_ascii=False) + "\n")


def save_corpus(docs: Iterable[Document], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_corpus(docs, fh)


def iter_sentences(docs: Iterable[Document]) -> Iterator[Sentence]:
    for doc in docs:
        yield from doc.sentences
