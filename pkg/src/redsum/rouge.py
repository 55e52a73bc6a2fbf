"""ROUGE-1/2/L full-length F1 between token sequences.

This is a from-scratch reimplementation (no stemming, no stopword removal,
no byte/word caps), not a byte-identical clone of the ROUGE-1.5.5 Perl
script. The n-gram and LCS inner loops run on the compiled kernel backend
when available.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from redsum.kernels import lcs_length_ids, ngram_overlap_ids

TokenSeq = Sequence[str]


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class RougeSuite:
    r1: RougeScore
    r2: RougeScore
    rl: RougeScore


_ZERO = RougeScore(0.0, 0.0, 0.0)


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def score_from_counts(overlap: int, n_cand: int, n_ref: int) -> RougeScore:
    if n_cand == 0 or n_ref == 0:
        return _ZERO
    p = overlap / n_cand
    r = overlap / n_ref
    return RougeScore(p, r, _f1(p, r))


def encode_pair(a: TokenSeq, b: TokenSeq) -> tuple[np.ndarray, np.ndarray]:
    """Map two token sequences onto a shared local int32 id space."""
    vocab: dict[str, int] = {}
    ids_a = np.empty(len(a), dtype=np.int32)
    for i, tok in enumerate(a):
        ids_a[i] = vocab.setdefault(tok, len(vocab))
    ids_b = np.empty(len(b), dtype=np.int32)
    for i, tok in enumerate(b):
        ids_b[i] = vocab.setdefault(tok, len(vocab))
    return ids_a, ids_b


def ngram_counts(tokens: TokenSeq, n: int) -> Counter:
    """Multiset of contiguous n-token windows; empty when len(tokens) < n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n_f1(candidate: TokenSeq, reference: TokenSeq, n: int) -> RougeScore:
    """ROUGE-n with clipped multiset n-gram overlap counts."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ids_c, ids_r = encode_pair(candidate, reference)
    overlap, n_cand, n_ref = ngram_overlap_ids(ids_c, ids_r, n)
    return score_from_counts(overlap, n_cand, n_ref)


def lcs_length(a: TokenSeq, b: TokenSeq) -> int:
    ids_a, ids_b = encode_pair(a, b)
    return lcs_length_ids(ids_a, ids_b)


def rouge_l_f1(candidate: TokenSeq, reference: TokenSeq) -> RougeScore:
    """ROUGE-L on whole sequences: LCS / len(candidate), LCS / len(reference)."""
    if len(candidate) == 0 or len(reference) == 0:
        return _ZERO
    lcs = lcs_length(candidate, reference)
    p = lcs / len(candidate)
    r = lcs / len(reference)
    return RougeScore(p, r, _f1(p, r))


def flatten(sentences: Iterable[TokenSeq]) -> list[str]:
    out: list[str] = []
    for sent in sentences:
        out.extend(sent)
    return out


def rouge_suite(candidate_sents: Iterable[TokenSeq], reference_sents: Iterable[TokenSeq]) -> RougeSuite:
    """ROUGE-1/2/L between concatenations of sentence token lists.

    Callers pass candidate sentences in document order; concatenation happens
    here so cross-sentence n-grams are counted consistently everywhere.
    """
    cand = flatten(candidate_sents)
    ref = flatten(reference_sents)
    return RougeSuite(
        r1=rouge_n_f1(cand, ref, 1),
        r2=rouge_n_f1(cand, ref, 2),
        rl=rouge_l_f1(cand, ref),
    )


MEASURES = ("mean12", "r1", "r2", "rl")


def measure(candidate_sents: Iterable[TokenSeq], reference_sents: Iterable[TokenSeq], kind: str = "mean12") -> float:
    """The similarity M(candidate; reference) used for gains and labeling.

    ``mean12`` (default) is the mean of ROUGE-1 and ROUGE-2 F1; the single
    metrics are available as config switches. M on an empty candidate is 0.
    """
    cand = flatten(candidate_sents)
    if not cand:
        return 0.0
    ref = flatten(reference_sents)
    if kind == "mean12":
        ids_c, ids_r = encode_pair(cand, ref)
        o1, c1, r1 = ngram_overlap_ids(ids_c, ids_r, 1)
        o2, c2, r2 = ngram_overlap_ids(ids_c, ids_r, 2)
        return (score_from_counts(o1, c1, r1).f1 + score_from_counts(o2, c2, r2).f1) / 2.0
    if kind == "r1":
        return rouge_n_f1(cand, ref, 1).f1
    if kind == "r2":
        return rouge_n_f1(cand, ref, 2).f1
    if kind == "rl":
        return rouge_l_f1(cand, ref).f1
    raise ValueError(f"unknown measure {kind!r}; expected one of {MEASURES}")
