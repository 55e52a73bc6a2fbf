"""Corpus-level evaluation: mean ROUGE F1, precision@k against oracle
labels, position histograms, and a paired two-sided t-test.

The t-distribution CDF is computed through a local regularized incomplete
beta (Lentz continued fraction); degenerate difference vectors follow fixed
conventions: all-zero differences give p = 1, zero variance with nonzero
mean gives p = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from redsum.corpus import Document
from redsum.rouge import rouge_suite

DEFAULT_POSITION_BUCKETS = ((0, 0), (1, 1), (2, 2), (3, 3), (4, 4), (5, 9), (10, None))


class EvalError(ValueError):
    pass


@dataclass
class DocScore:
    doc_id: str
    r1: float
    r2: float
    rl: float


@dataclass
class EvalReport:
    mean_r1: float
    mean_r2: float
    mean_rl: float
    per_doc: list[DocScore]
    skipped_no_abstract: int = 0
    p_at_k: dict[int, float] = field(default_factory=dict)
    position_histogram: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        """Report payload with ROUGE as percentages at two decimals."""
        out = {
            "documents": len(self.per_doc),
            "skipped_no_abstract": self.skipped_no_abstract,
            "rouge1_f1": round(100.0 * self.mean_r1, 2),
            "rouge2_f1": round(100.0 * self.mean_r2, 2),
            "rougeL_f1": round(100.0 * self.mean_rl, 2),
        }
        if self.p_at_k:
            out["p_at_k"] = {str(k): round(v, 4) for k, v in sorted(self.p_at_k.items())}
        if self.position_histogram:
            out["position_histogram"] = [round(v, 6) for v in self.position_histogram]
        return out


def evaluate_rouge(selections: Mapping[str, Sequence[int]], docs: Sequence[Document]) -> EvalReport:
    """Mean ROUGE-1/2/L F1 of the selected sentences against the abstracts.

    Documents without an abstract (or without a selection entry) are skipped
    and counted. Selected sentences are concatenated in document order.
    """
    per_doc: list[DocScore] = []
    skipped = 0
    for doc in docs:
        if doc.abstract is None or doc.id not in selections:
            skipped += 1
            continue
        indices = sorted(set(selections[doc.id]))
        cand = [doc.sentences[i].tokens for i in indices if 0 <= i < len(doc.sentences)]
        suite = rouge_suite(cand, doc.abstract)
        per_doc.append(DocScore(doc.id, suite.r1.f1, suite.r2.f1, suite.rl.f1))
    if per_doc:
        mean = lambda xs: float(np.mean(xs))  # noqa: E731
        report = EvalReport(
            mean_r1=mean([d.r1 for d in per_doc]),
            mean_r2=mean([d.r2 for d in per_doc]),
            mean_rl=mean([d.rl for d in per_doc]),
            per_doc=per_doc,
        )
    else:
        report = EvalReport(0.0, 0.0, 0.0, [])
    report.skipped_no_abstract = skipped
    return report


def precision_at_k(selection: Sequence[int], oracle_labels: set[int] | frozenset[int], k: int) -> float:
    """Fraction of the first k selected sentences that carry oracle labels."""
    if not 1 <= k <= len(selection):
        raise EvalError(f"k = {k} outside 1..{len(selection)}")
    hits = sum(1 for i in selection[:k] if i in oracle_labels)
    return hits / k


def mean_precision_at_k(
    selections: Mapping[str, Sequence[int]],
    docs: Sequence[Document],
    k_max: int,
) -> dict[int, float]:
    """Corpus mean P@k for k = 1..k_max over labeled documents with at least
    k selected sentences."""
    out: dict[int, float] = {}
    for k in range(1, k_max + 1):
        values = [
            precision_at_k(selections[doc.id], doc.oracle_labels, k)
            for doc in docs
            if doc.oracle_labels is not None and doc.id in selections and len(selections[doc.id]) >= k
        ]
        if values:
            out[k] = float(np.mean(values))
    return out


def position_histogram(
    selections: Mapping[str, Sequence[int]],
    buckets: Sequence[tuple[int, int | None]] = DEFAULT_POSITION_BUCKETS,
) -> list[float]:
    """Proportion of all selected sentence positions per bucket; the last
    bucket may be open-ended (hi = None)."""
    counts = [0] * len(buckets)
    total = 0
    for indices in selections.values():
        for idx in indices:
            total += 1
            for b, (lo, hi) in enumerate(buckets):
                if idx >= lo and (hi is None or idx <= hi):
                    counts[b] += 1
                    break
    if total == 0:
        raise EvalError("no selected sentences to histogram")
    return [c / total for c in counts]


# --- paired t-test -------------------------------------------------------


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (Lentz's method)."""
    max_iter = 200
    eps = 3e-14
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise EvalError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log(1.0 - x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: int) -> float:
    """Two-sided tail probability of Student's t with df degrees of freedom."""
    if df < 1:
        raise EvalError("degrees of freedom must be >= 1")
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def paired_t_test(scores_a: Sequence[float], scores_b: Sequence[float]) -> float:
    """Two-sided paired t-test p-value on per-document score differences."""
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape:
        raise EvalError(f"length mismatch: {a.shape} vs {b.shape}")
    n = a.size
    if n < 2:
        raise EvalError("need at least 2 paired scores")
    diff = a - b
    mean = float(diff.mean())
    sd = float(diff.std(ddof=1))
    if sd == 0.0:
        return 1.0 if mean == 0.0 else 0.0
    t = mean / (sd / math.sqrt(n))
    return t_sf_two_sided(t, n - 1)
