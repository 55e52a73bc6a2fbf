"""Greedy pseudo-ground-truth extraction and the gain-based target distribution.

The greedy labeler adds, per step, the sentence with the largest strictly
positive gain in the summary measure against the reference abstract; the
per-step gains also feed the temperature-softmax target Q used by the
listwise trainers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from redsum.corpus import Document, Sentence
from redsum.kernels import lcs_length_ids, ngram_overlap_ids
from redsum.rouge import TokenSeq, measure, score_from_counts


class OracleError(ValueError):
    """Raised when a document lacks the inputs labeling needs."""


@dataclass(frozen=True)
class GainVector:
    """Raw per-candidate gains g and their min-max rescale g-tilde.

    When all gains are equal the rescale is all-zero by convention, which
    makes the downstream target distribution uniform.
    """

    gains: np.ndarray
    rescaled: np.ndarray


@dataclass(frozen=True)
class TargetDistribution:
    probabilities: np.ndarray
    temperature: float


def gain_vector(gains: Sequence[float] | np.ndarray) -> GainVector:
    g = np.asarray(gains, dtype=np.float64)
    if g.size == 0:
        raise ValueError("need at least one candidate gain")
    lo, hi = float(g.min()), float(g.max())
    if hi == lo:
        rescaled = np.zeros_like(g)
    else:
        rescaled = (g - lo) / (hi - lo)
    return GainVector(gains=g, rescaled=rescaled)


def target_distribution(gains: GainVector | Sequence[float] | np.ndarray, tau: float) -> TargetDistribution:
    """Temperature softmax over min-max-rescaled gains."""
    if tau <= 0:
        raise ValueError("temperature must be positive")
    if not isinstance(gains, GainVector):
        gains = gain_vector(gains)
    z = tau * gains.rescaled
    z = z - z.max()
    e = np.exp(z)
    probs = e / e.sum()
    return TargetDistribution(probabilities=probs, temperature=tau)


class _DocMeasure:
    """Per-document measure evaluator over a shared int-id space.

    Encodes every sentence and the abstract once so repeated gain
    computations skip the string layer and go straight to the kernels.
    """

    def __init__(self, doc: Document, kind: str = "mean12"):
        if doc.abstract is None:
            raise OracleError(f"document {doc.id!r}: no reference abstract")
        self.kind = kind
        vocab: dict[str, int] = {}

        def enc(tokens: TokenSeq) -> np.ndarray:
            out = np.empty(len(tokens), dtype=np.int32)
            for i, tok in enumerate(tokens):
                out[i] = vocab.setdefault(tok, len(vocab))
            return out

        self.sent_ids = [enc(s.tokens) for s in doc.sentences]
        self.ref_ids = np.concatenate([enc(a) for a in doc.abstract])

    def value(self, indices: Sequence[int]) -> float:
        """M of the sentences at ``indices``, flattened in document order."""
        if len(indices) == 0:
            return 0.0
        cand = np.concatenate([self.sent_ids[i] for i in sorted(indices)])
        if self.kind == "mean12":
            s1 = score_from_counts(*ngram_overlap_ids(cand, self.ref_ids, 1))
            s2 = score_from_counts(*ngram_overlap_ids(cand, self.ref_ids, 2))
            return (s1.f1 + s2.f1) / 2.0
        if self.kind == "r1":
            return score_from_counts(*ngram_overlap_ids(cand, self.ref_ids, 1)).f1
        if self.kind == "r2":
            return score_from_counts(*ngram_overlap_ids(cand, self.ref_ids, 2)).f1
        if self.kind == "rl":
            lcs = lcs_length_ids(cand, self.ref_ids)
            return score_from_counts(lcs, len(cand), len(self.ref_ids)).f1
        raise ValueError(f"unknown measure {self.kind!r}")


def step_gain(
    candidate: Sentence,
    selected: Iterable[Sentence],
    reference: Iterable[TokenSeq],
    kind: str = "mean12",
) -> float:
    """M(selected + candidate) - M(selected), flattening in document order."""
    selected = list(selected)
    if any(s.index == candidate.index for s in selected):
        raise ValueError(f"candidate sentence {candidate.index} already selected")
    reference = [list(r) for r in reference]
    ordered = sorted(selected + [candidate], key=lambda s: s.index)
    with_cand = measure([s.tokens for s in ordered], reference, kind)
    without = measure([s.tokens for s in sorted(selected, key=lambda s: s.index)], reference, kind)
    return with_cand - without


def step_gains(
    doc: Document,
    selected: Sequence[int],
    candidates: Sequence[int],
    kind: str = "mean12",
    _meter: "_DocMeasure | None" = None,
) -> np.ndarray:
    """Vector of step gains for ``candidates`` given the ``selected`` context."""
    meter = _meter or _DocMeasure(doc, kind)
    base = meter.value(selected)
    sel = list(selected)
    return np.array([meter.value(sel + [c]) - base for c in candidates], dtype=np.float64)


def greedy_oracle_sequence(doc: Document, l: int, kind: str = "mean12") -> list[int]:
    """Greedy label extraction, returned in extraction order.

    Stops as soon as no remaining sentence adds strictly positive gain, or
    after ``l`` picks. Ties go to the lowest sentence index.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    meter = _DocMeasure(doc, kind)
    selected: list[int] = []
    remaining = list(range(len(doc.sentences)))
    current = 0.0
    for _ in range(min(l, len(doc.sentences))):
        values = [meter.value(selected + [c]) for c in remaining]
        best_pos = int(np.argmax(values))
        if values[best_pos] - current <= 0.0:
            break
        current = values[best_pos]
        selected.append(remaining.pop(best_pos))
    return selected


def greedy_oracle_labels(doc: Document, l: int, kind: str = "mean12") -> frozenset[int]:
    return frozenset(greedy_oracle_sequence(doc, l, kind))
