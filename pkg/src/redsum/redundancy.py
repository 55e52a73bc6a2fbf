"""Explicit redundancy features: n-gram overlap ratios, semantic match,
min-max normalization, and binning into the concatenated one-hot vector.

Feature order in the binned vector is [1-gram; 2-gram; 3-gram; semantic],
m bins each, exactly one active entry per block. An empty selected set means
all features are 0 (the first selection step is pure salience).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from redsum.corpus import Sentence
from redsum.embed import cosine

logger = logging.getLogger(__name__)

DEFAULT_BINS = 10
NGRAM_ORDERS = (1, 2, 3)
SEM_NORM_SCOPES = ("step", "document")


@dataclass(frozen=True)
class RawRedundancy:
    """The four raw features for one candidate at one step."""

    f_1gram: float
    f_2gram: float
    f_3gram: float
    f_sem: float  # raw max-cosine in [-1, 1]
    f_sem_norm: float  # min-max normalized to [0, 1]


def ngram_set(tokens: Sequence[str], n: int) -> set[tuple[str, ...]]:
    return {tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)}


def ngram_overlap_ratio(candidate: Sentence, selected: Iterable[Sentence], n: int) -> float:
    """Fraction of the candidate's distinct n-grams already present in the
    union of the selected sentences' n-grams. 0 with no selection or when the
    candidate has no n-grams."""
    if n not in NGRAM_ORDERS:
        raise ValueError(f"n must be in {NGRAM_ORDERS}")
    cand_grams = ngram_set(candidate.tokens, n)
    if not cand_grams:
        return 0.0
    selected = list(selected)
    if not selected:
        return 0.0
    seen: set[tuple[str, ...]] = set()
    for sent in selected:
        seen.update(ngram_set(sent.tokens, n))
    return len(cand_grams & seen) / len(cand_grams)


def semantic_match(candidate_vec: np.ndarray, selected_vecs: Iterable[np.ndarray]) -> float:
    """Max cosine of the candidate to any selected sentence; 0 when the
    selected set is empty."""
    best = None
    for vec in selected_vecs:
        c = cosine(candidate_vec, vec)
        if best is None or c > best:
            best = c
    return 0.0 if best is None else best


def minmax_normalize(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """(v - min) / (max - min) elementwise; an all-equal input maps to zeros."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("minmax_normalize needs a nonempty input")
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def bin_index(v: float, m: int) -> int:
    """Equal-width bin over [0, 1]: min(floor(v*m), m-1); out-of-range values
    are clamped with a warning."""
    if m < 2:
        raise ValueError("m must be >= 2")
    if v < 0.0 or v > 1.0:
        logger.warning("bin value %.6f outside [0, 1]; clamped", v)
        v = min(max(v, 0.0), 1.0)
    return min(int(v * m), m - 1)


def bin_onehot(v: float, m: int) -> np.ndarray:
    out = np.zeros(m)
    out[bin_index(v, m)] = 1.0
    return out


def binned_features(raw: RawRedundancy, m: int) -> np.ndarray:
    """Concatenated one-hot vector of length 4m with exactly 4 active entries."""
    return np.concatenate(
        [
            bin_onehot(raw.f_1gram, m),
            bin_onehot(raw.f_2gram, m),
            bin_onehot(raw.f_3gram, m),
            bin_onehot(raw.f_sem_norm, m),
        ]
    )


def redundancy_features(
    candidate: Sentence,
    selected: Sequence[Sentence],
    candidate_vec: np.ndarray,
    selected_vecs: Sequence[np.ndarray],
    m: int,
    per_step_sem_values: Sequence[float] | np.ndarray,
    candidate_pos: int,
) -> np.ndarray:
    """Binned feature vector for one candidate at one step.

    ``per_step_sem_values`` holds the raw semantic-match values of the whole
    normalization population at this step (the candidate's own value at
    ``candidate_pos``); the min-max runs over that population.
    """
    raw = step_raw_features(candidate, selected, candidate_vec, selected_vecs, per_step_sem_values, candidate_pos)
    return binned_features(raw, m)


def step_raw_features(
    candidate: Sentence,
    selected: Sequence[Sentence],
    candidate_vec: np.ndarray,
    selected_vecs: Sequence[np.ndarray],
    per_step_sem_values: Sequence[float] | np.ndarray,
    candidate_pos: int,
) -> RawRedundancy:
    if len(selected) == 0:
        return RawRedundancy(0.0, 0.0, 0.0, 0.0, 0.0)
    sem = semantic_match(candidate_vec, selected_vecs)
    sem_norm = float(minmax_normalize(per_step_sem_values)[candidate_pos])
    return RawRedundancy(
        f_1gram=ngram_overlap_ratio(candidate, selected, 1),
        f_2gram=ngram_overlap_ratio(candidate, selected, 2),
        f_3gram=ngram_overlap_ratio(candidate, selected, 3),
        f_sem=sem,
        f_sem_norm=sem_norm,
    )


def step_feature_matrix(
    candidates: Sequence[Sentence],
    selected: Sequence[Sentence],
    emb_matrix: np.ndarray,
    m: int,
    sem_norm_scope: str = "step",
) -> np.ndarray:
    """Binned features for every remaining candidate at one step, as a
    (4m, n_candidates) matrix ready for the selection ranker.

    ``emb_matrix`` is the document's (L, dim) embedding matrix indexed by
    sentence position. ``sem_norm_scope`` picks the min-max population for
    the semantic feature: the remaining candidates (``step``) or all L
    sentences of the document (``document``).
    """
    if sem_norm_scope not in SEM_NORM_SCOPES:
        raise ValueError(f"sem_norm_scope must be one of {SEM_NORM_SCOPES}")
    n = len(candidates)
    out = np.zeros((4 * m, n))
    if n == 0:
        return out
    if len(selected) == 0:
        for j in range(n):
            out[:, j] = binned_features(RawRedundancy(0.0, 0.0, 0.0, 0.0, 0.0), m)
        return out

    selected_vecs = [emb_matrix[s.index] for s in selected]
    cand_sems = np.array([semantic_match(emb_matrix[c.index], selected_vecs) for c in candidates])
    if sem_norm_scope == "step":
        sem_norm = minmax_normalize(cand_sems)
    else:
        all_sems = np.array(
            [semantic_match(emb_matrix[i], selected_vecs) for i in range(emb_matrix.shape[0])]
        )
        normed = minmax_normalize(all_sems)
        sem_norm = np.array([normed[c.index] for c in candidates])

    for j, cand in enumerate(candidates):
        raw = RawRedundancy(
            f_1gram=ngram_overlap_ratio(cand, selected, 1),
            f_2gram=ngram_overlap_ratio(cand, selected, 2),
            f_3gram=ngram_overlap_ratio(cand, selected, 3),
            f_sem=float(cand_sems[j]),
            f_sem_norm=float(sem_norm[j]),
        )
        out[:, j] = binned_features(raw, m)
    return out
