"""Iterative sentence-selection strategies: lead, top-k salience, trigram
blocking, MMR, and the two learned rankers.

All strategies return min(l, L) distinct indices in selection order and
break every argmax tie by the lowest sentence index. Apart from lead and
seq, the first pick is always the salience argmax.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from redsum.corpus import Document
from redsum.embed import EmbeddingSet
from redsum.grad import Tape
from redsum.rankers import CtxRankerParams, SeqRankerParams, ctx_forward, seq_decoder_state, seq_scores
from redsum.redundancy import ngram_set, step_feature_matrix
from redsum.salience import SalienceModel, document_salience

STRATEGIES = ("lead", "topk", "triblk", "mmr", "ctx", "seq")
DEFAULT_MMR_LAMBDA = 0.6


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class SelectionResult:
    chosen: tuple[int, ...]  # selection order
    per_step_scores: tuple[float, ...] | None = None


def _argmax_lowest(values: np.ndarray, candidates: Sequence[int]) -> int:
    """Index (from ``candidates``) of the max value; ties to lowest index.

    ``candidates`` must be in ascending order, which makes numpy's
    first-maximum argmax the lowest-index tie-break."""
    return candidates[int(np.argmax(values))]


def salience_order(salience: np.ndarray) -> list[int]:
    """All indices by descending salience, ties by lowest index."""
    salience = np.asarray(salience, dtype=np.float64)
    return list(np.argsort(-salience, kind="stable"))


def select_lead(doc: Document, l: int) -> SelectionResult:
    if l < 1:
        raise SelectionError("l must be >= 1")
    return SelectionResult(chosen=tuple(range(min(l, len(doc.sentences)))))


def select_topk(salience: np.ndarray, l: int) -> SelectionResult:
    if l < 1:
        raise SelectionError("l must be >= 1")
    order = salience_order(salience)[:l]
    return SelectionResult(
        chosen=tuple(int(i) for i in order),
        per_step_scores=tuple(float(salience[i]) for i in order),
    )


def trigram_blocking_scan(salience: np.ndarray, doc: Document, l: int) -> tuple[list[int], list[int]]:
    """Descending-salience scan returning (kept, blocked) before padding.

    A candidate is blocked when it shares at least one trigram with the
    union of already-kept sentences; sentences shorter than three tokens
    have no trigrams and neither block nor get blocked.
    """
    kept: list[int] = []
    blocked: list[int] = []
    seen: set[tuple[str, ...]] = set()
    for i in salience_order(salience):
        if len(kept) >= l:
            break
        grams = ngram_set(doc.sentences[i].tokens, 3)
        if grams & seen:
            blocked.append(int(i))
            continue
        kept.append(int(i))
        seen.update(grams)
    return kept, blocked


def select_trigram_blocking(salience: np.ndarray, doc: Document, l: int) -> SelectionResult:
    """Trigram blocking with salience-order padding on exhaustion, so the
    summary length stays comparable across strategies."""
    if l < 1:
        raise SelectionError("l must be >= 1")
    kept, blocked = trigram_blocking_scan(salience, doc, l)
    for i in blocked:
        if len(kept) >= l:
            break
        kept.append(i)
    return SelectionResult(chosen=tuple(kept))


def select_mmr(salience: np.ndarray, emb_matrix: np.ndarray, lam: float, l: int) -> SelectionResult:
    """Iterative argmax of lam * salience - (1 - lam) * max-cosine-to-chosen;
    the first pick is pure salience."""
    if not 0.0 <= lam <= 1.0:
        raise SelectionError("lambda must be in [0, 1]")
    if l < 1:
        raise SelectionError("l must be >= 1")
    salience = np.asarray(salience, dtype=np.float64)
    n = salience.size
    remaining = list(range(n))
    first = _argmax_lowest(salience[remaining], remaining)
    chosen = [first]
    scores = [float(salience[first])]
    remaining.remove(first)
    while remaining and len(chosen) < l:
        sims = emb_matrix[remaining] @ emb_matrix[chosen].T  # (n_rem, n_chosen)
        objective = lam * salience[remaining] - (1.0 - lam) * np.clip(sims, -1.0, 1.0).max(axis=1)
        pick = _argmax_lowest(objective, remaining)
        scores.append(float(objective[remaining.index(pick)]))
        chosen.append(pick)
        remaining.remove(pick)
    return SelectionResult(chosen=tuple(chosen), per_step_scores=tuple(scores))


def select_ctx(
    salience: np.ndarray,
    doc: Document,
    emb_matrix: np.ndarray,
    ctx_params: CtxRankerParams,
    l: int,
) -> SelectionResult:
    """Salience argmax first, then ctx scores over features recomputed
    against the growing selection."""
    if l < 1:
        raise SelectionError("l must be >= 1")
    if emb_matrix.shape[1] != ctx_params.dim:
        raise SelectionError(
            f"embedding dim {emb_matrix.shape[1]} does not match ctx checkpoint dim {ctx_params.dim}"
        )
    salience = np.asarray(salience, dtype=np.float64)
    remaining = list(range(len(doc.sentences)))
    first = _argmax_lowest(salience[remaining], remaining)
    chosen = [first]
    scores = [float(salience[first])]
    remaining.remove(first)
    while remaining and len(chosen) < l:
        f_red = step_feature_matrix(
            [doc.sentences[i] for i in remaining],
            [doc.sentences[i] for i in chosen],
            emb_matrix,
            ctx_params.m,
            ctx_params.sem_norm_scope,
        )
        step_scores = ctx_forward(Tape(), ctx_params, salience[remaining], f_red).data[0]
        pick = _argmax_lowest(step_scores, remaining)
        scores.append(float(step_scores[remaining.index(pick)]))
        chosen.append(pick)
        remaining.remove(pick)
    return SelectionResult(chosen=tuple(chosen), per_step_scores=tuple(scores))


def select_seq(
    seq_params: SeqRankerParams,
    doc: Document,
    emb_matrix: np.ndarray,
    doc_vec: np.ndarray,
    l: int,
) -> SelectionResult:
    """Greedy eval-mode decoding: argmax of the step distribution each step."""
    if l < 1:
        raise SelectionError("l must be >= 1")
    if emb_matrix.shape[1] != seq_params.dim:
        raise SelectionError(
            f"embedding dim {emb_matrix.shape[1]} does not match seq checkpoint dim {seq_params.dim}"
        )
    chosen: list[int] = []
    scores: list[float] = []
    remaining = list(range(len(doc.sentences)))
    while remaining and len(chosen) < l:
        tape = Tape()
        state = seq_decoder_state(tape, seq_params, emb_matrix[chosen], emb_matrix, training=False)
        step_scores = seq_scores(tape, seq_params, state, emb_matrix[remaining], doc_vec).data[0]
        pick = _argmax_lowest(step_scores, remaining)
        scores.append(float(step_scores[remaining.index(pick)]))
        chosen.append(pick)
        remaining.remove(pick)
    return SelectionResult(chosen=tuple(chosen), per_step_scores=tuple(scores))


@dataclass
class StrategyContext:
    """Everything a strategy might need, bundled for the CLI runner."""

    embeddings: EmbeddingSet | None = None
    salience_model: SalienceModel | None = None
    ctx_params: CtxRankerParams | None = None
    seq_params: SeqRankerParams | None = None
    mmr_lambda: float = DEFAULT_MMR_LAMBDA

    def salience_for(self, doc: Document) -> np.ndarray:
        if self.salience_model is None or self.embeddings is None:
            raise SelectionError("strategy needs a salience checkpoint and embeddings")
        return document_salience(doc, self.embeddings, self.salience_model)


def run_strategy(name: str, doc: Document, l: int, ctx: StrategyContext) -> SelectionResult:
    if name == "lead":
        return select_lead(doc, l)
    if name == "topk":
        return select_topk(ctx.salience_for(doc), l)
    if name == "triblk":
        return select_trigram_blocking(ctx.salience_for(doc), doc, l)
    if name == "mmr":
        if ctx.embeddings is None:
            raise SelectionError("mmr needs embeddings")
        return select_mmr(ctx.salience_for(doc), ctx.embeddings.matrix(doc), ctx.mmr_lambda, l)
    if name == "ctx":
        if ctx.ctx_params is None or ctx.embeddings is None:
            raise SelectionError("ctx needs a ctx checkpoint and embeddings")
        return select_ctx(ctx.salience_for(doc), doc, ctx.embeddings.matrix(doc), ctx.ctx_params, l)
    if name == "seq":
        if ctx.seq_params is None or ctx.embeddings is None:
            raise SelectionError("seq needs a seq checkpoint and embeddings")
        return select_seq(ctx.seq_params, doc, ctx.embeddings.matrix(doc), ctx.embeddings.doc_vector(doc), l)
    raise SelectionError(f"unknown strategy {name!r}; expected one of {STRATEGIES}")
