"""The two learned rankers and their shared KL-listwise training loop.

The selection ranker (CTX) scores a candidate from its frozen salience
probability and its binned redundancy features through a bilinear form; the
sequence ranker (SEQ) conditions a one-layer attention decoder on the
selected-sentence prefix and scores candidates jointly for salience and
novelty. Both are trained to pull the step softmax P toward the gain-derived
target Q by minimizing KL(P||Q).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from redsum.corpus import Document
from redsum.embed import EmbeddingSet
from redsum.grad import (
    AdamState,
    Tape,
    Tensor,
    adam_step,
    backward,
    load_checkpoint,
    lr_at,
    save_checkpoint,
)
from redsum.oracle import TargetDistribution, _DocMeasure, greedy_oracle_sequence, step_gains, target_distribution
from redsum.redundancy import step_feature_matrix
from redsum.salience import SalienceModel, document_salience

logger = logging.getLogger(__name__)

Q_FLOOR = 1e-12


class RankerError(ValueError):
    pass


@dataclass(frozen=True)
class StepDistribution:
    """Selection probabilities over the remaining candidate sentences."""

    probabilities: np.ndarray
    candidates: tuple[int, ...]


def step_distribution(scores: Sequence[float] | np.ndarray, candidates: Sequence[int] | None = None) -> StepDistribution:
    """Softmax over the remaining candidates only."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise RankerError("step_distribution needs at least one candidate")
    if candidates is None:
        candidates = tuple(range(scores.size))
    elif len(candidates) != scores.size:
        raise RankerError("candidate index count does not match score count")
    z = scores - scores.max()
    e = np.exp(z)
    return StepDistribution(probabilities=e / e.sum(), candidates=tuple(candidates))


def kl_loss(p, q) -> float:
    """KL(P||Q) = sum P log(P/Q) with 0 log 0 = 0 and Q floored at 1e-12."""
    p_cands = q_cands = None
    if isinstance(p, StepDistribution):
        p_cands, p = p.candidates, p.probabilities
    if isinstance(q, TargetDistribution):
        q = q.probabilities
    elif isinstance(q, StepDistribution):
        q_cands, q = q.candidates, q.probabilities
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise RankerError(f"support mismatch: {p.shape} vs {q.shape}")
    if p_cands is not None and q_cands is not None and p_cands != q_cands:
        raise RankerError("support mismatch: different candidate sets")
    mask = p > 0.0
    qf = np.maximum(q, Q_FLOOR)
    total = float(np.sum(p[mask] * (np.log(p[mask]) - np.log(qf[mask]))))
    # the Q floor can push the sum a few ulps below zero on near-degenerate
    # pairs; clamp so Gibbs nonnegativity survives in float
    return max(total, 0.0)


def _kl_tape(tape: Tape, scores: Tensor, q: np.ndarray) -> Tensor:
    """Differentiable KL(softmax(scores) || q) for the trainers."""
    p = tape.softmax(scores)
    log_q = Tensor(np.log(np.maximum(q, Q_FLOOR)).reshape(1, -1))
    diff = tape.sub(tape.log(p), log_q)
    return tape.sum(tape.mul(p, diff))


# --- CTX: context-aware selection ranker --------------------------------


@dataclass
class CtxRankerParams:
    """Bilinear selection ranker weights.

    ``w_bilinear`` is the (d, 1, 4m) bilinear tensor between the scalar
    salience score and the 4m redundancy vector, stored with the singleton
    salience axis collapsed to (d, 4m); ``w_out`` is the (1, d) output layer.
    """

    w_bilinear: Tensor
    w_out: Tensor
    m: int
    d: int
    dim: int
    tau: float
    sem_norm_scope: str = "step"
    epoch_losses: list[float] = field(default_factory=list)

    def save(self, path) -> None:
        save_checkpoint(
            path,
            kind="ctx",
            dim=self.dim,
            tensors={"w_bilinear": self.w_bilinear, "w_out": self.w_out},
            config={
                "m": self.m,
                "d": self.d,
                "tau": self.tau,
                "dim": self.dim,
                "sem_norm_scope": self.sem_norm_scope,
            },
        )

    @classmethod
    def load(cls, path) -> "CtxRankerParams":
        ckpt = load_checkpoint(path)
        if ckpt.kind != "ctx":
            raise RankerError(f"checkpoint kind {ckpt.kind!r} is not 'ctx'")
        cfg = ckpt.config
        params = cls(
            w_bilinear=Tensor(ckpt.tensors["w_bilinear"], requires_grad=True),
            w_out=Tensor(ckpt.tensors["w_out"], requires_grad=True),
            m=int(cfg["m"]),
            d=int(cfg["d"]),
            dim=ckpt.dim,
            tau=float(cfg["tau"]),
            sem_norm_scope=cfg.get("sem_norm_scope", "step"),
        )
        if params.w_bilinear.shape != (params.d, 4 * params.m) or params.w_out.shape != (1, params.d):
            raise RankerError("ctx checkpoint tensor shapes inconsistent with (m, d) config")
        return params

    @property
    def trainable(self) -> list[Tensor]:
        return [self.w_bilinear, self.w_out]


def init_ctx_params(m: int, d: int, dim: int, tau: float, rng: np.random.Generator, sem_norm_scope: str = "step") -> CtxRankerParams:
    scale = 1.0 / np.sqrt(4 * m)
    return CtxRankerParams(
        w_bilinear=Tensor(rng.uniform(-scale, scale, size=(d, 4 * m)), requires_grad=True),
        w_out=Tensor(rng.uniform(-1.0 / np.sqrt(d), 1.0 / np.sqrt(d), size=(1, d)), requires_grad=True),
        m=m,
        d=d,
        dim=dim,
        tau=tau,
        sem_norm_scope=sem_norm_scope,
    )


def ctx_forward(tape: Tape, params: CtxRankerParams, f_sal: np.ndarray, f_red: np.ndarray) -> Tensor:
    """Scores for all candidates at one step: W_f tanh(F_sal * (W_F F_red)).

    ``f_sal`` is (n,) salience probabilities for the candidates; ``f_red``
    is the (4m, n) binned feature matrix.
    """
    if f_red.shape[0] != 4 * params.m:
        raise RankerError(f"feature rows {f_red.shape[0]} != 4m = {4 * params.m}")
    if f_red.shape[1] != f_sal.size:
        raise RankerError("candidate count mismatch between F_sal and F_red")
    z = tape.matmul(params.w_bilinear, Tensor(f_red))  # (d, n)
    scaled = tape.mul(z, Tensor(np.tile(np.asarray(f_sal, dtype=np.float64), (params.d, 1))))
    return tape.matmul(params.w_out, tape.tanh(scaled))  # (1, n)


def ctx_score(f_sal_i: float, f_red_i: np.ndarray, params: CtxRankerParams) -> float:
    """Selection score of a single candidate."""
    f_red_i = np.asarray(f_red_i, dtype=np.float64).reshape(-1, 1)
    scores = ctx_forward(Tape(), params, np.array([f_sal_i]), f_red_i)
    return scores.item()


def ctx_scores(params: CtxRankerParams, f_sal: np.ndarray, f_red: np.ndarray) -> np.ndarray:
    return ctx_forward(Tape(), params, f_sal, f_red).data[0].copy()


@dataclass(frozen=True)
class CtxTrainConfig:
    m: int = 10
    d: int = 20
    tau: float = 20.0
    epochs: int = 2
    seed: int = 0
    init_lr: float = 2e-3
    warmup: int = 100
    max_summary_sentences: int = 3
    measure: str = "mean12"
    sem_norm_scope: str = "step"


def train_ctx(
    docs: list[Document],
    salience_model: SalienceModel,
    embeddings: EmbeddingSet,
    config: CtxTrainConfig,
) -> CtxRankerParams:
    """Train the selection ranker on sampled oracle contexts.

    Per document and epoch: sample a context of 1..min(l, |labels|)-1 label
    sentences (empty for single-label documents), build P over the remaining
    sentences from ctx scores and Q from gains against the abstract, and take
    an Adam step on KL(P||Q). Salience parameters stay frozen.
    """
    for doc in docs:
        if not doc.oracle_labels:
            raise RankerError(f"document {doc.id!r} has no oracle labels")
        if doc.abstract is None:
            raise RankerError(f"document {doc.id!r} has no reference abstract")
    rng = np.random.default_rng(config.seed)
    params = init_ctx_params(config.m, config.d, embeddings.dim, config.tau, rng, config.sem_norm_scope)
    state = AdamState(params=params.trainable)
    sal_cache = {doc.id: document_salience(doc, embeddings, salience_model) for doc in docs}
    meters = {doc.id: _DocMeasure(doc, config.measure) for doc in docs}
    order = np.arange(len(docs))
    step = 0
    l = config.max_summary_sentences
    for _ in range(config.epochs):
        rng.shuffle(order)
        epoch_losses = []
        for idx in order:
            doc = docs[idx]
            labels = sorted(doc.oracle_labels)
            if len(labels) >= 2:
                size = int(rng.integers(1, min(l, len(labels))))
                context = sorted(int(i) for i in rng.choice(labels, size=size, replace=False))
            else:
                context = []
            candidates = [i for i in range(len(doc.sentences)) if i not in set(context)]
            if not candidates:
                continue
            f_red = step_feature_matrix(
                [doc.sentences[i] for i in candidates],
                [doc.sentences[i] for i in context],
                embeddings.matrix(doc),
                config.m,
                config.sem_norm_scope,
            )
            gains = step_gains(doc, context, candidates, config.measure, _meter=meters[doc.id])
            q = target_distribution(gains, config.tau).probabilities
            tape = Tape()
            scores = ctx_forward(tape, params, sal_cache[doc.id][candidates], f_red)
            loss = _kl_tape(tape, scores, q)
            grads = backward(tape, loss, params.trainable)
            step += 1
            adam_step(state, grads, lr_at(step, config.init_lr, config.warmup))
            epoch_losses.append(loss.item())
        if epoch_losses:
            params.epoch_losses.append(float(np.mean(epoch_losses)))
    return params


# --- SEQ: conditional sequence ranker ------------------------------------


@dataclass
class SeqRankerParams:
    """One-layer attention decoder plus scoring weights."""

    w_q: Tensor
    w_k: Tensor
    w_v: Tensor
    w_proj: Tensor
    w_1s: Tensor  # (hidden, 2*dim)
    w_2s: Tensor  # (1, hidden)
    w_ds: Tensor  # (dim, dim) global bilinear match
    w_o: Tensor  # (1, 1) combination weight
    dim: int
    hidden: int
    tau: float
    dropout: float = 0.1
    epoch_losses: list[float] = field(default_factory=list)

    def save(self, path) -> None:
        save_checkpoint(
            path,
            kind="seq",
            dim=self.dim,
            tensors={
                "w_q": self.w_q,
                "w_k": self.w_k,
                "w_v": self.w_v,
                "w_proj": self.w_proj,
                "w_1s": self.w_1s,
                "w_2s": self.w_2s,
                "w_ds": self.w_ds,
                "w_o": self.w_o,
            },
            config={"dim": self.dim, "hidden": self.hidden, "tau": self.tau, "dropout": self.dropout},
        )

    @classmethod
    def load(cls, path) -> "SeqRankerParams":
        ckpt = load_checkpoint(path)
        if ckpt.kind != "seq":
            raise RankerError(f"checkpoint kind {ckpt.kind!r} is not 'seq'")
        cfg = ckpt.config
        tensors = {name: Tensor(arr, requires_grad=True) for name, arr in ckpt.tensors.items()}
        return cls(
            dim=ckpt.dim,
            hidden=int(cfg["hidden"]),
            tau=float(cfg["tau"]),
            dropout=float(cfg.get("dropout", 0.1)),
            **tensors,
        )

    @property
    def trainable(self) -> list[Tensor]:
        return [self.w_q, self.w_k, self.w_v, self.w_proj, self.w_1s, self.w_2s, self.w_ds, self.w_o]


def init_seq_params(dim: int, tau: float, rng: np.random.Generator, hidden: int | None = None, dropout: float = 0.1) -> SeqRankerParams:
    hidden = hidden or dim
    s_dim = 1.0 / np.sqrt(dim)

    def uniform(rows, cols, scale):
        return Tensor(rng.uniform(-scale, scale, size=(rows, cols)), requires_grad=True)

    return SeqRankerParams(
        w_q=uniform(dim, dim, s_dim),
        w_k=uniform(dim, dim, s_dim),
        w_v=uniform(dim, dim, s_dim),
        w_proj=uniform(dim, dim, s_dim),
        w_1s=uniform(hidden, 2 * dim, 1.0 / np.sqrt(2 * dim)),
        w_2s=uniform(1, hidden, 1.0 / np.sqrt(hidden)),
        w_ds=uniform(dim, dim, s_dim),
        w_o=Tensor(np.ones((1, 1)), requires_grad=True),
        dim=dim,
        hidden=hidden,
        tau=tau,
        dropout=dropout,
    )


def seq_decoder_state(
    tape: Tape,
    params: SeqRankerParams,
    selected_embs: np.ndarray,
    encoder_outs: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Decoder state: mean-of-selected query, one scaled dot-product
    attention layer over the encoder outputs, residual add and projection.

    The query is the zero vector at the first step. Dropout masks the
    attention output only in training mode.
    """
    if encoder_outs.shape[1] != params.dim:
        raise RankerError(f"encoder dim {encoder_outs.shape[1]} != model dim {params.dim}")
    if len(selected_embs) == 0:
        query = np.zeros((1, params.dim))
    else:
        sel = np.asarray(selected_embs, dtype=np.float64).reshape(-1, params.dim)
        query = sel.mean(axis=0, keepdims=True)
    q = tape.matmul(Tensor(query), params.w_q)  # (1, dim)
    keys = tape.matmul(Tensor(encoder_outs), params.w_k)  # (L, dim)
    att = tape.softmax(tape.scalar_mul(tape.matmul(q, tape.transpose(keys)), 1.0 / np.sqrt(params.dim)))
    values = tape.matmul(Tensor(encoder_outs), params.w_v)  # (L, dim)
    context = tape.matmul(att, values)  # (1, dim)
    if training and params.dropout > 0.0:
        if rng is None:
            raise RankerError("training-mode decoder needs an rng for dropout")
        keep = (rng.random((1, params.dim)) >= params.dropout).astype(np.float64)
        context = tape.mul(context, Tensor(keep / (1.0 - params.dropout)))
    return tape.matmul(tape.add(context, Tensor(query)), params.w_proj)


def seq_scores(
    tape: Tape,
    params: SeqRankerParams,
    state: Tensor,
    cand_embs: np.ndarray,
    doc_vec: np.ndarray,
) -> Tensor:
    """Candidate scores o = W_o (o_l + o_g) given the decoder state."""
    n = cand_embs.shape[0]
    if cand_embs.shape[1] != params.dim:
        raise RankerError(f"candidate dim {cand_embs.shape[1]} != model dim {params.dim}")
    tiled = tape.matmul(tape.transpose(state), Tensor(np.ones((1, n))))  # (dim, n)
    x = tape.concat([tiled, Tensor(cand_embs.T)], axis=0)  # (2 dim, n)
    o_l = tape.matmul(params.w_2s, tape.tanh(tape.matmul(params.w_1s, x)))  # (1, n)
    u = tape.matmul(Tensor(doc_vec.reshape(1, -1)), params.w_ds)  # (1, dim)
    o_g = tape.tanh(tape.matmul(u, Tensor(cand_embs.T)))  # (1, n)
    return tape.matmul(params.w_o, tape.add(o_l, o_g))  # (1, n)


def corrupt_context(prefix: Sequence[int], replace_prob: float, rng: np.random.Generator, n_sentences: int) -> list[int]:
    """Teacher-forcing corruption: each context sentence is independently
    swapped for another random document sentence with ``replace_prob``."""
    context = list(prefix)
    if n_sentences <= 1 or replace_prob <= 0.0:
        return context
    for pos, orig in enumerate(context):
        if rng.random() < replace_prob:
            others = [i for i in range(n_sentences) if i != orig]
            context[pos] = int(others[rng.integers(len(others))])
    return context


@dataclass(frozen=True)
class SeqTrainConfig:
    tau: float = 20.0
    epochs: int = 2
    seed: int = 0
    replace_prob: float = 0.2
    init_lr: float = 2e-3
    warmup: int = 100
    max_summary_sentences: int = 3
    measure: str = "mean12"
    hidden: int | None = None
    dropout: float = 0.1


def train_seq(
    docs: list[Document],
    embeddings: EmbeddingSet,
    config: SeqTrainConfig,
) -> SeqRankerParams:
    """Teacher-forced training over the greedy oracle extraction order.

    At step k each of the k-1 context sentences is independently replaced by
    another random document sentence with ``replace_prob``; the softmax P
    runs over the sentences outside the actual context, Q over the same
    candidates from gains against the abstract. Per-document loss is the sum
    of step KLs.
    """
    for doc in docs:
        if doc.abstract is None:
            raise RankerError(f"document {doc.id!r} has no reference abstract")
    rng = np.random.default_rng(config.seed)
    params = init_seq_params(embeddings.dim, config.tau, rng, config.hidden, config.dropout)
    state = AdamState(params=params.trainable)
    meters = {doc.id: _DocMeasure(doc, config.measure) for doc in docs}
    sequences = {doc.id: greedy_oracle_sequence(doc, config.max_summary_sentences, config.measure) for doc in docs}
    skipped = [doc.id for doc in docs if not sequences[doc.id]]
    if skipped:
        logger.warning("train_seq: %d documents with empty oracle sequence skipped", len(skipped))
    order = np.arange(len(docs))
    step_count = 0
    for _ in range(config.epochs):
        rng.shuffle(order)
        epoch_losses = []
        for idx in order:
            doc = docs[idx]
            sequence = sequences[doc.id]
            if not sequence:
                continue
            emb = embeddings.matrix(doc)
            doc_vec = embeddings.doc_vector(doc)
            tape = Tape()
            total = None
            for k in range(1, len(sequence) + 1):
                context = corrupt_context(sequence[: k - 1], config.replace_prob, rng, len(doc.sentences))
                cand = [i for i in range(len(doc.sentences)) if i not in set(context)]
                if not cand:
                    continue
                dec = seq_decoder_state(tape, params, emb[context], emb, training=True, rng=rng)
                scores = seq_scores(tape, params, dec, emb[cand], doc_vec)
                gains = step_gains(doc, sorted(set(context)), cand, config.measure, _meter=meters[doc.id])
                q = target_distribution(gains, config.tau).probabilities
                loss = _kl_tape(tape, scores, q)
                total = loss if total is None else tape.add(total, loss)
            if total is None:
                continue
            grads = backward(tape, total, params.trainable)
            step_count += 1
            adam_step(state, grads, lr_at(step_count, config.init_lr, config.warmup))
            epoch_losses.append(total.item())
        if epoch_losses:
            params.epoch_losses.append(float(np.mean(epoch_losses)))
    return params
