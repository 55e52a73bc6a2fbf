"""Salience ranking: bilinear document-sentence matching with a per-document
softmax, trained to maximize the log likelihood of oracle-labeled sentences.

The salience model is trained once and then frozen; the selection ranker
(rankers.train_ctx) never touches its parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from redsum.corpus import Document
from redsum.embed import EmbeddingSet
from redsum.grad import AdamState, Tape, Tensor, adam_step, backward, load_checkpoint, lr_at, save_checkpoint


class SalienceError(ValueError):
    pass


@dataclass
class SalienceModel:
    w_ds: Tensor  # (dim, dim) bilinear matching matrix
    dim: int
    final_loss: float | None = None
    epoch_losses: list[float] = field(default_factory=list)

    def save(self, path) -> None:
        save_checkpoint(path, kind="salience", dim=self.dim, tensors={"w_ds": self.w_ds}, config={"dim": self.dim})

    @classmethod
    def load(cls, path) -> "SalienceModel":
        ckpt = load_checkpoint(path)
        if ckpt.kind != "salience":
            raise SalienceError(f"checkpoint kind {ckpt.kind!r} is not 'salience'")
        w = ckpt.tensors["w_ds"]
        if w.shape != (ckpt.dim, ckpt.dim):
            raise SalienceError(f"w_ds shape {w.shape} inconsistent with dim {ckpt.dim}")
        return cls(w_ds=Tensor(w, requires_grad=True), dim=ckpt.dim)


def init_salience_model(dim: int, rng: np.random.Generator) -> SalienceModel:
    scale = 1.0 / np.sqrt(dim)
    w = rng.uniform(-scale, scale, size=(dim, dim))
    return SalienceModel(w_ds=Tensor(w, requires_grad=True), dim=dim)


def salience_forward(tape: Tape, model: SalienceModel, doc_vec: np.ndarray, emb_matrix: np.ndarray) -> Tensor:
    """Softmax over bilinear logits h_D . W . h_s across all L sentences."""
    if emb_matrix.shape[1] != model.dim or doc_vec.shape[-1] != model.dim:
        raise SalienceError(
            f"embedding dim {emb_matrix.shape[1]} does not match model dim {model.dim}"
        )
    u = tape.matmul(Tensor(doc_vec), model.w_ds)  # (1, dim)
    logits = tape.matmul(u, Tensor(emb_matrix.T))  # (1, L)
    return tape.softmax(logits)


def salience_scores(doc_vec: np.ndarray, emb_matrix: np.ndarray, model: SalienceModel) -> np.ndarray:
    """Per-sentence salience probabilities for one document."""
    probs = salience_forward(Tape(), model, doc_vec, emb_matrix)
    return probs.data[0].copy()


def document_salience(doc: Document, embeddings: EmbeddingSet, model: SalienceModel) -> np.ndarray:
    return salience_scores(embeddings.doc_vector(doc), embeddings.matrix(doc), model)


def nll_loss(tape: Tape, model: SalienceModel, doc_vec: np.ndarray, emb_matrix: np.ndarray, labels: list[int]) -> Tensor:
    """Negative log likelihood of the labeled sentences under the salience
    softmax."""
    probs = salience_forward(tape, model, doc_vec, emb_matrix)
    picked = tape.index_select(tape.log(probs), sorted(labels))
    return tape.scalar_mul(tape.sum(picked), -1.0)


@dataclass(frozen=True)
class SalienceTrainConfig:
    dim: int = 256
    epochs: int = 2
    seed: int = 0
    init_lr: float = 2e-3
    warmup: int = 100


def train_salience(
    docs: list[Document],
    embeddings: EmbeddingSet,
    config: SalienceTrainConfig,
) -> SalienceModel:
    """Adam over W_ds on the per-document NLL; deterministic given the seed."""
    for doc in docs:
        if not doc.oracle_labels:
            raise SalienceError(f"document {doc.id!r} has no oracle labels")
    rng = np.random.default_rng(config.seed)
    model = init_salience_model(config.dim, rng)
    state = AdamState(params=[model.w_ds])
    order = np.arange(len(docs))
    step = 0
    for _ in range(config.epochs):
        rng.shuffle(order)
        epoch_losses: list[float] = []
        for idx in order:
            doc = docs[idx]
            tape = Tape()
            loss = nll_loss(
                tape,
                model,
                embeddings.doc_vector(doc),
                embeddings.matrix(doc),
                sorted(doc.oracle_labels),
            )
            grads = backward(tape, loss, [model.w_ds])
            step += 1
            adam_step(state, grads, lr_at(step, config.init_lr, config.warmup))
            epoch_losses.append(loss.item())
        if epoch_losses:
            model.epoch_losses.append(float(np.mean(epoch_losses)))
    model.final_loss = model.epoch_losses[-1] if model.epoch_losses else None
    return model
