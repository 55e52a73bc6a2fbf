"""Micro reverse-mode autodiff over small dense matrices, plus Adam and the
warmup learning-rate schedule.

Tensors are 2-D float64 matrices (scalars are 1x1, vectors are rows). A Tape
records primitive ops in execution order; ``backward`` replays it once in
reverse, which is exact because the insertion order is already topological.
Deliberately tiny: no broadcasting beyond what the rankers need, no
higher-order derivatives, no control flow.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class GradError(ValueError):
    """Shape or usage error in the autodiff layer."""


class Tensor:
    """A dense matrix, optionally tracked for gradients."""

    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, values, requires_grad: bool = False, name: str | None = None):
        data = np.asarray(values, dtype=np.float64)
        if data.ndim == 0:
            data = data.reshape(1, 1)
        elif data.ndim == 1:
            data = data.reshape(1, -1)
        elif data.ndim != 2:
            raise GradError(f"tensors are 2-D matrices, got shape {data.shape}")
        if not np.isfinite(data).all():
            raise GradError("non-finite tensor values")
        self.data = np.ascontiguousarray(data)
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise GradError(f"item() on tensor of shape {self.shape}")
        return float(self.data[0, 0])

    def __repr__(self) -> str:
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


@dataclass
class TapeEntry:
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: Callable[[np.ndarray, dict[int, np.ndarray]], None]


class Tape:
    """Ordered record of primitive ops; insertion order is topological."""

    def __init__(self):
        self.entries: list[TapeEntry] = []

    def _record(self, op: str, inputs: tuple[Tensor, ...], output: Tensor, bwd) -> None:
        self.entries.append(TapeEntry(op, inputs, output, bwd))

    @staticmethod
    def _accumulate(grads: dict[int, np.ndarray], t: Tensor, g: np.ndarray) -> None:
        key = id(t)
        if key in grads:
            grads[key] += g
        else:
            grads[key] = g.copy()

    # --- primitives ---------------------------------------------------

    def matmul(self, a, b) -> Tensor:
        a, b = _as_tensor(a), _as_tensor(b)
        if a.shape[1] != b.shape[0]:
            raise GradError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
        out = Tensor(a.data @ b.data, a.requires_grad or b.requires_grad)
        if out.requires_grad:
            def bwd(g, grads):
                if a.requires_grad:
                    self._accumulate(grads, a, g @ b.data.T)
                if b.requires_grad:
                    self._accumulate(grads, b, a.data.T @ g)
            self._record("matmul", (a, b), out, bwd)
        return out

    def _elementwise_pair(self, op: str, a, b, fwd, da, db) -> Tensor:
        a, b = _as_tensor(a), _as_tensor(b)
        if a.shape != b.shape:
            raise GradError(f"{op} shape mismatch: {a.shape} vs {b.shape}")
        out = Tensor(fwd(a.data, b.data), a.requires_grad or b.requires_grad)
        if out.requires_grad:
            def bwd(g, grads):
                if a.requires_grad:
                    self._accumulate(grads, a, da(g, a.data, b.data))
                if b.requires_grad:
                    self._accumulate(grads, b, db(g, a.data, b.data))
            self._record(op, (a, b), out, bwd)
        return out

    def add(self, a, b) -> Tensor:
        return self._elementwise_pair("add", a, b, np.add, lambda g, x, y: g, lambda g, x, y: g)

    def sub(self, a, b) -> Tensor:
        return self._elementwise_pair("sub", a, b, np.subtract, lambda g, x, y: g, lambda g, x, y: -g)

    def mul(self, a, b) -> Tensor:
        return self._elementwise_pair("mul", a, b, np.multiply, lambda g, x, y: g * y, lambda g, x, y: g * x)

    def scalar_mul(self, a, c: float) -> Tensor:
        a = _as_tensor(a)
        c = float(c)
        out = Tensor(a.data * c, a.requires_grad)
        if out.requires_grad:
            def bwd(g, grads):
                self._accumulate(grads, a, g * c)
            self._record("scalar-mul", (a,), out, bwd)
        return out

    def tanh(self, a) -> Tensor:
        a = _as_tensor(a)
        y = np.tanh(a.data)
        out = Tensor(y, a.requires_grad)
        if out.requires_grad:
            def bwd(g, grads):
                self._accumulate(grads, a, g * (1.0 - y * y))
            self._record("tanh", (a,), out, bwd)
        return out

    def log(self, a) -> Tensor:
        a = _as_tensor(a)
        out = Tensor(np.log(a.data), a.requires_grad)
        if out.requires_grad:
            def bwd(g, grads):
                self._accumulate(grads, a, g / a.data)
            self._record("log", (a,), out, bwd)
        return out

    def softmax(self, a) -> Tensor:
        """Row-wise softmax with max subtraction."""
        a = _as_tensor(a)
        z = a.data - a.data.max(axis=1, keepdims=True)
        e = np.exp(z)
        y = e / e.sum(axis=1, keepdims=True)
        out = Tensor(y, a.requires_grad)
        if out.requires_grad:
            def bwd(g, grads):
                dot = (g * y).sum(axis=1, keepdims=True)
                self._accumulate(grads, a, y * (g - dot))
            self._record("softmax", (a,), out, bwd)
        return out

    def sum(self, a) -> Tensor:
        a = _as_tensor(a)
        out = Tensor(a.data.sum(), a.requires_grad)
        if out.requires_grad:
            def bwd(g, grads):
                self._accumulate(grads, a, np.full(a.shape, float(g[0, 0])))
            self._record("sum", (a,), out, bwd)
        return out

    def concat(self, tensors: Sequence, axis: int = 1) -> Tensor:
        if axis not in (0, 1):
            raise GradError("concat axis must be 0 or 1")
        ts = [_as_tensor(t) for t in tensors]
        out = Tensor(np.concatenate([t.data for t in ts], axis=axis), any(t.requires_grad for t in ts))
        if out.requires_grad:
            sizes = [t.shape[axis] for t in ts]
            def bwd(g, grads):
                offset = 0
                for t, size in zip(ts, sizes):
                    if t.requires_grad:
                        piece = g[offset : offset + size, :] if axis == 0 else g[:, offset : offset + size]
                        self._accumulate(grads, t, piece)
                    offset += size
            self._record("concat", tuple(ts), out, bwd)
        return out

    def index_select(self, a, cols: Sequence[int]) -> Tensor:
        """Select columns (duplicates allowed); gradient scatter-adds back."""
        a = _as_tensor(a)
        cols = np.asarray(cols, dtype=np.intp)
        if cols.size == 0 or cols.min() < 0 or cols.max() >= a.shape[1]:
            raise GradError(f"index_select columns out of range for shape {a.shape}")
        out = Tensor(a.data[:, cols], a.requires_grad)
        if out.requires_grad:
            def bwd(g, grads):
                ga = np.zeros(a.shape)
                np.add.at(ga, (slice(None), cols), g)
                self._accumulate(grads, a, ga)
            self._record("index-select", (a,), out, bwd)
        return out

    def transpose(self, a) -> Tensor:
        a = _as_tensor(a)
        out = Tensor(a.data.T, a.requires_grad)
        if out.requires_grad:
            def bwd(g, grads):
                self._accumulate(grads, a, g.T)
            self._record("transpose", (a,), out, bwd)
        return out


def backward(tape: Tape, loss: Tensor, params: Sequence[Tensor] | None = None) -> dict[Tensor, np.ndarray]:
    """Reverse-mode gradients of a scalar loss for every tracked tensor.

    Returns a map keyed by parameter tensor; parameters the loss does not
    depend on get zero gradients.
    """
    if loss.data.shape != (1, 1):
        raise GradError(f"loss must be scalar, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones((1, 1))}
    for entry in reversed(tape.entries):
        g = grads.get(id(entry.output))
        if g is None:
            continue
        entry.backward(g, grads)

    tracked: dict[Tensor, np.ndarray] = {}
    seen = set()
    for entry in tape.entries:
        for t in entry.inputs:
            if t.requires_grad and id(t) not in seen:
                seen.add(id(t))
                tracked[t] = grads.get(id(t), np.zeros(t.shape))
    if params is not None:
        return {p: tracked.get(p, np.zeros(p.shape)) for p in params}
    return tracked


def finite_diff_check(
    f: Callable[[], tuple[Tape, Tensor]],
    params: Sequence[Tensor],
    h: float = 1e-5,
) -> float:
    """Max relative error between backward() and central differences.

    ``f`` rebuilds the forward pass from the current parameter values and
    returns (tape, scalar loss); the finite-difference side only ever reads
    loss values, so it is independent of the gradient path it checks.
    """
    tape, loss = f()
    grads = backward(tape, loss, params)
    worst = 0.0
    for p in params:
        ad = grads[p].ravel()
        flat = p.data.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = f()[1].item()
            flat[i] = orig - h
            f_minus = f()[1].item()
            flat[i] = orig
            fd = (f_plus - f_minus) / (2.0 * h)
            err = abs(fd - ad[i]) / max(abs(fd), abs(ad[i]), 1e-8)
            worst = max(worst, err)
    return worst


@dataclass
class AdamState:
    """Per-parameter moment accumulators for bias-corrected Adam."""

    params: list[Tensor]
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if not self.m:
            self.m = [np.zeros(p.shape) for p in self.params]
            self.v = [np.zeros(p.shape) for p in self.params]


def adam_step(state: AdamState, grads: dict[Tensor, np.ndarray], lr: float) -> None:
    """One in-place bias-corrected Adam update over the state's parameters."""
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1 ** state.step
    bias2 = 1.0 - b2 ** state.step
    for i, p in enumerate(state.params):
        g = grads[p]
        if g.shape != p.data.shape:
            raise GradError(f"gradient shape {g.shape} != parameter shape {p.data.shape}")
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g
        m_hat = state.m[i] / bias1
        v_hat = state.v[i] / bias2
        p.data -= lr * m_hat / (np.sqrt(v_hat) + state.eps)


def lr_at(step: int, init: float, warmup: int) -> float:
    """Inverse-sqrt schedule with linear warmup (both branches meet at
    ``step == warmup``)."""
    if step < 1:
        raise ValueError("step must be >= 1")
    return init * min(step ** -0.5, step * warmup ** -1.5)


# --- checkpoints -------------------------------------------------------


CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    kind: str
    dim: int
    tensors: dict[str, np.ndarray]
    config: dict


def save_checkpoint(path, kind: str, dim: int, tensors: dict[str, Tensor | np.ndarray], config: dict) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "kind": kind,
        "dim": int(dim),
        "tensors": {
            name: {
                "shape": list((t.data if isinstance(t, Tensor) else np.asarray(t)).shape),
                "values": (t.data if isinstance(t, Tensor) else np.asarray(t)).ravel().tolist(),
            }
            for name, t in tensors.items()
        },
        "config": config,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_checkpoint(path) -> Checkpoint:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version!r}")
    tensors = {
        name: np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in payload["tensors"].items()
    }
    return Checkpoint(kind=payload["kind"], dim=int(payload["dim"]), tensors=tensors, config=payload.get("config", {}))
