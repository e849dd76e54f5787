"""Minimal numerical core: dense layers, multi-head self-attention, Adam,
and a finite-difference gradient checker.

Everything here is plain numpy at float64. Forward passes accept a single
vector (d,) or a batch (..., d); backward passes return exact analytic
gradients that the checker verifies against central differences. One
training run mutates its parameters single-threaded; distinct model
instances share nothing.

Checkpoints are a one-line JSON header (model metadata plus tensor names
and shapes in declared order) followed by the tensors as little-endian
float64.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ValidationError

RELU = "relu"
TANH = "tanh"
SIGMOID = "sigmoid"
IDENTITY = "identity"
ACTIVATIONS = (RELU, TANH, SIGMOID, IDENTITY)


def apply_activation(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == TANH:
        return np.tanh(z)
    if kind == RELU:
        return np.maximum(z, 0.0)
    if kind == SIGMOID:
        return 1.0 / (1.0 + np.exp(-z))
    if kind == IDENTITY:
        return z
    raise ValueError(f"unknown activation {kind!r}")


def activation_grad(kind: str, z: np.ndarray, h: np.ndarray) -> np.ndarray:
    """dh/dz given pre-activation z and output h = activation(z)."""
    if kind == TANH:
        return 1.0 - h * h
    if kind == RELU:
        return (z > 0.0).astype(np.float64)
    if kind == SIGMOID:
        return h * (1.0 - h)
    if kind == IDENTITY:
        return np.ones_like(z)
    raise ValueError(f"unknown activation {kind!r}")


@dataclass
class DenseLayer:
    """Affine map plus activation: h = f(W x + b), W is (out, in)."""

    W: np.ndarray
    b: np.ndarray
    activation: str = IDENTITY

    def __post_init__(self) -> None:
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.b.ndim != 1:
            raise ValidationError("W must be 2-D and b 1-D")
        if self.W.shape[0] != self.b.shape[0]:
            raise ValidationError(
                f"W rows {self.W.shape[0]} != b length {self.b.shape[0]}"
            )
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))):
            raise ValidationError("layer parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]


def init_dense(
    n_in: int, n_out: int, activation: str, rng: np.random.Generator
) -> DenseLayer:
    """Symmetric uniform init in +/- sqrt(6 / (fan_in + fan_out)), zero bias."""
    limit = math.sqrt(6.0 / (n_in + n_out))
    W = rng.uniform(-limit, limit, size=(n_out, n_in))
    return DenseLayer(W, np.zeros(n_out), activation)


def dense_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != layer.in_dim:
        raise ValueError(
            f"input dim {x.shape[-1]} does not match layer in_dim {layer.in_dim}"
        )
    z = x @ layer.W.T + layer.b
    return apply_activation(layer.activation, z)


def dense_backward(
    layer: DenseLayer, x: np.ndarray, upstream: np.ndarray
) -> tuple[tuple[np.ndarray, np.ndarray], np.ndarray]:
    """Gradients for one layer: returns ((dW, db), dx).

    ``upstream`` is dLoss/dh with h the layer output; batch dims sum into
    the parameter gradients.
    """
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if x.shape[-1] != layer.in_dim or upstream.shape[-1] != layer.out_dim:
        raise ValueError(
            f"shape mismatch: x {x.shape}, upstream {upstream.shape}, "
            f"layer {layer.out_dim}x{layer.in_dim}"
        )
    z = x @ layer.W.T + layer.b
    h = apply_activation(layer.activation, z)
    dz = upstream * activation_grad(layer.activation, z, h)
    if x.ndim == 1:
        dW = np.outer(dz, x)
        db = dz.copy()
    else:
        x2 = x.reshape(-1, layer.in_dim)
        dz2 = dz.reshape(-1, layer.out_dim)
        dW = dz2.T @ x2
        db = dz2.sum(axis=0)
    dx = dz @ layer.W
    return (dW, db), dx


def softmax_rows(M: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax along the last axis."""
    M = np.asarray(M, dtype=np.float64)
    shifted = M - M.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _softmax_backward(A: np.ndarray, dA: np.ndarray) -> np.ndarray:
    # dS for A = softmax(S): A * (dA - sum(dA * A))
    return A * (dA - np.sum(dA * A, axis=-1, keepdims=True))


@dataclass
class MultiHeadAttention:
    """Scaled dot-product self-attention with h parallel heads.

    Per-head projections are (d, d_k); concatenated head outputs pass
    through the (h * d_k, d) output projection, so the block maps an
    n x d sequence back to n x d.
    """

    w_q: np.ndarray  # (h, d, d_k)
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray  # (h * d_k, d)

    def __post_init__(self) -> None:
        for name in ("w_q", "w_k", "w_v", "w_o"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            setattr(self, name, arr)
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} must be finite")
        h, d, d_k = self.w_q.shape
        if self.w_k.shape != (h, d, d_k) or self.w_v.shape != (h, d, d_k):
            raise ValidationError("w_q/w_k/w_v shapes must match (h, d, d_k)")
        if self.w_o.shape != (h * d_k, d):
            raise ValidationError(
                f"w_o must be ({h * d_k}, {d}), got {self.w_o.shape}"
            )

    @property
    def heads(self) -> int:
        return self.w_q.shape[0]

    @property
    def d_model(self) -> int:
        return self.w_q.shape[1]

    @property
    def d_k(self) -> int:
        return self.w_q.shape[2]


def init_attention(
    d: int, heads: int, d_k: int, rng: np.random.Generator
) -> MultiHeadAttention:
    lim_p = math.sqrt(6.0 / (d + d_k))
    lim_o = math.sqrt(6.0 / (heads * d_k + d))
    return MultiHeadAttention(
        w_q=rng.uniform(-lim_p, lim_p, size=(heads, d, d_k)),
        w_k=rng.uniform(-lim_p, lim_p, size=(heads, d, d_k)),
        w_v=rng.uniform(-lim_p, lim_p, size=(heads, d, d_k)),
        w_o=rng.uniform(-lim_o, lim_o, size=(heads * d_k, d)),
    )


def attention_forward(
    att: MultiHeadAttention, X: np.ndarray
) -> tuple[np.ndarray, dict]:
    """Multi-head self-attention over X of shape (..., n, d).

    Returns (output (..., n, d), cache) where cache feeds
    attention_backward.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != att.d_model:
        raise ValueError(
            f"input feature dim {X.shape[-1]} != attention d {att.d_model}"
        )
    scale = 1.0 / math.sqrt(att.d_k)
    # (h, ..., n, d_k)
    Q = np.einsum("...nd,hdk->h...nk", X, att.w_q)
    K = np.einsum("...nd,hdk->h...nk", X, att.w_k)
    V = np.einsum("...nd,hdk->h...nk", X, att.w_v)
    scores = np.einsum("h...nk,h...mk->h...nm", Q, K) * scale
    A = softmax_rows(scores)
    H = np.einsum("h...nm,h...mk->h...nk", A, V)
    # concat heads: (..., n, h * d_k)
    concat = np.moveaxis(H, 0, -2)
    concat = concat.reshape(*concat.shape[:-2], att.heads * att.d_k)
    out = concat @ att.w_o
    cache = {"X": X, "Q": Q, "K": K, "V": V, "A": A, "concat": concat}
    return out, cache


@dataclass
class AttentionGrads:
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray


def attention_backward(
    att: MultiHeadAttention, cache: Mapping[str, np.ndarray], upstream: np.ndarray
) -> tuple[AttentionGrads, np.ndarray]:
    """Exact gradients for all projections and the input sequence."""
    X, Q, K, V, A = cache["X"], cache["Q"], cache["K"], cache["V"], cache["A"]
    concat = cache["concat"]
    scale = 1.0 / math.sqrt(att.d_k)

    # parameter grads sum over every leading (batch and position) dim;
    # einsum cannot reduce over '...' so flatten those dims explicitly
    concat2 = concat.reshape(-1, att.heads * att.d_k)
    d_wo = concat2.T @ upstream.reshape(-1, att.d_model)
    d_concat = upstream @ att.w_o.T
    # split back into heads: (h, ..., n, d_k)
    dH = np.moveaxis(
        d_concat.reshape(*d_concat.shape[:-1], att.heads, att.d_k), -2, 0
    )
    dA = np.einsum("h...nk,h...mk->h...nm", dH, V)
    dV = np.einsum("h...nm,h...nk->h...mk", A, dH)
    dS = _softmax_backward(A, dA) * scale
    dQ = np.einsum("h...nm,h...mk->h...nk", dS, K)
    dK = np.einsum("h...nm,h...nk->h...mk", dS, Q)

    X2 = X.reshape(-1, att.d_model)
    d_wq = np.einsum("md,hmk->hdk", X2, dQ.reshape(att.heads, -1, att.d_k))
    d_wk = np.einsum("md,hmk->hdk", X2, dK.reshape(att.heads, -1, att.d_k))
    d_wv = np.einsum("md,hmk->hdk", X2, dV.reshape(att.heads, -1, att.d_k))
    dX = (
        np.einsum("h...nk,hdk->...nd", dQ, att.w_q)
        + np.einsum("h...nk,hdk->...nd", dK, att.w_k)
        + np.einsum("h...nk,hdk->...nd", dV, att.w_v)
    )
    return AttentionGrads(d_wq, d_wk, d_wv, d_wo), dX


@dataclass
class AdamState:
    """Bias-corrected Adam with per-parameter moment accumulators."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    state: AdamState,
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
) -> None:
    """One in-place Adam update over every parameter in ``params``."""
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape mismatch for {name!r}")
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


def grad_check(
    loss_fn: Callable[[], float],
    params: Mapping[str, np.ndarray],
    analytic: Mapping[str, np.ndarray],
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic grads and central differences.

    ``loss_fn`` re-evaluates the loss with the (temporarily perturbed)
    parameter arrays in ``params``; every coordinate is probed. Relative
    error uses the finite-difference value as reference:
    |a - n| / max(|n|, 1e-6), so a gradient off by a factor of two reports
    an error near 1.
    """
    worst = 0.0
    for name, p in params.items():
        g = np.asarray(analytic[name])
        if g.shape != p.shape:
            raise ValueError(f"analytic gradient shape mismatch for {name!r}")
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + step
            f_plus = loss_fn()
            p[idx] = orig - step
            f_minus = loss_fn()
            p[idx] = orig
            numeric = (f_plus - f_minus) / (2.0 * step)
            rel = abs(g[idx] - numeric) / max(abs(numeric), 1e-6)
            worst = max(worst, rel)
    return worst


# --- Checkpoint I/O ---------------------------------------------------------


def save_checkpoint(
    path: str | Path,
    meta: Mapping[str, object],
    tensors: Sequence[tuple[str, np.ndarray]],
) -> None:
    """One-line JSON header, then tensors in declared order as little-endian
    float64."""
    header = dict(meta)
    header["tensors"] = [[name, list(arr.shape)] for name, arr in tensors]
    line = json.dumps(header, sort_keys=True)
    with Path(path).open("wb") as fh:
        fh.write(line.encode("utf-8") + b"\n")
        for _, arr in tensors:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    with Path(path).open("rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        tensors: dict[str, np.ndarray] = {}
        for name, shape in header.pop("tensors"):
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValidationError(f"{path}: truncated checkpoint at {name!r}")
            tensors[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return header, tensors
