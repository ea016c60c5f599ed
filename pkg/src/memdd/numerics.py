"""Dense float64 primitives, Adam, and a splitmix64 PRNG.

Vectors and matrices are plain ``numpy`` float64 arrays (1-D and C-ordered
2-D). The single-sample functions here accept an optional ``tracer`` that
tallies floating-point work under the counting convention used by
:mod:`memdd.complexity`:

* matrix-vector product: ``2 * rows * cols``
* Hadamard product / gated merge: one op per element
* bias adds, shortcut adds, activations: free
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np


class ShapeError(ValueError):
    """Raised when array dimensions do not line up."""


class FlopTracer:
    """Accumulates operation counts reported by the traced primitives."""

    def __init__(self):
        self.counts = Counter()

    def record(self, op: str, n: int) -> None:
        self.counts[op] += int(n)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def as_vec(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"expected a vector, got shape {v.shape}")
    return v


def as_mat(w) -> np.ndarray:
    m = np.asarray(w, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {m.shape}")
    return m


def mat_vec(W, x, tracer: FlopTracer | None = None) -> np.ndarray:
    """Return ``W @ x``."""
    W = as_mat(W)
    x = as_vec(x)
    if W.shape[1] != x.shape[0]:
        raise ShapeError(f"mat_vec: matrix {W.shape} incompatible with vector ({x.shape[0]},)")
    if tracer is not None:
        tracer.record("matmul", 2 * W.shape[0] * W.shape[1])
    return W @ x


def hadamard(a, b, tracer: FlopTracer | None = None) -> np.ndarray:
    a = as_vec(a)
    b = as_vec(b)
    if a.shape != b.shape:
        raise ShapeError(f"hadamard: length {a.shape[0]} vs {b.shape[0]}")
    if tracer is not None:
        tracer.record("hadamard", a.shape[0])
    return a * b


def vec_add(a, b, tracer: FlopTracer | None = None, counted: bool = False) -> np.ndarray:
    """Elementwise sum. Only gated merges (``counted=True``) are billed."""
    a = as_vec(a)
    b = as_vec(b)
    if a.shape != b.shape:
        raise ShapeError(f"vec_add: length {a.shape[0]} vs {b.shape[0]}")
    if tracer is not None and counted:
        tracer.record("merge", a.shape[0])
    return a + b


def tanh_vec(x) -> np.ndarray:
    return np.tanh(as_vec(x))


def sigmoid(x):
    # Split by sign so exp never overflows.
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class LayerNormParams:
    gain: np.ndarray
    bias: np.ndarray
    eps: float = 1e-5

    def __post_init__(self):
        self.gain = as_vec(self.gain)
        self.bias = as_vec(self.bias)
        if self.gain.shape != self.bias.shape:
            raise ShapeError(f"layer norm gain {self.gain.shape} vs bias {self.bias.shape}")

    @classmethod
    def identity(cls, n: int, eps: float = 1e-5) -> "LayerNormParams":
        return cls(np.ones(n), np.zeros(n), eps)


def layer_norm(x, p: LayerNormParams) -> np.ndarray:
    """Normalize over the last axis with population variance, then apply gain and bias.

    Works on a single vector or on a ``(batch, n)`` array.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != p.gain.shape[0]:
        raise ShapeError(f"layer_norm: input width {x.shape[-1]} vs gain {p.gain.shape[0]}")
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    return p.gain * (x - mu) / np.sqrt(var + p.eps) + p.bias


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    """First/second moments keyed like the parameter dict they track."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict, lr: float = 1e-3, **kw) -> "AdamState":
        s = cls(lr=lr, **kw)
        for name, p in params.items():
            s.m[name] = np.zeros_like(p, dtype=np.float64)
            s.v[name] = np.zeros_like(p, dtype=np.float64)
        return s


def adam_step(params: dict, grads: dict, s: AdamState) -> None:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    for name, g in grads.items():
        if params[name].shape != g.shape:
            raise ShapeError(f"adam_step: {name} param {params[name].shape} vs grad {g.shape}")
        if name not in s.m:
            s.m[name] = np.zeros_like(g)
            s.v[name] = np.zeros_like(g)
        elif s.m[name].shape != g.shape:
            raise ShapeError(f"adam_step: {name} moment {s.m[name].shape} vs grad {g.shape}")
    s.t += 1
    c1 = 1.0 - s.beta1**s.t
    c2 = 1.0 - s.beta2**s.t
    for name, g in grads.items():
        m = s.m[name]
        v = s.v[name]
        m *= s.beta1
        m += (1.0 - s.beta1) * g
        v *= s.beta2
        v += (1.0 - s.beta2) * g * g
        params[name] -= s.lr * (m / c1) / (np.sqrt(v / c2) + s.eps)


def clip_global_norm(grads: dict, max_norm: float) -> float:
    """Rescale ``grads`` in place so their joint L2 norm is at most ``max_norm``."""
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if norm > max_norm > 0:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


# ---------------------------------------------------------------------------
# splitmix64
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """splitmix64 generator; the stream is a pure function of the seed."""

    def __init__(self, seed: int = 0):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_unit(self) -> float:
        # Top 53 bits: exactly representable, so the result is < 1.
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        if not lo < hi:
            raise ValueError(f"uniform: need lo < hi, got lo={lo!r} hi={hi!r}")
        y = lo + (hi - lo) * self.next_unit()
        if y >= hi:
            y = math.nextafter(hi, lo)
        return max(y, lo)

    def uniform_array(self, shape, lo: float, hi: float) -> np.ndarray:
        n = int(np.prod(shape)) if shape else 1
        return np.array([self.uniform(lo, hi) for _ in range(n)], dtype=np.float64).reshape(shape)

    def normal(self) -> float:
        """Standard normal via Box-Muller (one draw per call, two uniforms)."""
        u1 = 1.0 - self.next_unit()
        u2 = self.next_unit()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow: n must be positive")
        # Rejection sampling keeps the draw unbiased.
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def permutation(self, n: int) -> list[int]:
        """Fisher-Yates shuffle of ``range(n)``."""
        idx = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.randbelow(i + 1)
            idx[i], idx[j] = idx[j], idx[i]
        return idx


def prng_next_uniform(s: SplitMix64, lo: float, hi: float) -> float:
    return s.uniform(lo, hi)
