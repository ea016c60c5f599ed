"""Single-sample recurrent cells: Memory-DD, its ablation variants, LSTM, GRU, BiLSTM.

These are the reference semantics. The batched training path in
:mod:`memdd.bptt` is tested against them. Every step function takes an
optional :class:`~memdd.numerics.FlopTracer`.

Memory-DD step::

    d_t = W1 @ [h_{t-1}, x_t] + b
    c_t = f((W @ d_t) * c_{t-1} + d_t)
    h_t = f((W @ c_t) * d_t + d_t)

with the same ``W`` in both neuron groups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    FlopTracer,
    ShapeError,
    SplitMix64,
    as_vec,
    hadamard,
    mat_vec,
    sigmoid,
    vec_add,
)

KINDS = ("memdd", "lstm", "gru", "bilstm")
VARIANTS = ("baseline", "A", "B", "C", "D", "E")
ACTIVATIONS = ("tanh", "identity")


class ConfigError(ValueError):
    """Invalid model configuration."""


@dataclass(frozen=True)
class VariantFlags:
    multiplicative: bool = True
    shortcut_memory: bool = True
    shortcut_decide: bool = True
    untied: bool = False


VARIANT_FLAGS = {
    "baseline": VariantFlags(),
    "A": VariantFlags(multiplicative=False),
    "B": VariantFlags(shortcut_memory=False),
    "C": VariantFlags(shortcut_decide=False),
    "D": VariantFlags(shortcut_memory=False, shortcut_decide=False),
    "E": VariantFlags(untied=True),
}


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "memdd"
    d_h: int = 128
    d_x: int = 1
    variant: str = "baseline"
    activation: str = "tanh"
    out_dim: int = 1
    task: str = "cls"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.variant != "baseline" and self.kind != "memdd":
            raise ConfigError(f"variant {self.variant} requires kind memdd, got {self.kind}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.task not in ("cls", "reg"):
            raise ConfigError(f"unknown task {self.task!r}")
        if min(self.d_h, self.d_x, self.out_dim) < 1:
            raise ConfigError("dimensions must be >= 1")

    @property
    def flags(self) -> VariantFlags:
        return VARIANT_FLAGS[self.variant]

    @property
    def feature_dim(self) -> int:
        """Width of the encoding fed to the LayerNorm + FC head."""
        return 2 * self.d_h if self.kind == "bilstm" else self.d_h


@dataclass
class MemoryDDParams:
    W1: np.ndarray
    b: np.ndarray
    W: np.ndarray
    W2: np.ndarray | None = None

    @property
    def d_h(self) -> int:
        return self.W.shape[0]

    @property
    def d_x(self) -> int:
        return self.W1.shape[1] - self.W.shape[0]

    def decide_matrix(self) -> np.ndarray:
        return self.W if self.W2 is None else self.W2


@dataclass
class CellState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, d_h: int) -> "CellState":
        return cls(np.zeros(d_h), np.zeros(d_h))


def _act(x: np.ndarray, activation: str) -> np.ndarray:
    return np.tanh(x) if activation == "tanh" else x


# ---------------------------------------------------------------------------
# Memory-DD
# ---------------------------------------------------------------------------


def fuse(p: MemoryDDParams, h_prev, x_t, tracer: FlopTracer | None = None) -> np.ndarray:
    """Input fusion: ``W1 @ [h_prev, x_t] + b`` (hidden state first)."""
    h_prev = as_vec(h_prev)
    x_t = as_vec(x_t)
    if h_prev.shape[0] != p.d_h or x_t.shape[0] != p.d_x:
        raise ShapeError(
            f"fuse: expected h ({p.d_h},) and x ({p.d_x},), got {h_prev.shape} and {x_t.shape}"
        )
    return mat_vec(p.W1, np.concatenate([h_prev, x_t]), tracer) + p.b


def memory_update(p: MemoryDDParams, d_t, c_prev, activation: str = "tanh",
                  tracer: FlopTracer | None = None) -> np.ndarray:
    gate = mat_vec(p.W, d_t, tracer)
    return _act(vec_add(hadamard(gate, c_prev, tracer), d_t), activation)


def decide(p: MemoryDDParams, c_t, d_t, activation: str = "tanh",
           tracer: FlopTracer | None = None) -> np.ndarray:
    gate = mat_vec(p.decide_matrix(), c_t, tracer)
    return _act(vec_add(hadamard(gate, d_t, tracer), d_t), activation)


def memdd_step(spec: ModelSpec, p: MemoryDDParams, x_t, s: CellState,
               tracer: FlopTracer | None = None):
    """One baseline Memory-DD step. Returns ``(h_t, CellState(h_t, c_t))``."""
    if spec.variant != "baseline":
        return variant_step(spec, p, x_t, s, tracer)
    d = fuse(p, s.h, x_t, tracer)
    c = memory_update(p, d, s.c, spec.activation, tracer)
    h = decide(p, c, d, spec.activation, tracer)
    return h, CellState(h, c)


def _neuron_group(gate, other, shortcut, multiplicative, activation, tracer):
    if multiplicative:
        pre = hadamard(gate, other, tracer)
    else:
        # Additive replacement is billed like the product it replaces.
        pre = vec_add(gate, other, tracer, counted=True)
    if shortcut is not None:
        pre = vec_add(pre, shortcut)
    return _act(pre, activation)


def variant_step(spec: ModelSpec, p: MemoryDDParams, x_t, s: CellState,
                 tracer: FlopTracer | None = None):
    """Ablation variant step.

    A: products become sums. B: no ``+ d`` in the memory group.
    C: no ``+ d`` in the decision group. D: neither shortcut.
    E: the decision group uses its own matrix ``W2``.
    """
    if spec.kind != "memdd":
        raise ConfigError(f"ablation variants apply to memdd only, got {spec.kind}")
    fl = spec.flags
    if fl.untied and p.W2 is None:
        raise ConfigError("variant E needs W2")
    W_dec = p.W2 if fl.untied else p.W
    d = fuse(p, s.h, x_t, tracer)
    c = _neuron_group(mat_vec(p.W, d, tracer), s.c, d if fl.shortcut_memory else None,
                      fl.multiplicative, spec.activation, tracer)
    h = _neuron_group(mat_vec(W_dec, c, tracer), d, d if fl.shortcut_decide else None,
                      fl.multiplicative, spec.activation, tracer)
    return h, CellState(h, c)


# ---------------------------------------------------------------------------
# Baselines. Gate rows are stacked; one bias per gate row.
#   LSTM order (i, f, g, o);  GRU order (z, r, n).
# ---------------------------------------------------------------------------


@dataclass
class GateParams:
    Wx: np.ndarray  # (G*d_h, d_x)
    Wh: np.ndarray  # (G*d_h, d_h)
    b: np.ndarray   # (G*d_h,)

    @property
    def d_h(self) -> int:
        return self.Wh.shape[1]


def lstm_step(p: GateParams, x_t, s: CellState, tracer: FlopTracer | None = None):
    n = p.d_h
    if as_vec(s.h).shape[0] != n or as_vec(s.c).shape[0] != n:
        raise ShapeError(f"lstm_step: state must have length {n}")
    a = mat_vec(p.Wx, x_t, tracer) + mat_vec(p.Wh, s.h, tracer) + p.b
    i = sigmoid(a[:n])
    f = sigmoid(a[n:2 * n])
    g = np.tanh(a[2 * n:3 * n])
    o = sigmoid(a[3 * n:])
    c = vec_add(hadamard(f, s.c, tracer), hadamard(i, g, tracer), tracer, counted=True)
    h = hadamard(o, np.tanh(c), tracer)
    return h, CellState(h, c)


def gru_step(p: GateParams, x_t, s: CellState, tracer: FlopTracer | None = None):
    """GRU with reset applied after the recurrent product: ``n = tanh(Wx x + b + r*(U h))``."""
    n = p.d_h
    h_prev = as_vec(s.h)
    if h_prev.shape[0] != n:
        raise ShapeError(f"gru_step: state must have length {n}")
    ax = mat_vec(p.Wx, x_t, tracer) + p.b
    ah = mat_vec(p.Wh, h_prev, tracer)
    z = sigmoid(ax[:n] + ah[:n])
    r = sigmoid(ax[n:2 * n] + ah[n:2 * n])
    cand = np.tanh(ax[2 * n:] + hadamard(r, ah[2 * n:], tracer))
    h = cand + hadamard(z, h_prev - cand, tracer)
    return h, CellState(h, np.zeros(n))


def bilstm_forward(fwd: GateParams, bwd: GateParams, X, tracer: FlopTracer | None = None):
    """Run both directions; return ``concat(h_fwd_T, h_bwd_1)``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("bilstm_forward: need a non-empty (T, d_x) sequence")
    sf = CellState.zeros(fwd.d_h)
    for x in X:
        _, sf = lstm_step(fwd, x, sf, tracer)
    sb = CellState.zeros(bwd.d_h)
    for x in X[::-1]:
        _, sb = lstm_step(bwd, x, sb, tracer)
    return np.concatenate([sf.h, sb.h])


# ---------------------------------------------------------------------------
# Whole models: core + LayerNorm/FC head, stored as a flat ordered dict.
# ---------------------------------------------------------------------------

HEAD_NAMES = ("ln.gain", "ln.bias", "fc.W", "fc.b")


@dataclass
class Model:
    spec: ModelSpec
    params: dict = field(default_factory=dict)

    def core_names(self) -> list[str]:
        return [k for k in self.params if k not in HEAD_NAMES]

    def memdd_params(self) -> MemoryDDParams:
        p = self.params
        return MemoryDDParams(p["W1"], p["b"], p["W"], p.get("W2"))

    def gate_params(self, prefix: str = "") -> GateParams:
        p = self.params
        return GateParams(p[prefix + "Wx"], p[prefix + "Wh"], p[prefix + "b"])

    def copy(self) -> "Model":
        return Model(self.spec, {k: v.copy() for k, v in self.params.items()})


def core_shapes(spec: ModelSpec) -> dict:
    dh, dx = spec.d_h, spec.d_x
    if spec.kind == "memdd":
        shapes = {"W1": (dh, dh + dx), "b": (dh,), "W": (dh, dh)}
        if spec.flags.untied:
            shapes["W2"] = (dh, dh)
        return shapes
    gates = {"lstm": 4, "gru": 3, "bilstm": 4}[spec.kind]
    block = {"Wx": (gates * dh, dx), "Wh": (gates * dh, dh), "b": (gates * dh,)}
    if spec.kind == "bilstm":
        return {f"{d}.{k}": s for d in ("fwd", "bwd") for k, s in block.items()}
    return block


def head_shapes(spec: ModelSpec) -> dict:
    n = spec.feature_dim
    return {"ln.gain": (n,), "ln.bias": (n,), "fc.W": (spec.out_dim, n), "fc.b": (spec.out_dim,)}


def param_shapes(spec: ModelSpec) -> dict:
    return {**core_shapes(spec), **head_shapes(spec)}


def _fan_in(name: str, shape, spec: ModelSpec) -> int:
    if name.endswith("Wx") or name.endswith("Wh"):
        return spec.d_h + spec.d_x
    return shape[1]


def init_model(spec: ModelSpec, seed: int = 0, tie_w2: bool = False) -> Model:
    """Seeded initialization.

    Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) in row-major order of the
    core arrays (W1, b, W, W2 for memdd); biases zero; LayerNorm gain 1.
    The head draws from a separate stream so that tying W2 leaves it unchanged.
    """
    core_rng = SplitMix64(seed)
    head_rng = SplitMix64(seed ^ 0x5DEECE66D)
    params = {}
    for name, shape in core_shapes(spec).items():
        if name == "W2" and tie_w2:
            params[name] = params["W"].copy()
        elif len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            bound = 1.0 / math.sqrt(_fan_in(name, shape, spec))
            params[name] = core_rng.uniform_array(shape, -bound, bound)
    n = spec.feature_dim
    params["ln.gain"] = np.ones(n)
    params["ln.bias"] = np.zeros(n)
    bound = 1.0 / math.sqrt(n)
    params["fc.W"] = head_rng.uniform_array((spec.out_dim, n), -bound, bound)
    params["fc.b"] = np.zeros(spec.out_dim)
    return Model(spec, params)


def encode(model: Model, X, tracer: FlopTracer | None = None) -> np.ndarray:
    """Run the recurrent core over one ``(T, d_x)`` sequence and return the final encoding."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("encode: need a non-empty (T, d_x) sequence")
    spec = model.spec
    if spec.kind == "bilstm":
        return bilstm_forward(model.gate_params("fwd."), model.gate_params("bwd."), X, tracer)
    s = CellState.zeros(spec.d_h)
    if spec.kind == "memdd":
        p = model.memdd_params()
        for x in X:
            _, s = memdd_step(spec, p, x, s, tracer)
    else:
        step = lstm_step if spec.kind == "lstm" else gru_step
        gp = model.gate_params()
        for x in X:
            _, s = step(gp, x, s, tracer)
    return s.h
