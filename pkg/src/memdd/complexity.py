"""Closed-form and measured parameter / FLOP counts.

Closed forms, per sequence of length ``L``:

=============  ==================================  ==========================================
kind           parameters                          FLOPs
=============  ==================================  ==========================================
lstm           4dh^2 + 4dh dx + 4dh                L(8dh^2 + 8dh dx + 4dh)
gru            3dh^2 + 3dh dx + 3dh                L(6dh^2 + 6dh dx + 2dh)
bilstm         8dh^2 + 8dh dx + 8dh                L(16dh^2 + 16dh dx + 8dh)
tcn            dx dh + k dh^2 layers               2L(dx dh + k dh^2 layers)
transformer    dx dh + 4dh^2 + 2dh dff             2L dx dh + 4L^2 dh + 8L dh^2 + 4L dh dff
memdd          2dh^2 + dh dx + dh                  L(6dh^2 + 2dh dx + 2dh)
=============  ==================================  ==========================================

The measured trace bills a matrix-vector product ``2*rows*cols``, each
Hadamard product and each gated merge (LSTM cell accumulation) one op per
element, and nothing for bias adds, shortcut adds, subtractions or
activations. Under that convention the trace of the recurrent kinds equals
the closed form exactly.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .cells import ConfigError, Model, ModelSpec, encode, init_model
from .numerics import FlopTracer, SplitMix64

ALL_KINDS = ("lstm", "gru", "bilstm", "tcn", "transformer", "memdd")
TRACEABLE = ("memdd", "lstm", "gru", "bilstm")


class UnsupportedKind(ValueError):
    pass


@dataclass(frozen=True)
class ComplexityQuery:
    kind: str
    d_h: int
    d_x: int
    L: int = 1
    k: int | None = None
    layers: int | None = None
    d_ff: int | None = None

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}")
        if self.kind == "tcn" and (self.k is None or self.layers is None):
            raise ConfigError("tcn needs k and layers")
        if self.kind == "transformer" and self.d_ff is None:
            raise ConfigError("transformer needs d_ff")
        for name in ("d_h", "d_x", "L", "k", "layers", "d_ff"):
            v = getattr(self, name)
            if v is not None and (int(v) != v or v < 0):
                raise ConfigError(f"{name} must be a nonnegative integer, got {v!r}")


@dataclass
class ComplexityReport:
    kind: str
    dims: dict
    params: int
    flops: int
    formula: str

    def to_dict(self) -> dict:
        return asdict(self)


_PARAM_FORMULA = {
    "lstm": "4dh^2 + 4dh*dx + 4dh",
    "gru": "3dh^2 + 3dh*dx + 3dh",
    "bilstm": "8dh^2 + 8dh*dx + 8dh",
    "tcn": "dx*dh + k*dh^2*layers",
    "transformer": "dx*dh + 4dh^2 + 2dh*dff",
    "memdd": "2dh^2 + dh*dx + dh",
}
_FLOP_FORMULA = {
    "lstm": "L(8dh^2 + 8dh*dx + 4dh)",
    "gru": "L(6dh^2 + 6dh*dx + 2dh)",
    "bilstm": "L(16dh^2 + 16dh*dx + 8dh)",
    "tcn": "2L(dx*dh + k*dh^2*layers)",
    "transformer": "2L*dx*dh + 4L^2*dh + 8L*dh^2 + 4L*dh*dff",
    "memdd": "L(6dh^2 + 2dh*dx + 2dh)",
}


def closed_params(q: ComplexityQuery) -> int:
    h, x = int(q.d_h), int(q.d_x)
    if q.kind == "lstm":
        return 4 * h * h + 4 * h * x + 4 * h
    if q.kind == "gru":
        return 3 * h * h + 3 * h * x + 3 * h
    if q.kind == "bilstm":
        return 8 * h * h + 8 * h * x + 8 * h
    if q.kind == "tcn":
        return x * h + int(q.k) * h * h * int(q.layers)
    if q.kind == "transformer":
        return x * h + 4 * h * h + 2 * h * int(q.d_ff)
    return 2 * h * h + h * x + h


def closed_flops(q: ComplexityQuery) -> int:
    h, x, L = int(q.d_h), int(q.d_x), int(q.L)
    if q.kind == "lstm":
        return L * (8 * h * h + 8 * h * x + 4 * h)
    if q.kind == "gru":
        return L * (6 * h * h + 6 * h * x + 2 * h)
    if q.kind == "bilstm":
        return L * (16 * h * h + 16 * h * x + 8 * h)
    if q.kind == "tcn":
        return 2 * L * (x * h + int(q.k) * h * h * int(q.layers))
    if q.kind == "transformer":
        return 2 * L * x * h + 4 * L * L * h + 8 * L * h * h + 4 * L * h * int(q.d_ff)
    return L * (6 * h * h + 2 * h * x + 2 * h)


def closed_report(q: ComplexityQuery) -> ComplexityReport:
    dims = {k: v for k, v in asdict(q).items() if k != "kind" and v is not None}
    formula = f"params = {_PARAM_FORMULA[q.kind]}; flops = {_FLOP_FORMULA[q.kind]}"
    return ComplexityReport(q.kind, dims, closed_params(q), closed_flops(q), formula)


def fc_flops(d_in: int, d_out: int) -> int:
    """FLOPs of one fully connected layer: ``2*d_in*d_out - d_out``."""
    if d_in < 1 or d_out < 1:
        raise ValueError(f"fc_flops: dimensions must be >= 1, got ({d_in}, {d_out})")
    return 2 * d_in * d_out - d_out


def count_params_empirical(model: Model, scope: str = "core") -> int:
    """Sum of element counts over the learnable arrays (``core`` excludes the LayerNorm+FC head)."""
    if scope not in ("core", "full"):
        raise ValueError(f"scope must be 'core' or 'full', got {scope!r}")
    names = model.core_names() if scope == "core" else list(model.params)
    return int(sum(model.params[n].size for n in names))


def trace_flops_empirical(model: Model, L: int, seed: int = 0) -> int:
    """Run the recurrent core over a random length-``L`` sequence and total the traced ops."""
    if model.spec.kind not in TRACEABLE:
        raise UnsupportedKind(f"no instantiable cell for kind {model.spec.kind!r}")
    if L < 1:
        raise ValueError("L must be >= 1")
    rng = SplitMix64(seed)
    X = rng.uniform_array((L, model.spec.d_x), -1.0, 1.0)
    tracer = FlopTracer()
    encode(model, X, tracer)
    return tracer.total


def empirical_counts(kind: str, d_h: int, d_x: int, L: int, seed: int = 0) -> tuple[int, int]:
    """Instantiate a model of ``kind`` and return ``(core params, traced FLOPs)``."""
    if kind not in TRACEABLE:
        raise UnsupportedKind(f"no instantiable cell for kind {kind!r}")
    model = init_model(ModelSpec(kind=kind, d_h=d_h, d_x=d_x), seed=seed)
    return count_params_empirical(model, "core"), trace_flops_empirical(model, L, seed)


def model_complexity(model: Model, L: int) -> dict:
    """Complexity block used in run reports."""
    spec = model.spec
    q = ComplexityQuery(spec.kind, spec.d_h, spec.d_x, L)
    core_flops = closed_flops(q)
    if spec.kind == "memdd" and spec.flags.untied:
        formula = "2dh^2 + dh*dx + dh + dh^2 (untied W2)"
    else:
        formula = _PARAM_FORMULA[spec.kind]
    head = fc_flops(spec.feature_dim, spec.out_dim)
    return {
        "params_core": count_params_empirical(model, "core"),
        "params_full": count_params_empirical(model, "full"),
        "params_formula": formula,
        "flops_core_per_sequence": core_flops,
        "flops_head_fc": head,
        "flops_total_per_sequence": core_flops + head,
        "sequence_length": L,
    }


def ratio(num: ComplexityQuery, den: ComplexityQuery, what: str = "params") -> float:
    f = closed_params if what == "params" else closed_flops
    return f(num) / f(den)

