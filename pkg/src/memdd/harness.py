"""Command-line harness: ``train``, ``eval``, ``complexity``, ``gradcheck``, ``ablate``.

Exit codes: 0 success, 1 usage/configuration, 2 data or file format,
3 numeric failure. Failures print one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import kernels
from .bptt import NumericError, grad_check, predict, train_epoch
from .cells import VARIANT_FLAGS, ConfigError, Model, ModelSpec, init_model, param_shapes
from .complexity import (
    ALL_KINDS,
    TRACEABLE,
    ComplexityQuery,
    closed_report,
    count_params_empirical,
    model_complexity,
    trace_flops_empirical,
)
from .data import (
    Normalizer,
    ParseError,
    build_regression_task,
    chronological_split,
    make_windows,
    parse_classification_file,
    parse_regression_csv,
)
from .metrics import EvalReport, classification_report, mse
from .numerics import AdamState, SplitMix64
from .synthetic import delayed_recall, sine_series

CKPT_TAG = "memdd-ckpt v1"
GRADCHECK_PARAM_LIMIT = 10000
GRADCHECK_TOL = 1e-4


class UsageError(Exception):
    pass


class CheckpointFormatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    task: str = "cls"
    model: str = "memdd"
    variant: str = "baseline"
    hidden: int | None = None      # 128 (cls) / 256 (reg)
    batch: int | None = None       # 32 (cls) / 128 (reg)
    lr: float = 1e-3
    epochs: int = 100
    seed: int = 0
    L: int = 3
    P: int | None = None           # defaults to L
    clip: float | None = None
    activation: str = "tanh"
    data: str | None = None
    test: str | None = None
    ckpt: str | None = None
    report: str | None = None
    synthetic: str | None = None   # "delayed-recall" | "sine"
    tie_w2: bool = False
    workers: int = 1

    def resolved(self) -> "TrainConfig":
        if self.task not in ("cls", "reg"):
            raise ConfigError(f"unknown task {self.task!r}")
        cls = self.task == "cls"
        return replace(
            self,
            hidden=self.hidden or (128 if cls else 256),
            batch=self.batch or (32 if cls else 128),
            P=self.P or self.L,
        )


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _spec_line(spec: ModelSpec, extra: dict) -> str:
    items = {**asdict(spec), **extra}
    return "spec " + " ".join(f"{k}={v}" for k, v in items.items())


def _write_array(out: list, name: str, arr: np.ndarray) -> None:
    a2 = arr.reshape(1, -1) if arr.ndim == 1 else arr
    out.append(f"{name} {a2.shape[0]} {a2.shape[1]}")
    for row in a2:
        out.append(" ".join(_fmt(v) for v in row))


def checkpoint_text(model: Model, adam: AdamState | None = None,
                    normalizer: Normalizer | None = None, extra: dict | None = None) -> str:
    out = [CKPT_TAG, _spec_line(model.spec, extra or {})]
    for name, arr in model.params.items():
        _write_array(out, name, arr)
    if normalizer is not None and normalizer.lo is not None:
        _write_array(out, "norm.lo", normalizer.lo)
        _write_array(out, "norm.hi", normalizer.hi)
    if adam is not None:
        out.append(f"adam t={adam.t} lr={_fmt(adam.lr)} beta1={_fmt(adam.beta1)} "
                   f"beta2={_fmt(adam.beta2)} eps={_fmt(adam.eps)}")
        for name in model.params:
            _write_array(out, "adam.m." + name, adam.m[name])
            _write_array(out, "adam.v." + name, adam.v[name])
    return "\n".join(out) + "\n"


def checkpoint_save(path, model: Model, adam=None, normalizer=None, extra=None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(checkpoint_text(model, adam, normalizer, extra))


@dataclass
class Checkpoint:
    model: Model
    adam: AdamState | None = None
    normalizer: Normalizer | None = None
    extra: dict = field(default_factory=dict)


def _kv(tokens, where) -> dict:
    out = {}
    for tok in tokens:
        k, sep, v = tok.partition("=")
        if not sep:
            raise CheckpointFormatError(f"{where}: malformed field {tok!r}")
        out[k] = v
    return out


def checkpoint_load(path) -> Checkpoint:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != CKPT_TAG:
        raise CheckpointFormatError(f"line 1: expected tag {CKPT_TAG!r}")
    if len(lines) < 2 or not lines[1].startswith("spec "):
        raise CheckpointFormatError("line 2: missing spec line")
    fields = _kv(lines[1].split()[1:], "line 2")
    try:
        spec = ModelSpec(
            kind=fields.pop("kind"), d_h=int(fields.pop("d_h")), d_x=int(fields.pop("d_x")),
            variant=fields.pop("variant"), activation=fields.pop("activation"),
            out_dim=int(fields.pop("out_dim")), task=fields.pop("task"),
        )
    except (KeyError, ValueError) as e:
        raise CheckpointFormatError(f"line 2: bad spec ({e})") from None
    extra = {k: int(v) if v.lstrip("-").isdigit() else v for k, v in fields.items()}
    shapes = param_shapes(spec)

    arrays = {}
    adam_hdr = None
    i = 2
    while i < len(lines):
        head = lines[i].split()
        if head and head[0] == "adam":
            adam_hdr = _kv(head[1:], f"line {i + 1}")
            i += 1
            continue
        if len(head) != 3:
            name = head[0] if head else "?"
            raise CheckpointFormatError(f"line {i + 1}: array {name!r}: bad dimension line {lines[i]!r}")
        name = head[0]
        try:
            rows, cols = int(head[1]), int(head[2])
        except ValueError:
            raise CheckpointFormatError(f"line {i + 1}: array {name!r}: bad dimension line") from None
        if rows < 0 or cols < 0:
            raise CheckpointFormatError(f"line {i + 1}: array {name!r}: negative dimensions")
        if i + rows > len(lines) - 1:
            raise CheckpointFormatError(f"array {name!r}: truncated, expected {rows} rows")
        data = []
        for r in range(rows):
            parts = lines[i + 1 + r].split()
            if len(parts) != cols:
                raise CheckpointFormatError(
                    f"line {i + 2 + r}: array {name!r}: expected {cols} values, found {len(parts)}")
            try:
                data.append([float(v) for v in parts])
            except ValueError:
                raise CheckpointFormatError(f"line {i + 2 + r}: array {name!r}: bad number") from None
        arrays[name] = np.array(data, dtype=np.float64).reshape(rows, cols)
        i += 1 + rows

    params = {}
    for name, shape in shapes.items():
        if name not in arrays:
            raise CheckpointFormatError(f"array {name!r}: missing")
        a = arrays.pop(name)
        if a.size != int(np.prod(shape)):
            raise CheckpointFormatError(f"array {name!r}: has {a.shape}, spec needs {shape}")
        params[name] = a.reshape(shape)
    model = Model(spec, params)

    normalizer = None
    if "norm.lo" in arrays:
        normalizer = Normalizer()
        normalizer.lo = arrays.pop("norm.lo").ravel()
        normalizer.hi = arrays.pop("norm.hi").ravel()

    adam = None
    if adam_hdr is not None:
        adam = AdamState(lr=float(adam_hdr["lr"]), beta1=float(adam_hdr["beta1"]),
                         beta2=float(adam_hdr["beta2"]), eps=float(adam_hdr["eps"]),
                         t=int(adam_hdr["t"]))
        for name, shape in shapes.items():
            try:
                adam.m[name] = arrays.pop("adam.m." + name).reshape(shape)
                adam.v[name] = arrays.pop("adam.v." + name).reshape(shape)
            except KeyError:
                raise CheckpointFormatError(f"array 'adam.m/v.{name}': missing") from None
    if arrays:
        raise CheckpointFormatError(f"unexpected arrays: {sorted(arrays)}")
    return Checkpoint(model, adam, normalizer, extra)


# ---------------------------------------------------------------------------
# data plumbing
# ---------------------------------------------------------------------------


@dataclass
class Prepared:
    Xtr: np.ndarray
    ytr: np.ndarray
    Xte: np.ndarray
    yte: np.ndarray
    d_x: int
    out_dim: int
    n_classes: int | None = None
    normalizer: Normalizer | None = None
    seq_len: int = 1


def _cls_data(cfg: TrainConfig) -> Prepared:
    if cfg.synthetic == "delayed-recall":
        Xtr, ytr = delayed_recall(200, seed=cfg.seed + 1)
        Xte, yte = delayed_recall(200, seed=cfg.seed + 2)
        return Prepared(Xtr, ytr, Xte, yte, 2, 4, 4, seq_len=Xtr.shape[1])
    if cfg.synthetic:
        raise ConfigError(f"unknown synthetic task {cfg.synthetic!r} for cls")
    if not cfg.data or not cfg.test:
        raise UsageError("cls task needs --data and --test (or --synthetic delayed-recall)")
    tr = parse_classification_file(cfg.data)
    te = parse_classification_file(cfg.test)
    if (tr.T, tr.D, tr.C) != (te.T, te.D, te.C):
        raise ConfigError(f"train/test headers differ: {(tr.T, tr.D, tr.C)} vs {(te.T, te.D, te.C)}")
    return Prepared(tr.X, tr.labels, te.X, te.labels, tr.D, tr.C, tr.C, seq_len=tr.T)


def _reg_series(cfg: TrainConfig) -> np.ndarray:
    if cfg.synthetic == "sine":
        return sine_series(1000)
    if cfg.synthetic:
        raise ConfigError(f"unknown synthetic task {cfg.synthetic!r} for reg")
    if not cfg.data:
        raise UsageError("reg task needs --data (or --synthetic sine)")
    return parse_regression_csv(cfg.data).values


def _reg_data(cfg: TrainConfig, normalizer: Normalizer | None = None) -> Prepared:
    values = _reg_series(cfg)
    if normalizer is None:
        task = build_regression_task(values, cfg.L, cfg.P)
        tr, te, norm = task.train, task.test, task.normalizer
    else:
        train_seg, test_seg = chronological_split(values)
        norm = normalizer
        tr = make_windows(norm.apply(train_seg), cfg.L, cfg.P)
        te = make_windows(norm.apply(test_seg), cfg.L, cfg.P)
    D = values.shape[1]
    return Prepared(tr.inputs, tr.flat_targets(), te.inputs, te.flat_targets(), D,
                    cfg.P * D, normalizer=norm, seq_len=cfg.L)


def _predict(model: Model, X, workers: int = 1) -> np.ndarray:
    if workers <= 1 or X.shape[0] < 2 * workers:
        return predict(model, X)
    shards = np.array_split(np.arange(X.shape[0]), workers)
    with ThreadPoolExecutor(workers) as pool:
        parts = list(pool.map(lambda idx: predict(model, X[idx]), shards))
    return np.vstack(parts)


def evaluate(model: Model, prep: Prepared, workers: int = 1) -> EvalReport:
    out = _predict(model, prep.Xte, workers)
    if model.spec.task == "cls":
        return classification_report(prep.yte, out, prep.n_classes or model.spec.out_dim)
    rep = EvalReport(n_samples=prep.Xte.shape[0], mse=mse(out, prep.yte))
    if prep.normalizer is not None:
        D = prep.d_x
        raw_p = prep.normalizer.invert(out.reshape(-1, D))
        raw_t = prep.normalizer.invert(prep.yte.reshape(-1, D))
        rep.mse_raw = mse(raw_p, raw_t)
    return rep


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _spec_for(cfg: TrainConfig, prep: Prepared) -> ModelSpec:
    return ModelSpec(kind=cfg.model, d_h=cfg.hidden, d_x=prep.d_x, variant=cfg.variant,
                     activation=cfg.activation, out_dim=prep.out_dim, task=cfg.task)


def cmd_train(cfg: TrainConfig):
    """Train, evaluate on the test split, optionally write checkpoint and report.

    Returns ``(report dict, model)``.
    """
    cfg = cfg.resolved()
    t0 = time.perf_counter()
    prep = _cls_data(cfg) if cfg.task == "cls" else _reg_data(cfg)
    spec = _spec_for(cfg, prep)
    model = init_model(spec, cfg.seed, tie_w2=cfg.tie_w2)
    adam = AdamState.for_params(model.params, lr=cfg.lr)
    shuffle = SplitMix64(cfg.seed + 1)
    losses = []
    for _ in range(cfg.epochs):
        losses.append(train_epoch(model, adam, prep.Xtr, prep.ytr, cfg.batch, shuffle, cfg.clip))
    metrics = evaluate(model, prep, cfg.workers)
    extra = {"L": cfg.L, "P": cfg.P} if cfg.task == "reg" else {}
    if cfg.ckpt:
        checkpoint_save(cfg.ckpt, model, adam, prep.normalizer, extra)
    report = {
        "command": "train",
        "config": asdict(cfg),
        "spec": asdict(spec),
        "epoch_losses": losses,
        "metrics": metrics.to_dict(),
        "complexity": model_complexity(model, prep.seq_len),
        "seed": cfg.seed,
        "backend": kernels.BACKEND,
        "wall_time_s": time.perf_counter() - t0,
    }
    _emit(report, cfg.report)
    return report, model


def cmd_eval(ckpt_path: str, cfg: TrainConfig) -> EvalReport:
    ck = checkpoint_load(ckpt_path)
    spec = ck.model.spec
    cfg = replace(cfg, task=spec.task, hidden=spec.d_h, L=ck.extra.get("L", cfg.L),
                  P=ck.extra.get("P", cfg.P)).resolved()
    if spec.task == "cls":
        prep = _cls_data_eval(cfg)
        if prep.d_x != spec.d_x or prep.n_classes != spec.out_dim:
            raise ConfigError(f"checkpoint expects d_x={spec.d_x}, C={spec.out_dim}; "
                              f"data has d_x={prep.d_x}, C={prep.n_classes}")
    else:
        prep = _reg_data(cfg, ck.normalizer)
        if prep.d_x != spec.d_x or prep.out_dim != spec.out_dim:
            raise ConfigError(f"checkpoint expects d_x={spec.d_x}, out={spec.out_dim}; "
                              f"data gives d_x={prep.d_x}, out={prep.out_dim}")
    return evaluate(ck.model, prep, cfg.workers)


def _cls_data_eval(cfg: TrainConfig) -> Prepared:
    if cfg.synthetic:
        return _cls_data(cfg)
    path = cfg.test or cfg.data
    if not path:
        raise UsageError("eval needs --test")
    te = parse_classification_file(path)
    empty = np.zeros((0, te.T, te.D))
    return Prepared(empty, np.zeros(0, dtype=np.int64), te.X, te.labels, te.D, te.C, te.C,
                    seq_len=te.T)


def cmd_complexity(kinds, d_h: int, d_x: int, L: int, k=None, layers=None, d_ff=None) -> list[dict]:
    """Closed-form rows, empirical cross-checks for instantiable kinds, and ratios vs memdd."""
    rows = []
    for kind in kinds:
        if kind not in ALL_KINDS:
            raise UsageError(f"unknown --model {kind!r}; choose from {', '.join(ALL_KINDS)}")
        if kind == "tcn":
            if k is None:
                raise UsageError("tcn needs --k")
            if layers is None:
                raise UsageError("tcn needs --layers")
        if kind == "transformer" and d_ff is None:
            raise UsageError("transformer needs --dff")
        q = ComplexityQuery(kind, d_h, d_x, L,
                            k=k if kind == "tcn" else None,
                            layers=layers if kind == "tcn" else None,
                            d_ff=d_ff if kind == "transformer" else None)
        row = closed_report(q).to_dict()
        if kind in TRACEABLE and d_h >= 1 and L >= 1:
            model = init_model(ModelSpec(kind=kind, d_h=d_h, d_x=d_x), seed=0)
            row["params_empirical"] = count_params_empirical(model, "core")
            row["flops_empirical"] = trace_flops_empirical(model, L)
            ok = row["params_empirical"] == row["params"] and row["flops_empirical"] == row["flops"]
            row["verdict"] = "match" if ok else "mismatch"
        else:
            row["verdict"] = "unsupported"
        rows.append(row)
    base = next((r for r in rows if r["kind"] == "memdd"), None)
    if base is not None:
        for r in [r for r in rows if r["kind"] != "memdd"]:
            rows.append({
                "ratio": f"{r['kind']}/memdd",
                "params_ratio": r["params"] / base["params"] if base["params"] else None,
                "flops_ratio_memdd_over": base["flops"] / r["flops"] if r["flops"] else None,
            })
    return rows


def _randomize(model: Model, rng: SplitMix64, scale: float = 0.3) -> None:
    for arr in model.params.values():
        arr += rng.uniform_array(arr.shape, -scale, scale)


def cmd_gradcheck(kind="memdd", variant="baseline", d_h=4, d_x=2, T=4, batch=2, task="cls",
                  out_dim=3, seed=0, activation="tanh", fd_step=1e-5, grad_fn=None) -> dict:
    spec = ModelSpec(kind=kind, d_h=d_h, d_x=d_x, variant=variant, activation=activation,
                     out_dim=out_dim, task=task)
    total = sum(int(np.prod(s)) for s in param_shapes(spec).values())
    if total > GRADCHECK_PARAM_LIMIT:
        raise UsageError(f"gradcheck refused: {total} parameters exceeds the "
                         f"{GRADCHECK_PARAM_LIMIT} limit for finite differences; lower --hidden/--dx")
    rng = SplitMix64(seed)
    model = init_model(spec, seed)
    _randomize(model, rng)
    X = rng.uniform_array((batch, T, d_x), -1.0, 1.0)
    if task == "cls":
        y = np.array([rng.randbelow(out_dim) for _ in range(batch)])
    else:
        y = rng.uniform_array((batch, out_dim), -1.0, 1.0)
    res = grad_check(model, X, y, fd_step, grad_fn)
    return {
        "command": "gradcheck",
        "spec": asdict(spec),
        "T": T,
        "batch": batch,
        "params": total,
        "max_rel_error": res.max_rel_error,
        "worst_param": res.worst_param,
        "worst_index": list(res.worst_index),
        "per_param": res.per_param,
        "tolerance": GRADCHECK_TOL,
        "passed": res.passed(GRADCHECK_TOL),
    }


ABLATION_ROWS = ("baseline", "A", "B", "C", "D", "E")


def cmd_ablate(cfg: TrainConfig) -> dict:
    """Train baseline and variants A-E with identical seed and budget (E starts tied)."""
    cfg = cfg.resolved()
    if cfg.task != "cls" or cfg.model != "memdd":
        raise ConfigError("ablate runs on the memdd classification task")
    rows = []
    for variant in ABLATION_ROWS:
        run_cfg = replace(cfg, variant=variant, tie_w2=True, ckpt=None, report=None)
        rep, model = cmd_train(run_cfg)
        fl = VARIANT_FLAGS[variant]
        rows.append({
            "model": "Memory-DD" if variant == "baseline" else f"Variant {variant}",
            "variant": variant,
            "hadamard": fl.multiplicative,
            "residual_c": fl.shortcut_memory,
            "residual_h": fl.shortcut_decide,
            "weight_sharing": not fl.untied,
            "accuracy": rep["metrics"]["accuracy"],
            "f1": rep["metrics"]["macro_f1"],
            "params_core": rep["complexity"]["params_core"],
            "final_loss": rep["epoch_losses"][-1] if rep["epoch_losses"] else None,
        })
    report = {"command": "ablate", "config": asdict(cfg), "rows": rows, "backend": kernels.BACKEND}
    _emit(report, cfg.report)
    return report


def format_ablation(rows) -> str:
    mark = {True: "yes", False: "no"}
    lines = [f"{'model':<12} {'hadamard':>8} {'res C':>6} {'res H':>6} {'shared':>6} {'acc':>7} {'F1':>7}"]
    for r in rows:
        lines.append(f"{r['model']:<12} {mark[r['hadamard']]:>8} {mark[r['residual_c']]:>6} "
                     f"{mark[r['residual_h']]:>6} {mark[r['weight_sharing']]:>6} "
                     f"{r['accuracy']:7.4f} {r['f1']:7.4f}")
    return "\n".join(lines)


def _emit(report: dict, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="memdd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--task", choices=("cls", "reg"), default="cls")
        sp.add_argument("--model", default="memdd")
        sp.add_argument("--variant", default="baseline", choices=ABLATION_ROWS)
        sp.add_argument("--hidden", type=int)
        sp.add_argument("--batch", type=int)
        sp.add_argument("--lr", type=float, default=1e-3)
        sp.add_argument("--epochs", type=int, default=100)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--L", type=int, default=3)
        sp.add_argument("--P", type=int)
        sp.add_argument("--activation", choices=("tanh", "identity"), default="tanh")
        sp.add_argument("--clip", type=float)
        sp.add_argument("--data")
        sp.add_argument("--test")
        sp.add_argument("--ckpt")
        sp.add_argument("--report")
        sp.add_argument("--synthetic", choices=("delayed-recall", "sine"))
        sp.add_argument("--workers", type=int, default=1,
                        help="parallel test-set evaluation shards (metrics are order-invariant)")

    for name in ("train", "eval", "ablate"):
        common(sub.add_parser(name))

    c = sub.add_parser("complexity")
    c.add_argument("--model", default="memdd",
                   help="comma-separated kinds or 'all' (lstm,gru,bilstm,tcn,transformer,memdd)")
    c.add_argument("--hidden", type=int, default=128)
    c.add_argument("--dx", type=int, default=1)
    c.add_argument("--L", type=int, default=1)
    c.add_argument("--k", type=int)
    c.add_argument("--layers", type=int)
    c.add_argument("--dff", type=int)
    c.add_argument("--report")

    g = sub.add_parser("gradcheck")
    g.add_argument("--model", default="memdd", choices=TRACEABLE)
    g.add_argument("--variant", default="baseline", choices=ABLATION_ROWS)
    g.add_argument("--task", choices=("cls", "reg"), default="cls")
    g.add_argument("--hidden", type=int, default=4)
    g.add_argument("--dx", type=int, default=2)
    g.add_argument("--L", type=int, default=4, help="sequence length")
    g.add_argument("--batch", type=int, default=2)
    g.add_argument("--out", type=int, default=3)
    g.add_argument("--activation", choices=("tanh", "identity"), default="tanh")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--report")
    return p


def _config_from_args(a) -> TrainConfig:
    return TrainConfig(
        task=a.task, model=a.model, variant=a.variant, hidden=a.hidden, batch=a.batch,
        lr=a.lr, epochs=a.epochs, seed=a.seed, L=a.L, P=a.P, clip=a.clip,
        activation=a.activation, data=a.data, test=a.test, ckpt=a.ckpt, report=a.report,
        synthetic=a.synthetic, workers=a.workers,
    )


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "train":
        rep, _ = cmd_train(_config_from_args(args))
        print(json.dumps({"metrics": rep["metrics"], "final_loss":
                          rep["epoch_losses"][-1] if rep["epoch_losses"] else None}))
        return 0
    if args.cmd == "eval":
        if not args.ckpt:
            raise UsageError("eval needs --ckpt")
        rep = cmd_eval(args.ckpt, _config_from_args(args)).to_dict()
        _emit({"command": "eval", "metrics": rep}, args.report)
        print(json.dumps(rep))
        return 0
    if args.cmd == "ablate":
        rep = cmd_ablate(_config_from_args(args))
        print(format_ablation(rep["rows"]))
        return 0
    if args.cmd == "complexity":
        kinds = list(ALL_KINDS) if args.model == "all" else [k.strip() for k in args.model.split(",")]
        rows = cmd_complexity(kinds, args.hidden, args.dx, args.L, args.k, args.layers, args.dff)
        _emit({"command": "complexity", "rows": rows}, args.report)
        for r in rows:
            print(json.dumps(r))
        return 0
    rep = cmd_gradcheck(args.model, args.variant, args.hidden, args.dx, args.L, args.batch,
                        args.task, args.out, args.seed, args.activation)
    _emit(rep, args.report)
    print(json.dumps({k: rep[k] for k in ("max_rel_error", "worst_param", "passed")}))
    return 0 if rep["passed"] else 3


def _fail(code: int, reason: str) -> int:
    print(json.dumps({"status": "error", "exit": code, "reason": reason}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        return run(argv)
    except (UsageError, ConfigError) as e:
        return _fail(1, str(e))
    except (ParseError, CheckpointFormatError, FileNotFoundError, UnicodeDecodeError) as e:
        return _fail(2, str(e))
    except (NumericError, FloatingPointError) as e:
        return _fail(3, str(e))


if __name__ == "__main__":
    sys.exit(main())
