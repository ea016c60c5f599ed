"""Batched forward pass, exact backpropagation through time, gradient checking, training.

Sequences come in as ``(B, T, d_x)`` and are stored time-major on the tape.
The head is ``FC(LayerNorm(h_T))``; classification uses softmax cross-entropy
on the FC logits, regression uses mean squared error over all outputs.
Losses (and therefore gradients) are averaged over the batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .cells import Model, ModelSpec
from .numerics import AdamState, SplitMix64, adam_step, clip_global_norm, sigmoid

LN_EPS = 1e-5


class NumericError(ArithmeticError):
    """A loss or gradient went non-finite."""


class TapeMismatch(ValueError):
    """A tape does not belong to the model it is being differentiated against."""


@dataclass
class Tape:
    spec: ModelSpec
    X: np.ndarray                      # (T, B, d_x)
    cache: dict = field(default_factory=dict)
    feat: np.ndarray | None = None     # (B, F) final encoding
    xhat: np.ndarray | None = None     # normalized encoding
    inv_std: np.ndarray | None = None  # (B, 1)
    out: np.ndarray | None = None      # (B, out_dim)

    def __len__(self) -> int:
        return self.X.shape[0]


def _as_batch(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1] == 0:
        raise ValueError(f"expected a non-empty (B, T, d_x) batch, got shape {X.shape}")
    return X


# ---------------------------------------------------------------------------
# recurrent cores, batched
# ---------------------------------------------------------------------------


def _memdd_mats(model: Model):
    p = model.params
    return p["W"], (p["W2"] if model.spec.flags.untied else p["W"])


def _memdd_flags(spec: ModelSpec):
    fl = spec.flags
    return fl.multiplicative, fl.shortcut_memory, fl.shortcut_decide, spec.activation == "tanh"


def _lstm_forward(Wx, Wh, b, X):
    T, B, _ = X.shape
    n = Wh.shape[1]
    names = ("i", "f", "g", "o", "c", "h")
    cache = {k: np.empty((T, B, n)) for k in names}
    h = np.zeros((B, n))
    c = np.zeros((B, n))
    for t in range(T):
        a = X[t] @ Wx.T + h @ Wh.T + b
        i = sigmoid(a[:, :n])
        f = sigmoid(a[:, n:2 * n])
        g = np.tanh(a[:, 2 * n:3 * n])
        o = sigmoid(a[:, 3 * n:])
        c = f * c + i * g
        h = o * np.tanh(c)
        for k, v in zip(names, (i, f, g, o, c, h)):
            cache[k][t] = v
    return cache


def _lstm_backward(Wx, Wh, X, cache, dh):
    T, B, _ = X.shape
    n = Wh.shape[1]
    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    db = np.zeros(Wh.shape[0])
    dc = np.zeros((B, n))
    zeros = np.zeros((B, n))
    for t in range(T - 1, -1, -1):
        i, f, g, o, c = (cache[k][t] for k in "ifgoc")
        c_prev = cache["c"][t - 1] if t else zeros
        h_prev = cache["h"][t - 1] if t else zeros
        tc = np.tanh(c)
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        da = np.hstack([
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            dc * i * (1.0 - g * g),
            do * o * (1.0 - o),
        ])
        dc = dc * f
        dWx += da.T @ X[t]
        dWh += da.T @ h_prev
        db += da.sum(axis=0)
        dh = da @ Wh
    return dWx, dWh, db


def _gru_forward(Wx, Wh, b, X):
    T, B, _ = X.shape
    n = Wh.shape[1]
    names = ("z", "r", "n", "un", "h")
    cache = {k: np.empty((T, B, n)) for k in names}
    h = np.zeros((B, n))
    for t in range(T):
        ax = X[t] @ Wx.T + b
        ah = h @ Wh.T
        z = sigmoid(ax[:, :n] + ah[:, :n])
        r = sigmoid(ax[:, n:2 * n] + ah[:, n:2 * n])
        un = ah[:, 2 * n:]
        cand = np.tanh(ax[:, 2 * n:] + r * un)
        h = cand + z * (h - cand)
        for k, v in zip(names, (z, r, cand, un, h)):
            cache[k][t] = v
    return cache


def _gru_backward(Wx, Wh, X, cache, dh):
    T, B, _ = X.shape
    n = Wh.shape[1]
    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    db = np.zeros(Wh.shape[0])
    zeros = np.zeros((B, n))
    for t in range(T - 1, -1, -1):
        z, r, cand, un = (cache[k][t] for k in ("z", "r", "n", "un"))
        h_prev = cache["h"][t - 1] if t else zeros
        dn = dh * (1.0 - z)
        dz = dh * (h_prev - cand)
        dan = dn * (1.0 - cand * cand)
        daz = dz * z * (1.0 - z)
        dar = dan * un * r * (1.0 - r)
        dax = np.hstack([daz, dar, dan])
        dah = np.hstack([daz, dar, dan * r])
        dWx += dax.T @ X[t]
        db += dax.sum(axis=0)
        dWh += dah.T @ h_prev
        dh = dh * z + dah @ Wh
    return dWx, dWh, db


def _core_forward(model: Model, X: np.ndarray):
    spec = model.spec
    p = model.params
    if spec.kind == "memdd":
        Wa, Wb = _memdd_mats(model)
        D, G1, C, G2, H = kernels.memdd_forward(X, p["W1"], p["b"], Wa, Wb, *_memdd_flags(spec))
        return {"D": D, "G1": G1, "C": C, "G2": G2, "H": H}, H[-1]
    if spec.kind == "lstm":
        cache = _lstm_forward(p["Wx"], p["Wh"], p["b"], X)
        return cache, cache["h"][-1]
    if spec.kind == "gru":
        cache = _gru_forward(p["Wx"], p["Wh"], p["b"], X)
        return cache, cache["h"][-1]
    fwd = _lstm_forward(p["fwd.Wx"], p["fwd.Wh"], p["fwd.b"], X)
    bwd = _lstm_forward(p["bwd.Wx"], p["bwd.Wh"], p["bwd.b"], X[::-1])
    cache = {"fwd": fwd, "bwd": bwd}
    return cache, np.hstack([fwd["h"][-1], bwd["h"][-1]])


def _core_backward(model: Model, tape: Tape, dfeat: np.ndarray) -> dict:
    spec = model.spec
    p = model.params
    X = tape.X
    c = tape.cache
    if spec.kind == "memdd":
        Wa, Wb = _memdd_mats(model)
        dW1, db, dWa, dWb = kernels.memdd_backward(
            X, p["W1"], Wa, Wb, c["D"], c["G1"], c["C"], c["G2"], c["H"], dfeat,
            *_memdd_flags(spec))
        if spec.flags.untied:
            return {"W1": dW1, "b": db, "W": dWa, "W2": dWb}
        # Shared W: both neuron groups contribute.
        return {"W1": dW1, "b": db, "W": dWa + dWb}
    if spec.kind in ("lstm", "gru"):
        back = _lstm_backward if spec.kind == "lstm" else _gru_backward
        dWx, dWh, db = back(p["Wx"], p["Wh"], X, c, dfeat)
        return {"Wx": dWx, "Wh": dWh, "b": db}
    n = spec.d_h
    grads = {}
    for d, Xd, dh in (("fwd", X, dfeat[:, :n]), ("bwd", X[::-1], dfeat[:, n:])):
        dWx, dWh, db = _lstm_backward(p[d + ".Wx"], p[d + ".Wh"], Xd, c[d], dh)
        grads.update({d + ".Wx": dWx, d + ".Wh": dWh, d + ".b": db})
    return grads


# ---------------------------------------------------------------------------
# full model
# ---------------------------------------------------------------------------


def forward_sequence(model: Model, X, record: bool = True):
    """Run core + LayerNorm + FC over a batch. Returns ``(prediction, tape)``.

    ``X`` is ``(B, T, d_x)`` or a single ``(T, d_x)`` sequence.
    """
    spec = model.spec
    X = _as_batch(X)
    if X.shape[2] != spec.d_x:
        raise ValueError(f"input width {X.shape[2]} does not match d_x={spec.d_x}")
    Xt = np.ascontiguousarray(X.transpose(1, 0, 2))
    cache, feat = _core_forward(model, Xt)
    p = model.params
    mu = feat.mean(axis=1, keepdims=True)
    var = ((feat - mu) ** 2).mean(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (feat - mu) * inv_std
    y = p["ln.gain"] * xhat + p["ln.bias"]
    out = y @ p["fc.W"].T + p["fc.b"]
    tape = Tape(spec, Xt, cache if record else {}, feat, xhat, inv_std, out)
    return out, tape


def backward(tape: Tape, model: Model, dout) -> dict:
    """Gradients of a scalar loss w.r.t. every parameter, given ``dL/d(prediction)``."""
    if tape.spec != model.spec or not tape.cache:
        raise TapeMismatch("tape was not recorded by a forward pass of this model")
    dout = np.asarray(dout, dtype=np.float64)
    if dout.shape != tape.out.shape:
        raise TapeMismatch(f"output gradient {dout.shape} vs prediction {tape.out.shape}")
    p = model.params
    y = p["ln.gain"] * tape.xhat + p["ln.bias"]
    grads = {
        "fc.W": dout.T @ y,
        "fc.b": dout.sum(axis=0),
    }
    dy = dout @ p["fc.W"]
    grads["ln.gain"] = (dy * tape.xhat).sum(axis=0)
    grads["ln.bias"] = dy.sum(axis=0)
    dxhat = dy * p["ln.gain"]
    F = dxhat.shape[1]
    dfeat = tape.inv_std / F * (
        F * dxhat
        - dxhat.sum(axis=1, keepdims=True)
        - tape.xhat * (dxhat * tape.xhat).sum(axis=1, keepdims=True)
    )
    grads.update(_core_backward(model, tape, dfeat))
    return {k: grads[k] for k in p}


def loss_and_grad_output(spec: ModelSpec, out: np.ndarray, target):
    """Mean loss over the batch and its gradient w.r.t. ``out``."""
    B = out.shape[0]
    if spec.task == "cls":
        labels = np.asarray(target, dtype=np.int64).reshape(-1)
        if labels.shape[0] != B:
            raise ValueError(f"{labels.shape[0]} labels for {B} predictions")
        if labels.size and (labels.min() < 0 or labels.max() >= out.shape[1]):
            raise ValueError("class label out of range")
        z = out - out.max(axis=1, keepdims=True)
        logsum = np.log(np.exp(z).sum(axis=1))
        logp = z - logsum[:, None]
        loss = -logp[np.arange(B), labels].mean()
        dout = np.exp(logp)
        dout[np.arange(B), labels] -= 1.0
        return float(loss), dout / B
    target = np.asarray(target, dtype=np.float64).reshape(out.shape)
    diff = out - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def loss_and_grads(model: Model, X, target):
    out, tape = forward_sequence(model, X)
    loss, dout = loss_and_grad_output(model.spec, out, target)
    return loss, backward(tape, model, dout)


def evaluate_loss(model: Model, X, target) -> float:
    out, _ = forward_sequence(model, X, record=False)
    return loss_and_grad_output(model.spec, out, target)[0]


def predict(model: Model, X, chunk: int = 256) -> np.ndarray:
    X = _as_batch(X)
    parts = [forward_sequence(model, X[i:i + chunk], record=False)[0]
             for i in range(0, X.shape[0], chunk)]
    return np.vstack(parts)


# ---------------------------------------------------------------------------
# gradient check
# ---------------------------------------------------------------------------


@dataclass
class GradCheckResult:
    max_rel_error: float
    worst_param: str
    worst_index: tuple
    per_param: dict

    def passed(self, tol: float = 1e-4) -> bool:
        return self.max_rel_error < tol


def grad_check(model: Model, X, target, fd_step: float = 1e-5, grad_fn=None) -> GradCheckResult:
    """Compare analytic gradients with central differences on every parameter element.

    Relative error per element is ``|a - n| / max(|a|, |n|, 1e-8)``.
    ``grad_fn(model, X, target) -> (loss, grads)`` replaces the analytic path
    (used to verify that a corrupted gradient is caught).
    """
    if not fd_step > 0:
        raise ValueError("fd_step must be positive")
    grad_fn = grad_fn or loss_and_grads
    _, analytic = grad_fn(model, X, target)
    worst = (0.0, "", ())
    per_param = {}
    for name, theta in model.params.items():
        num = np.empty_like(theta)
        for idx in np.ndindex(theta.shape):
            old = theta[idx]
            theta[idx] = old + fd_step
            lp = evaluate_loss(model, X, target)
            theta[idx] = old - fd_step
            lm = evaluate_loss(model, X, target)
            theta[idx] = old
            if not (math.isfinite(lp) and math.isfinite(lm)):
                raise NumericError(f"non-finite loss while perturbing {name}{list(idx)}")
            num[idx] = (lp - lm) / (2.0 * fd_step)
        a = analytic[name]
        rel = np.abs(a - num) / np.maximum(np.maximum(np.abs(a), np.abs(num)), 1e-8)
        per_param[name] = float(rel.max()) if rel.size else 0.0
        if rel.size and rel.max() > worst[0]:
            worst = (float(rel.max()), name, np.unravel_index(int(rel.argmax()), rel.shape))
    return GradCheckResult(worst[0], worst[1], tuple(int(i) for i in worst[2]), per_param)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def train_epoch(model: Model, adam: AdamState, X, target, batch_size: int,
                rng, clip_norm: float | None = None) -> float:
    """One shuffled pass with an Adam step per minibatch; returns the sample-mean loss.

    ``rng`` is a seed or a :class:`SplitMix64` (advanced in place).
    """
    X = _as_batch(X)
    target = np.asarray(target)
    N = X.shape[0]
    if N == 0:
        raise ValueError("train_epoch: empty dataset")
    if not isinstance(rng, SplitMix64):
        rng = SplitMix64(rng)
    order = np.array(rng.permutation(N))
    total = 0.0
    for start in range(0, N, batch_size):
        idx = order[start:start + batch_size]
        loss, grads = loss_and_grads(model, X[idx], target[idx])
        if not math.isfinite(loss):
            raise NumericError(f"non-finite training loss at batch starting {start}")
        if clip_norm:
            clip_global_norm(grads, clip_norm)
        adam_step(model.params, grads, adam)
        total += loss * len(idx)
    return total / N
