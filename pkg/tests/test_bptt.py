import numpy as np
import pytest

from memdd.bptt import (
    TapeMismatch,
    backward,
    evaluate_loss,
    forward_sequence,
    grad_check,
    loss_and_grad_output,
    loss_and_grads,
    train_epoch,
)
from memdd.cells import ModelSpec, encode, init_model
from memdd.numerics import AdamState, SplitMix64


def small_model(kind="memdd", variant="baseline", d_h=4, d_x=2, task="cls", out_dim=3,
                seed=0, scale=0.3):
    spec = ModelSpec(kind=kind, d_h=d_h, d_x=d_x, variant=variant, out_dim=out_dim, task=task)
    model = init_model(spec, seed)
    rng = np.random.default_rng(seed)
    for arr in model.params.values():
        arr += rng.uniform(-scale, scale, arr.shape)
    return model


def batch_for(model, B=3, T=4, seed=1):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (B, T, model.spec.d_x))
    if model.spec.task == "cls":
        y = rng.integers(0, model.spec.out_dim, B)
    else:
        y = rng.uniform(-1, 1, (B, model.spec.out_dim))
    return X, y


# -- forward -----------------------------------------------------------------

def test_forward_t1_is_one_step_plus_head(rng):
    model = small_model()
    x = rng.uniform(-1, 1, (1, 2))
    out, tape = forward_sequence(model, x)
    h = encode(model, x)
    p = model.params
    z = (h - h.mean()) / np.sqrt(h.var() + 1e-5)
    want = (p["ln.gain"] * z + p["ln.bias"]) @ p["fc.W"].T + p["fc.b"]
    np.testing.assert_allclose(out[0], want, rtol=1e-12)
    assert len(tape) == 1


def test_forward_zero_params_is_fc_bias(rng):
    model = small_model(scale=0.0)
    for arr in model.params.values():
        arr[...] = 0.0
    model.params["fc.b"][:] = [0.1, -0.2, 0.3]
    out, _ = forward_sequence(model, rng.uniform(-1, 1, (5, 2)))
    np.testing.assert_array_equal(out[0], [0.1, -0.2, 0.3])


def test_tape_length(rng):
    _, tape = forward_sequence(small_model(), rng.uniform(-1, 1, (2, 7, 2)))
    assert len(tape) == 7


def test_empty_sequence_rejected():
    with pytest.raises(ValueError):
        forward_sequence(small_model(), np.zeros((1, 0, 2)))


def test_replay_is_bitwise(rng):
    model = small_model()
    X = rng.uniform(-1, 1, (3, 5, 2))
    out, tape = forward_sequence(model, X)
    again, _ = forward_sequence(model, tape.X.transpose(1, 0, 2))
    np.testing.assert_array_equal(out, again)


# -- backward ----------------------------------------------------------------

def test_zero_loss_grad_gives_zero_grads(rng):
    model = small_model()
    out, tape = forward_sequence(model, rng.uniform(-1, 1, (2, 4, 2)))
    grads = backward(tape, model, np.zeros_like(out))
    assert all(not g.any() for g in grads.values())
    assert {k: g.shape for k, g in grads.items()} == {k: v.shape for k, v in model.params.items()}


def test_tape_mismatch():
    a = small_model()
    b = small_model(d_h=5)
    out, tape = forward_sequence(a, np.zeros((1, 3, 2)))
    with pytest.raises(TapeMismatch):
        backward(tape, b, np.zeros_like(out))
    with pytest.raises(TapeMismatch):
        backward(tape, a, np.zeros((2, 3)))


CONFIGS = [
    ("memdd", v) for v in ("baseline", "A", "B", "C", "D", "E")
] + [("lstm", "baseline"), ("gru", "baseline"), ("bilstm", "baseline")]


@pytest.mark.parametrize("task", ["cls", "reg"])
@pytest.mark.parametrize("kind, variant", CONFIGS)
def test_grad_check_small(kind, variant, task):
    model = small_model(kind, variant, d_h=3, d_x=2, task=task)
    X, y = batch_for(model, B=2, T=3)
    res = grad_check(model, X, y)
    assert res.max_rel_error < 1e-6, (res.worst_param, res.worst_index, res.max_rel_error)


def test_grad_check_identity_activation():
    spec = ModelSpec(d_h=3, d_x=2, activation="identity", out_dim=2)
    model = init_model(spec, 4)
    X, y = batch_for(model, B=2, T=3)
    assert grad_check(model, X, y).max_rel_error < 1e-6


def test_zero_gradient_uses_floor():
    # LayerNorm gain on a zero-output head has exactly zero gradient.
    model = small_model()
    model.params["fc.W"][...] = 0.0
    X, y = batch_for(model)
    res = grad_check(model, X, y)
    assert np.isfinite(res.max_rel_error)
    assert res.per_param["ln.gain"] == 0.0


def test_shared_w_gradient_is_sum_of_group_adjoints():
    base = small_model(seed=3)
    X, y = batch_for(base)
    spec_e = ModelSpec(d_h=4, d_x=2, variant="E", out_dim=3)
    tied = init_model(spec_e, 0, tie_w2=True)
    for k, v in base.params.items():
        tied.params[k][...] = v
    tied.params["W2"][...] = base.params["W"]
    _, g_base = loss_and_grads(base, X, y)
    _, g_e = loss_and_grads(tied, X, y)
    np.testing.assert_allclose(g_base["W"], g_e["W"] + g_e["W2"], rtol=1e-12, atol=1e-15)


def test_mutation_negated_group2_adjoint_is_caught():
    """Flip the decision-group contribution to dW; the checker must object loudly."""
    base = small_model(seed=3)
    X, y = batch_for(base)
    spec_e = ModelSpec(d_h=4, d_x=2, variant="E", out_dim=3)
    tied = init_model(spec_e, 0, tie_w2=True)
    for k, v in base.params.items():
        tied.params[k][...] = v
    tied.params["W2"][...] = base.params["W"]

    def corrupted(model, X_, y_):
        loss, _ = loss_and_grads(model, X_, y_)
        for k, v in model.params.items():
            tied.params[k][...] = v
        tied.params["W2"][...] = model.params["W"]
        _, ge = loss_and_grads(tied, X_, y_)
        _, g = loss_and_grads(model, X_, y_)
        g["W"] = ge["W"] - ge["W2"]
        return loss, g

    assert grad_check(base, X, y).max_rel_error < 1e-6
    assert grad_check(base, X, y, grad_fn=corrupted).max_rel_error > 1e-2


def test_linearity_over_samples(rng):
    model = small_model(task="reg", out_dim=2)
    X = rng.uniform(-1, 1, (4, 3, 2)) * 10
    y = rng.uniform(-1, 1, (4, 2))
    _, g_all = loss_and_grads(model, X, y)
    parts = [loss_and_grads(model, X[i:i + 1], y[i:i + 1])[1] for i in range(4)]
    for k in g_all:
        summed = sum(p[k] for p in parts) / 4.0
        np.testing.assert_allclose(g_all[k], summed, rtol=1e-12, atol=1e-14)


def test_loss_kinds():
    spec = ModelSpec(d_h=2, d_x=1, out_dim=2)
    loss, d = loss_and_grad_output(spec, np.array([[0.0, 0.0]]), [1])
    assert loss == pytest.approx(np.log(2.0))
    np.testing.assert_allclose(d, [[0.5, -0.5]])
    reg = ModelSpec(d_h=2, d_x=1, out_dim=2, task="reg")
    loss, d = loss_and_grad_output(reg, np.array([[1.0, 2.0]]), [[1.0, 3.0]])
    assert loss == 0.5
    np.testing.assert_allclose(d, [[0.0, -1.0]])
    with pytest.raises(ValueError):
        loss_and_grad_output(spec, np.zeros((1, 2)), [2])


# -- training ----------------------------------------------------------------

def test_lr_zero_freezes_parameters():
    model = small_model()
    X, y = batch_for(model, B=8)
    before = model.copy()
    adam = AdamState.for_params(model.params, lr=0.0)
    loss = train_epoch(model, adam, X, y, batch_size=8, rng=0)
    for k in model.params:
        np.testing.assert_array_equal(model.params[k], before.params[k])
    assert loss == pytest.approx(evaluate_loss(before, X, y), rel=1e-14)
    assert adam.t == 1


def test_training_is_deterministic():
    losses = []
    for _ in range(2):
        model = small_model()
        X, y = batch_for(model, B=10)
        adam = AdamState.for_params(model.params, lr=0.01)
        rng = SplitMix64(9)
        losses.append([train_epoch(model, adam, X, y, 4, rng) for _ in range(3)])
    assert losses[0] == losses[1]


def test_one_adam_step_per_minibatch():
    model = small_model()
    X, y = batch_for(model, B=10)
    adam = AdamState.for_params(model.params)
    train_epoch(model, adam, X, y, batch_size=4, rng=1)
    assert adam.t == 3


def test_clipping_bounds_update():
    model = small_model()
    X, y = batch_for(model, B=4)
    adam = AdamState.for_params(model.params, lr=0.01)
    assert np.isfinite(train_epoch(model, adam, X, y, 4, 0, clip_norm=1e-3))
