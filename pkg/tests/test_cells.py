import math

import numpy as np
import pytest

from memdd.cells import (
    CellState,
    ConfigError,
    GateParams,
    MemoryDDParams,
    ModelSpec,
    bilstm_forward,
    core_shapes,
    decide,
    encode,
    fuse,
    gru_step,
    init_model,
    lstm_step,
    memdd_step,
    memory_update,
    variant_step,
)
from memdd.numerics import ShapeError


def scalar_params(W1=((2.0, 3.0),), b=(0.5,), W=((1.0,),), W2=None):
    return MemoryDDParams(np.array(W1), np.array(b), np.array(W),
                          None if W2 is None else np.array(W2))


def random_params(rng, d_h=4, d_x=3, untied=False):
    return MemoryDDParams(
        rng.uniform(-1, 1, (d_h, d_h + d_x)), rng.uniform(-1, 1, d_h),
        rng.uniform(-1, 1, (d_h, d_h)),
        rng.uniform(-1, 1, (d_h, d_h)) if untied else None,
    )


# -- fuse / memory_update / decide --------------------------------------------

def test_fuse_examples():
    p = scalar_params()
    assert fuse(p, [1.0], [2.0])[0] == 8.5
    z = MemoryDDParams(np.zeros((2, 3)), np.zeros(2), np.zeros((2, 2)))
    np.testing.assert_array_equal(fuse(z, np.zeros(2), np.zeros(1)), 0.0)
    z.b[:] = 0.3
    np.testing.assert_array_equal(fuse(z, [5.0, -1.0], [7.0]), [0.3, 0.3])


def test_fuse_puts_hidden_state_first():
    # W1 = [1 (for h), 0 (for x)] picks out h only if h comes first.
    p = scalar_params(W1=((1.0, 0.0),), b=(0.0,))
    assert fuse(p, [4.0], [9.0])[0] == 4.0


def test_fuse_shape_error():
    with pytest.raises(ShapeError):
        fuse(scalar_params(), [1.0, 2.0], [1.0])


def test_memory_update_examples(rng):
    p = scalar_params()
    assert memory_update(p, [0.5], [0.7])[0] == pytest.approx(math.tanh(0.85), abs=1e-15)
    assert memory_update(p, [0.5], [0.7])[0] == pytest.approx(0.6910695, abs=1e-7)
    q = random_params(rng)
    d = rng.uniform(-1, 1, 4)
    np.testing.assert_array_equal(memory_update(q, d, np.zeros(4)), np.tanh(d))


def test_memory_update_identity_activation():
    p = scalar_params()
    # multiplicative term 0.5*0.7 = 0.35 plus shortcut 0.5
    assert memory_update(p, [0.5], [0.7], activation="identity")[0] == pytest.approx(0.85)


def test_decide_examples(rng):
    p = scalar_params()
    assert decide(p, [0.5], [0.8])[0] == pytest.approx(math.tanh(1.2), abs=1e-15)
    assert decide(p, [0.5], [0.8])[0] == pytest.approx(0.8336546, abs=1e-7)
    p15 = scalar_params(W=((3.0,),))
    # gate W c = 1.5 against context 0.8 gives product 1.2
    assert decide(p15, [0.5], [0.8], activation="identity")[0] == pytest.approx(1.2 + 0.8)
    q = random_params(rng)
    q.W[:] = 0.0
    d = rng.uniform(-1, 1, 4)
    np.testing.assert_array_equal(decide(q, rng.uniform(-1, 1, 4), d), np.tanh(d))


def test_memdd_step_scalar_chain():
    spec = ModelSpec(d_h=1, d_x=1)
    h, s = memdd_step(spec, scalar_params(), [2.0], CellState.zeros(1))
    assert s.c[0] == pytest.approx(math.tanh(6.5), abs=1e-15)
    assert s.c[0] == pytest.approx(0.99999548, abs=1e-7)
    assert h[0] == pytest.approx(1.0, abs=1e-10)
    assert h[0] == pytest.approx(math.tanh(math.tanh(6.5) * 6.5 + 6.5), abs=1e-15)


def test_memdd_step_is_composition(rng):
    spec = ModelSpec(d_h=4, d_x=3)
    p = random_params(rng)
    s = CellState(rng.uniform(-1, 1, 4), rng.uniform(-1, 1, 4))
    x = rng.uniform(-1, 1, 3)
    h, s2 = memdd_step(spec, p, x, s)
    d = fuse(p, s.h, x)
    c = memory_update(p, d, s.c)
    np.testing.assert_array_equal(s2.c, c)
    np.testing.assert_array_equal(h, decide(p, c, d))
    np.testing.assert_array_equal(s2.h, h)


def test_zero_network_stays_zero(rng):
    spec = ModelSpec(d_h=3, d_x=2)
    z = MemoryDDParams(np.zeros((3, 5)), np.zeros(3), np.zeros((3, 3)))
    h, s = memdd_step(spec, z, rng.uniform(-5, 5, 2), CellState.zeros(3))
    assert not h.any() and not s.c.any()


def test_states_bounded_under_tanh(rng):
    spec = ModelSpec(d_h=5, d_x=2)
    p = random_params(rng, 5, 2)
    p.W1 *= 20
    s = CellState.zeros(5)
    for _ in range(30):
        h, s = memdd_step(spec, p, rng.uniform(-1, 1, 2) * 0.05, s)
        assert np.all(np.abs(s.h) <= 1.0) and np.all(np.abs(s.c) <= 1.0)


# -- variants ----------------------------------------------------------------

def test_variant_a_scalar():
    spec = ModelSpec(d_h=1, d_x=1, variant="A")
    p = scalar_params(W1=((0.0, 0.0),), b=(0.5,))
    _, s = variant_step(spec, p, [0.0], CellState(np.zeros(1), np.array([0.7])))
    assert s.c[0] == pytest.approx(math.tanh(1.7), abs=1e-15)
    assert s.c[0] == pytest.approx(0.9354090, abs=1e-7)


def test_variant_b_memory_cannot_bootstrap(rng):
    spec = ModelSpec(d_h=4, d_x=3, variant="B")
    p = random_params(rng)
    s = CellState.zeros(4)
    for _ in range(5):
        _, s = variant_step(spec, p, rng.uniform(-1, 1, 3), s)
        assert not s.c.any()


def test_variant_c_and_d_drop_shortcuts():
    p = scalar_params(W1=((0.0, 0.0),), b=(0.5,))
    s = CellState(np.zeros(1), np.array([0.7]))
    _, sc = variant_step(ModelSpec(d_h=1, d_x=1, variant="C"), p, [0.0], s)
    c = math.tanh(0.5 * 0.7 + 0.5)
    assert sc.c[0] == pytest.approx(c, abs=1e-15)
    assert sc.h[0] == pytest.approx(math.tanh(c * 0.5), abs=1e-15)
    _, sd = variant_step(ModelSpec(d_h=1, d_x=1, variant="D"), p, [0.0], s)
    assert sd.c[0] == pytest.approx(math.tanh(0.35), abs=1e-15)


def test_variant_d_hidden_state_is_zero(rng):
    spec = ModelSpec(d_h=4, d_x=3, variant="D")
    p = random_params(rng)
    s = CellState.zeros(4)
    for _ in range(4):
        h, s = variant_step(spec, p, rng.uniform(-1, 1, 3), s)
        assert not h.any()


def test_variant_e_tied_equals_baseline_bitwise(rng):
    base = ModelSpec(d_h=4, d_x=3)
    e = ModelSpec(d_h=4, d_x=3, variant="E")
    p = random_params(rng)
    pe = MemoryDDParams(p.W1, p.b, p.W, p.W.copy())
    sb = se = CellState.zeros(4)
    for _ in range(10):
        x = rng.uniform(-1, 1, 3)
        hb, sb = memdd_step(base, p, x, sb)
        he, se = memdd_step(e, pe, x, se)
        np.testing.assert_array_equal(hb, he)
        np.testing.assert_array_equal(sb.c, se.c)


def test_variant_e_untied_uses_w2(rng):
    e = ModelSpec(d_h=4, d_x=3, variant="E")
    p = random_params(rng, untied=True)
    x = rng.uniform(-1, 1, 3)
    s = CellState(rng.uniform(-1, 1, 4), rng.uniform(-1, 1, 4))
    h, s2 = memdd_step(e, p, x, s)
    d = fuse(p, s.h, x)
    c = np.tanh((p.W @ d) * s.c + d)
    np.testing.assert_allclose(s2.c, c, rtol=1e-14)
    np.testing.assert_allclose(h, np.tanh((p.W2 @ c) * d + d), rtol=1e-14)
    assert not np.allclose(h, np.tanh((p.W @ c) * d + d))


def test_variant_on_non_memdd_rejected():
    with pytest.raises(ConfigError):
        ModelSpec(kind="lstm", d_h=2, d_x=1, variant="A")
    spec = object.__new__(ModelSpec)
    object.__setattr__(spec, "kind", "lstm")
    object.__setattr__(spec, "variant", "B")
    with pytest.raises(ConfigError):
        variant_step(spec, scalar_params(), [1.0], CellState.zeros(1))


@pytest.mark.parametrize("kw", [
    {"kind": "rnn"}, {"variant": "F"}, {"d_h": 0}, {"d_x": 0}, {"activation": "relu"},
])
def test_spec_validation(kw):
    args = {"d_h": 2, "d_x": 1, **kw}
    with pytest.raises(ConfigError):
        ModelSpec(**args)


# -- baselines ---------------------------------------------------------------

def _zero_gates(G, d_h, d_x):
    return GateParams(np.zeros((G * d_h, d_x)), np.zeros((G * d_h, d_h)), np.zeros(G * d_h))


def test_lstm_and_gru_zero_params():
    h, s = lstm_step(_zero_gates(4, 3, 2), [1.0, -1.0], CellState.zeros(3))
    assert not h.any() and not s.c.any()
    h, s = gru_step(_zero_gates(3, 3, 2), [1.0, -1.0], CellState.zeros(3))
    assert not h.any()


def test_lstm_matches_hand_equations(rng):
    d_h, d_x = 3, 2
    p = GateParams(rng.normal(size=(12, d_x)), rng.normal(size=(12, d_h)), rng.normal(size=12))
    s = CellState(rng.normal(size=d_h), rng.normal(size=d_h))
    x = rng.normal(size=d_x)
    sig = lambda v: 1 / (1 + np.exp(-v))
    a = p.Wx @ x + p.Wh @ s.h + p.b
    i, f, g, o = sig(a[:3]), sig(a[3:6]), np.tanh(a[6:9]), sig(a[9:])
    c = f * s.c + i * g
    h, s2 = lstm_step(p, x, s)
    np.testing.assert_allclose(s2.c, c, rtol=1e-14)
    np.testing.assert_allclose(h, o * np.tanh(c), rtol=1e-14)


def test_gru_matches_hand_equations(rng):
    d_h, d_x = 3, 2
    p = GateParams(rng.normal(size=(9, d_x)), rng.normal(size=(9, d_h)), rng.normal(size=9))
    hp = rng.normal(size=d_h)
    x = rng.normal(size=d_x)
    sig = lambda v: 1 / (1 + np.exp(-v))
    z = sig(p.Wx[:3] @ x + p.Wh[:3] @ hp + p.b[:3])
    r = sig(p.Wx[3:6] @ x + p.Wh[3:6] @ hp + p.b[3:6])
    n = np.tanh(p.Wx[6:] @ x + p.b[6:] + r * (p.Wh[6:] @ hp))
    h, _ = gru_step(p, x, CellState(hp, np.zeros(d_h)))
    np.testing.assert_allclose(h, (1 - z) * n + z * hp, rtol=1e-13, atol=1e-15)


def test_bilstm_zero_and_palindrome(rng):
    z = _zero_gates(4, 3, 2)
    np.testing.assert_array_equal(bilstm_forward(z, z, rng.normal(size=(4, 2))), np.zeros(6))
    p = GateParams(rng.normal(size=(12, 2)), rng.normal(size=(12, 3)), rng.normal(size=12))
    half = rng.normal(size=(3, 2))
    X = np.vstack([half, half[::-1]])
    out = bilstm_forward(p, p, X)
    np.testing.assert_array_equal(out[:3], out[3:])


def test_bilstm_single_step_is_two_lstm_steps(rng):
    f = GateParams(rng.normal(size=(8, 1)), rng.normal(size=(8, 2)), rng.normal(size=8))
    b = GateParams(rng.normal(size=(8, 1)), rng.normal(size=(8, 2)), rng.normal(size=8))
    x = rng.normal(size=(1, 1))
    out = bilstm_forward(f, b, x)
    np.testing.assert_array_equal(out[:2], lstm_step(f, x[0], CellState.zeros(2))[0])
    np.testing.assert_array_equal(out[2:], lstm_step(b, x[0], CellState.zeros(2))[0])


def test_bilstm_empty_sequence():
    z = _zero_gates(4, 2, 1)
    with pytest.raises(ValueError):
        bilstm_forward(z, z, np.zeros((0, 1)))


# -- models ------------------------------------------------------------------

def test_memdd_core_has_three_arrays_and_closed_count():
    spec = ModelSpec(d_h=7, d_x=3)
    shapes = core_shapes(spec)
    assert list(shapes) == ["W1", "b", "W"]
    assert sum(int(np.prod(s)) for s in shapes.values()) == 2 * 49 + 21 + 7


def test_init_model_deterministic_and_bounded():
    spec = ModelSpec(d_h=6, d_x=2)
    a, b = init_model(spec, seed=3), init_model(spec, seed=3)
    for k in a.params:
        np.testing.assert_array_equal(a.params[k], b.params[k])
    assert not a.params["b"].any()
    assert np.abs(a.params["W1"]).max() <= 1 / math.sqrt(8)
    assert np.abs(a.params["W"]).max() <= 1 / math.sqrt(6)
    c = init_model(spec, seed=4)
    assert not np.array_equal(a.params["W1"], c.params["W1"])


def test_tied_init_matches_baseline_draws():
    base = init_model(ModelSpec(d_h=4, d_x=2), seed=1)
    e = init_model(ModelSpec(d_h=4, d_x=2, variant="E"), seed=1, tie_w2=True)
    for k in base.params:
        np.testing.assert_array_equal(base.params[k], e.params[k])
    np.testing.assert_array_equal(e.params["W2"], e.params["W"])
    assert e.params["W2"] is not e.params["W"]


@pytest.mark.parametrize("kind", ["memdd", "lstm", "gru", "bilstm"])
def test_markov_replay(kind, rng):
    # Processing in two halves from a saved state equals one uninterrupted pass.
    model = init_model(ModelSpec(kind=kind, d_h=3, d_x=2), seed=5)
    X = rng.uniform(-1, 1, (6, 2))
    if kind == "bilstm":
        np.testing.assert_array_equal(encode(model, X), encode(model, X.copy()))
        return
    spec = model.spec
    if kind == "memdd":
        p = model.memdd_params()
        step = lambda x, s: memdd_step(spec, p, x, s)
    else:
        fn = lstm_step if kind == "lstm" else gru_step
        gp = model.gate_params()
        step = lambda x, s: fn(gp, x, s)
    s = CellState.zeros(3)
    for x in X[:3]:
        _, s = step(x, s)
    saved = CellState(s.h.copy(), s.c.copy())
    for x in X[3:]:
        _, s = step(x, s)
    r = saved
    for x in X[3:]:
        _, r = step(x, r)
    np.testing.assert_array_equal(s.h, r.h)
    np.testing.assert_array_equal(s.h, encode(model, X))
