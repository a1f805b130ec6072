import numpy as np
import pytest

from geoib.fisher import (
    KfacState,
    empirical_fisher_exact,
    fisher_vector_product,
    flatten_blocks,
    kfac_dense_matrix,
    kfac_init,
    kfac_update,
    kfac_vs_exact_error,
    load_kfac,
    natural_gradient,
    reparam_invariance_check,
    save_kfac,
    split_flat,
    steepest_descent_check,
    steepest_descent_margin,
)
from geoib.nets import LayerSpec, Network
from geoib.rng import Rng


def _net(*specs, seed=None):
    rng = Rng(seed) if seed is not None else None
    return Network([LayerSpec(*s) for s in specs], rng)


def _random_spd(rng, n, shift=0.5):
    b = rng.normal((n, n))
    return b @ b.T + shift * np.eye(n)


def _captured(net, x, seed):
    out = net.forward(x, capture=True)
    net.backward(Rng(seed).normal(out.shape))
    return net


# ------------------------------------------------------------ flat blocks


def test_flatten_split_round_trip():
    shapes = [(4, 3), (3, 2)]
    rng = Rng(0)
    blocks = [rng.normal((g, a)) for a, g in shapes]
    flat = flatten_blocks(blocks)
    back = split_flat(flat, shapes)
    for orig, rec in zip(blocks, back):
        np.testing.assert_array_equal(orig, rec)
    with pytest.raises(ValueError, match="entries"):
        split_flat(flat[:-1], shapes)


# ------------------------------------------------------------ exact Fisher


def test_fisher_vanishes_at_saturated_fit():
    # a confidently correct softmax has p(1-p) ~ 0 everywhere
    net = _net((2, 3, "identity"))
    net.weights[0] = np.zeros((3, 2))
    net.biases[0] = np.array([100.0, 0.0, 0.0])
    f = empirical_fisher_exact(net, np.ones((4, 2)), likelihood="categorical")
    assert float(np.abs(f).max()) < 1e-10


def test_fisher_bernoulli_closed_form():
    # single sigmoid unit: F = p(1-p) a a^T with a the augmented input
    net = _net((3, 1, "identity"), seed=1)
    x = Rng(2).normal((1, 3))
    s = float(net.forward(x)[0, 0])
    p = 1.0 / (1.0 + np.exp(-s))
    a = np.concatenate([x[0], [1.0]])
    expect = p * (1.0 - p) * np.outer(a, a)
    got = empirical_fisher_exact(net, x, likelihood="bernoulli")
    assert float(np.abs(got - expect).max()) < 1e-10


def test_fisher_is_psd():
    for seed in range(5):
        net = _net((3, 4, "tanh"), (4, 3, "identity"), seed=seed)
        x = Rng(50 + seed).normal((6, 3))
        f = empirical_fisher_exact(net, x)
        np.testing.assert_allclose(f, f.T, rtol=0, atol=1e-12)
        assert float(np.linalg.eigvalsh(f)[0]) >= -1e-10


def test_fisher_guards_large_nets():
    net = _net((60, 40, "identity"))
    with pytest.raises(ValueError, match="guard"):
        empirical_fisher_exact(net, np.zeros((1, 60)))
    with pytest.raises(ValueError, match="likelihood"):
        empirical_fisher_exact(_net((2, 2, "identity")), np.zeros((1, 2)),
                               likelihood="poisson")


# ------------------------------------------------------------------ k-fac


def test_kfac_first_update_single_sample():
    # decay irrelevant on the first update: factors are the batch moments
    net = _net((3, 2, "tanh"), seed=3)
    x = Rng(4).normal((1, 3))
    _captured(net, x, seed=5)
    state = kfac_update(kfac_init(net, ema_decay=0.0), net)
    aug = np.concatenate([x[0], [1.0]])
    np.testing.assert_allclose(state.a_factors[0], np.outer(aug, aug),
                               rtol=0, atol=1e-15)
    _, grads_pre = net.captured_stats()
    g = grads_pre[0][0]
    np.testing.assert_allclose(state.g_factors[0], np.outer(g, g),
                               rtol=0, atol=1e-15)
    assert state.steps == 1


def test_kfac_zero_activations_leave_bias_moment():
    net = _net((3, 2, "identity"), seed=6)
    _captured(net, np.zeros((4, 3)), seed=7)
    state = kfac_update(kfac_init(net), net)
    a = state.a_factors[0]
    expect = np.zeros((4, 4))
    expect[-1, -1] = 1.0
    np.testing.assert_array_equal(a, expect)


def test_kfac_identical_batches_are_a_fixed_point():
    net = _net((3, 4, "tanh"), (4, 2, "identity"), seed=8)
    x = Rng(9).normal((8, 3))
    ups = Rng(10).normal((8, 2))
    net.forward(x, capture=True)
    net.backward(ups)
    state = kfac_update(kfac_init(net, ema_decay=0.5), net)
    a_before = [m.copy() for m in state.a_factors]
    net.forward(x, capture=True)
    net.backward(ups)
    kfac_update(state, net)
    for old, new in zip(a_before, state.a_factors):
        np.testing.assert_allclose(new, old, rtol=0, atol=1e-15)
    assert state.steps == 2


def test_kfac_update_rejects_mismatched_net():
    net = _net((3, 2, "identity"), seed=11)
    other = _net((2, 2, "identity"), seed=12)
    _captured(other, np.ones((1, 2)), seed=13)
    state = kfac_init(net)
    with pytest.raises(ValueError, match="shapes"):
        kfac_update(state, other)


def test_kfac_state_validation():
    with pytest.raises(ValueError, match="damping"):
        KfacState(shapes=((2, 2),), damping=-1.0, ema_decay=0.9)
    with pytest.raises(ValueError, match="ema_decay"):
        KfacState(shapes=((2, 2),), damping=0.0, ema_decay=1.0)


def test_fvp_identity_factors_pass_through():
    state = KfacState(shapes=((3, 2),), damping=0.0, ema_decay=0.9,
                      a_factors=[np.eye(3)], g_factors=[np.eye(2)], steps=1)
    v = Rng(14).normal(6)
    np.testing.assert_allclose(fisher_vector_product(state, v), v,
                               rtol=0, atol=1e-15)


def test_fvp_matches_dense_kronecker():
    net = _net((3, 4, "tanh"), (4, 2, "identity"), seed=15)
    _captured(net, Rng(16).normal((10, 3)), seed=17)
    state = kfac_update(kfac_init(net, damping=0.37), net)
    dense = kfac_dense_matrix(state, damped=True)
    rng = Rng(18)
    for _ in range(5):
        v = rng.normal(state.n_params)
        np.testing.assert_allclose(fisher_vector_product(state, v), dense @ v,
                                   rtol=0, atol=1e-12)


def test_fvp_huge_damping_dominates():
    net = _net((3, 2, "tanh"), seed=19)
    _captured(net, Rng(20).normal((6, 3)), seed=21)
    state = kfac_update(kfac_init(net, damping=1e6), net)
    v = Rng(22).normal(state.n_params)
    got = fisher_vector_product(state, v)
    rel = np.linalg.norm(got - 1e12 * v) / np.linalg.norm(1e12 * v)
    assert rel < 1e-4


def test_fvp_requires_factors():
    state = kfac_init(_net((2, 2, "identity")))
    with pytest.raises(RuntimeError, match="kfac_update"):
        fisher_vector_product(state, np.zeros(6))
    with pytest.raises(RuntimeError, match="kfac_update"):
        kfac_dense_matrix(state)


def test_kfac_vs_exact_error_is_finite_diagnostic():
    net = _net((3, 3, "tanh"), (3, 2, "identity"), seed=23)
    x = Rng(24).normal((12, 3))
    _captured(net, x, seed=25)
    state = kfac_update(kfac_init(net), net)
    err = kfac_vs_exact_error(state, empirical_fisher_exact(net, x))
    assert np.isfinite(err) and err >= 0.0


# ------------------------------------------------------- natural gradient


def test_natural_gradient_scaled_identity():
    g = Rng(26).normal(5)
    step = natural_gradient(2.0 * np.eye(5), g, damping=0.0)
    np.testing.assert_allclose(step.direction, g / 2.0, rtol=0, atol=1e-12)
    assert step.converged


def test_natural_gradient_matches_dense_solve():
    rng = Rng(27)
    for _ in range(5):
        f = _random_spd(rng, 8)
        g = rng.normal(8)
        step = natural_gradient(f, g, damping=1e-3, tol=1e-12, max_iter=200)
        expect = np.linalg.solve(f + 1e-3 * np.eye(8), g)
        assert float(np.linalg.norm(step.direction - expect)) < 1e-8


def test_natural_gradient_zero_grad():
    step = natural_gradient(np.eye(3), np.zeros(3))
    np.testing.assert_array_equal(step.direction, np.zeros(3))
    assert step.converged and step.iterations == 0


def test_natural_gradient_damping_shrinks_step():
    rng = Rng(28)
    f = _random_spd(rng, 6)
    g = rng.normal(6)
    norms = [
        float(np.linalg.norm(natural_gradient(f, g, damping=lam,
                                              tol=1e-12, max_iter=200).direction))
        for lam in (0.0, 1e-2, 1.0, 100.0)
    ]
    assert norms == sorted(norms, reverse=True)


def test_natural_gradient_satisfies_fisher_system():
    # the returned direction is the Riemannian gradient: F v = g to CG tol
    rng = Rng(29)
    f = _random_spd(rng, 10)
    g = rng.normal(10)
    tol = 1e-8
    step = natural_gradient(f, g, damping=1e-3, tol=tol, max_iter=300)
    res = np.linalg.norm((f + 1e-3 * np.eye(10)) @ step.direction - g)
    assert step.converged
    assert res <= tol * np.linalg.norm(g) * 1.01


def test_natural_gradient_kfac_route_matches_dense():
    net = _net((3, 4, "tanh"), (4, 2, "identity"), seed=30)
    _captured(net, Rng(31).normal((10, 3)), seed=32)
    state = kfac_update(kfac_init(net, damping=1e-2), net)
    g = Rng(33).normal(state.n_params)
    step = natural_gradient(state, g, tol=1e-12, max_iter=300)
    dense = kfac_dense_matrix(state, damped=True)
    np.testing.assert_allclose(step.direction, np.linalg.solve(dense, g),
                               rtol=0, atol=1e-8)


def test_natural_gradient_rejects_bad_shapes():
    with pytest.raises(ValueError, match="fisher"):
        natural_gradient(np.eye(3), np.zeros(4))


# -------------------------------------------------------- steepest descent


def test_steepest_descent_identity_fisher():
    g = np.array([1.0, 2.0, -1.0])
    assert steepest_descent_check(np.eye(3), g, 200, Rng(34))


def test_steepest_descent_anisotropic_example():
    # F = diag(1, 100), g = (1, 1): natural direction prefers the cheap axis
    f = np.diag([1.0, 100.0])
    g = np.array([1.0, 1.0])
    nat = np.linalg.solve(f, g)
    np.testing.assert_allclose(nat, [1.0, 0.01], rtol=0, atol=1e-15)
    margin = steepest_descent_margin(f, g, 10_000, Rng(35))
    assert margin >= -1e-10


def test_steepest_descent_zero_grad_passes():
    assert steepest_descent_margin(np.eye(4), np.zeros(4), 10, Rng(36)) == 0.0
    assert steepest_descent_check(np.eye(4), np.zeros(4), 10, Rng(37))


def test_steepest_descent_random_fishers():
    rng = Rng(38)
    for _ in range(5):
        f = _random_spd(rng, 6)
        g = rng.normal(6)
        assert steepest_descent_check(f, g, 2000, rng)


# ------------------------------------------------------ reparam invariance


def test_reparam_identity_transform():
    rng = Rng(39)
    f = _random_spd(rng, 5)
    g = rng.normal(5)
    assert reparam_invariance_check(f, g, np.eye(5)) < 1e-12


def test_reparam_uniform_scaling():
    rng = Rng(40)
    f = _random_spd(rng, 5)
    g = rng.normal(5)
    assert reparam_invariance_check(f, g, 2.0 * np.eye(5)) < 1e-10


def test_reparam_random_well_conditioned():
    rng = Rng(41)
    for _ in range(10):
        n = int(rng.integers(2, 21))
        f = _random_spd(rng, n, shift=1.0)
        g = rng.normal(n)
        q1, _ = np.linalg.qr(rng.normal((n, n)))
        q2, _ = np.linalg.qr(rng.normal((n, n)))
        t = q1 @ np.diag(rng.uniform(0.5, 5.0, shape=n)) @ q2
        assert np.linalg.cond(t) <= 100.0
        assert reparam_invariance_check(f, g, t) < 1e-8


def test_reparam_rejects_size_mismatch():
    with pytest.raises(ValueError, match="sizes"):
        reparam_invariance_check(np.eye(3), np.zeros(3), np.eye(2))


# ------------------------------------------------------------- checkpoint


def test_kfac_save_load_round_trip(tmp_path):
    net = _net((3, 4, "tanh"), (4, 2, "identity"), seed=42)
    _captured(net, Rng(43).normal((6, 3)), seed=44)
    state = kfac_update(kfac_init(net, damping=0.01, ema_decay=0.9), net)
    path = tmp_path / "kfac.bin"
    save_kfac(state, path)
    loaded = load_kfac(path)
    assert loaded.shapes == state.shapes
    assert loaded.damping == state.damping
    assert loaded.ema_decay == state.ema_decay
    assert loaded.steps == state.steps
    for a, b in zip(loaded.a_factors, state.a_factors):
        np.testing.assert_array_equal(a, b)
    for a, b in zip(loaded.g_factors, state.g_factors):
        np.testing.assert_array_equal(a, b)


def test_kfac_save_load_factorless(tmp_path):
    state = kfac_init(_net((2, 3, "tanh")), damping=0.5)
    path = tmp_path / "empty.bin"
    save_kfac(state, path)
    loaded = load_kfac(path)
    assert loaded.a_factors is None and loaded.steps == 0
    assert loaded.shapes == state.shapes


def test_load_kfac_rejects_corrupt_files(tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"nonsense header\n")
    with pytest.raises(ValueError, match="not a kfac"):
        load_kfac(bad)
    net = _net((2, 2, "identity"), seed=45)
    _captured(net, np.ones((1, 2)), seed=46)
    state = kfac_update(kfac_init(net), net)
    trunc = tmp_path / "trunc.bin"
    save_kfac(state, trunc)
    blob = trunc.read_bytes()
    trunc.write_bytes(blob[:-8])
    with pytest.raises(ValueError, match="payload"):
        load_kfac(trunc)
