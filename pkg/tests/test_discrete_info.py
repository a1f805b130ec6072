import numpy as np
import pytest

from geoib.discrete_info import (
    i_projection,
    ib_projection_value,
    kl_discrete,
    kl_to_product,
    load_joint_csv,
    marginals,
    mutual_information,
    pythagorean_residual,
    validate_distribution,
    validate_joint,
)
from geoib.rng import Rng


def _random_joint(rng, nx, nz, sparsity=0.0):
    a = rng.uniform(shape=(nx, nz))
    if sparsity > 0.0:
        a[rng.uniform(shape=(nx, nz)) < sparsity] = 0.0
    if a.sum() == 0.0:
        a[0, 0] = 1.0
    return a / a.sum()


def _random_dist(rng, n):
    a = rng.uniform(shape=n) + 1e-3
    return a / a.sum()


# ------------------------------------------------------------- validation


def test_validate_joint_names_offending_cell():
    bad = np.array([[0.5, 0.6], [-0.1, 0.0]])
    with pytest.raises(ValueError, match=r"cell \(1, 0\)"):
        validate_joint(bad)
    with pytest.raises(ValueError, match="sums to"):
        validate_joint(np.array([[0.5, 0.4]]))
    with pytest.raises(ValueError, match="2-D"):
        validate_joint(np.array([0.5, 0.5]))


def test_validate_distribution_names_offending_index():
    with pytest.raises(ValueError, match="index 2"):
        validate_distribution(np.array([0.6, 0.5, -0.1]))


def test_marginals_sum_rows_and_columns():
    px, pz = marginals(np.array([[0.4, 0.1], [0.2, 0.3]]))
    np.testing.assert_allclose(px, [0.5, 0.5], rtol=0, atol=1e-15)
    np.testing.assert_allclose(pz, [0.6, 0.4], rtol=0, atol=1e-15)


# ------------------------------------------------------------------- kl


def test_kl_discrete_zero_iff_equal():
    p = np.array([0.2, 0.3, 0.5])
    assert kl_discrete(p, p) == 0.0
    q = np.array([0.3, 0.3, 0.4])
    assert kl_discrete(p, q) > 0.0


def test_kl_discrete_support_violation():
    with pytest.raises(ValueError, match="q is zero"):
        kl_discrete(np.array([0.5, 0.5]), np.array([1.0, 0.0]))


def test_kl_discrete_ignores_zero_p_cells():
    # q may vanish wherever p does
    val = kl_discrete(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    assert val == 0.0


# ------------------------------------------------------------------- mi


def test_mi_perfect_correlation_is_ln2():
    p = np.array([[0.5, 0.0], [0.0, 0.5]])
    assert abs(mutual_information(p) - np.log(2.0)) < 1e-15


def test_mi_independent_is_zero():
    p = np.full((3, 4), 1.0 / 12.0)
    assert abs(mutual_information(p)) < 1e-15


def test_mi_symmetric_under_transposition():
    rng = Rng(0)
    for _ in range(20):
        p = _random_joint(rng, 4, 6, sparsity=0.3)
        assert abs(mutual_information(p) - mutual_information(p.T)) < 1e-13


def test_mi_bounded_by_log_support():
    rng = Rng(1)
    for _ in range(50):
        p = _random_joint(rng, 3, 7)
        mi = mutual_information(p)
        assert -1e-14 <= mi <= min(np.log(3.0), np.log(7.0)) + 1e-12


# ------------------------------------------------------- product distance


def test_kl_to_product_at_marginals_equals_mi():
    rng = Rng(2)
    for _ in range(20):
        p = _random_joint(rng, 5, 4, sparsity=0.2)
        qx, rz = i_projection(p)
        assert abs(kl_to_product(p, qx, rz) - mutual_information(p)) < 1e-13


def test_kl_to_product_support_violation_names_cell():
    p = np.array([[0.5, 0.5], [0.0, 0.0]])
    qx = np.array([0.0, 1.0])
    rz = np.array([0.5, 0.5])
    with pytest.raises(ValueError, match=r"cell \(0, 0\)"):
        kl_to_product(p, qx, rz)


def test_kl_to_product_shape_mismatch():
    p = np.array([[0.5, 0.5]])
    with pytest.raises(ValueError, match="does not match"):
        kl_to_product(p, np.array([0.5, 0.5]), np.array([0.5, 0.5]))


# ------------------------------------------------------------ projection


def test_i_projection_returns_marginal_pair():
    p = np.array([[0.4, 0.1], [0.2, 0.3]])
    qx, rz = i_projection(p)
    np.testing.assert_allclose(qx, [0.5, 0.5], rtol=0, atol=1e-15)
    np.testing.assert_allclose(rz, [0.6, 0.4], rtol=0, atol=1e-15)


def test_i_projection_beats_perturbed_references():
    """Moving the product reference away from the marginal pair can only
    increase the divergence; checked against renormalized perturbations."""
    rng = Rng(3)
    for _ in range(25):
        p = _random_joint(rng, 4, 5, sparsity=0.2)
        qx, rz = i_projection(p)
        best = kl_to_product(p, qx, rz)
        for _ in range(8):
            dq = qx + 0.05 * rng.uniform(shape=4)
            dr = rz + 0.05 * rng.uniform(shape=5)
            worse = kl_to_product(p, dq / dq.sum(), dr / dr.sum())
            assert worse >= best - 1e-12


def test_pythagorean_residual_small_on_random_tables():
    rng = Rng(4)
    worst = 0.0
    for _ in range(300):
        p = _random_joint(rng, 5, 6, sparsity=0.3)
        qx = _random_dist(rng, 5)
        rz = _random_dist(rng, 6)
        worst = max(worst, abs(pythagorean_residual(p, qx, rz)))
    assert worst < 1e-11


def test_pythagorean_residual_exact_structure():
    # decomposition holds for a hand-checkable table and reference
    p = np.array([[0.4, 0.1], [0.2, 0.3]])
    qx = np.array([0.3, 0.7])
    rz = np.array([0.5, 0.5])
    assert abs(pythagorean_residual(p, qx, rz)) < 1e-12
    lhs = kl_to_product(p, qx, rz)
    px, pz = marginals(p)
    rhs = mutual_information(p) + kl_discrete(px, qx) + kl_discrete(pz, rz)
    assert abs(lhs - rhs) < 1e-12


# ---------------------------------------------------------- ib functional


def test_ib_value_beta_zero_is_negative_prediction_mi():
    rng = Rng(5)
    p_xz = _random_joint(rng, 4, 3)
    p_yz = _random_joint(rng, 2, 3)
    got = ib_projection_value(p_xz, p_yz, 0.0)
    assert abs(got + mutual_information(p_yz)) < 1e-13


def test_ib_value_independent_x_perfect_y():
    # compression term vanishes, prediction term is ln 2, for every beta
    p_xz = np.full((2, 2), 0.25)
    p_yz = np.array([[0.5, 0.0], [0.0, 0.5]])
    for beta in (0.0, 0.5, 1.0, 10.0):
        assert abs(ib_projection_value(p_xz, p_yz, beta) + np.log(2.0)) < 1e-12


def test_ib_value_equals_direct_formula():
    rng = Rng(6)
    for _ in range(10):
        p_xz = _random_joint(rng, 5, 4, sparsity=0.2)
        p_yz = _random_joint(rng, 3, 4, sparsity=0.2)
        beta = 2.0 * float(rng.uniform())
        direct = beta * mutual_information(p_xz) - mutual_information(p_yz)
        assert abs(ib_projection_value(p_xz, p_yz, beta) - direct) < 1e-12


def test_ib_value_rejects_negative_beta():
    p = np.full((2, 2), 0.25)
    with pytest.raises(ValueError, match="nonnegative"):
        ib_projection_value(p, p, -0.1)


# -------------------------------------------------------------------- io


def test_load_joint_csv_round_trip(tmp_path):
    p = np.array([[0.4, 0.1], [0.2, 0.3]])
    path = tmp_path / "joint.csv"
    np.savetxt(path, p, delimiter=",")
    np.testing.assert_allclose(load_joint_csv(path), p, rtol=0, atol=1e-15)


def test_load_joint_csv_rejects_bad_table(tmp_path):
    path = tmp_path / "bad.csv"
    np.savetxt(path, np.array([[0.9, 0.3]]), delimiter=",")
    with pytest.raises(ValueError, match="sums to"):
        load_joint_csv(path)
