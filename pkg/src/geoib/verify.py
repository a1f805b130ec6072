"""Deterministic property suite over the package's mathematical claims.

Each check regenerates its own random instances from a fixed seed, compares
against an independent route (dense solves, explicit Kronecker products,
numerically integrated geodesics, finite differences, exact traces), and
reports a scalar margin with a hard threshold.  Results serialize to a file
that contains no timing or environment information, so two runs with the
same seed produce byte-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import discrete_info as di
from .encoder import (
    DiagonalGaussian,
    Gaussian1D,
    exp_map_1d,
    fr_second_order_gap,
    geodesic_vs_additive_gap,
)
from .fisher import (
    empirical_fisher_exact,
    fisher_vector_product,
    flatten_blocks,
    kfac_init,
    kfac_update,
    natural_gradient,
    reparam_invariance_check,
    steepest_descent_margin,
)
from .jf import (
    LocalChannel,
    bound_chain_check,
    capacity_logdet,
    draw_probes,
    exact_trace,
    jf_hutchinson,
)
from .nets import LayerSpec, Network
from .rng import Rng
from .training import geoib_loss_and_grads


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    metric: str  # human-readable margin, deterministic formatting

    def line(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return f"{self.name},{status},{self.metric}"


def _random_joint(rng: Rng, max_side: int = 8, with_zeros: bool = False) -> np.ndarray:
    nx = int(rng.integers(2, max_side + 1))
    nz = int(rng.integers(2, max_side + 1))
    raw = rng.uniform(0.05, 1.0, (nx, nz))
    if with_zeros:
        mask = rng.uniform(0.0, 1.0, (nx, nz)) < 0.25
        # never zero out everything
        mask.flat[int(rng.integers(0, nx * nz))] = False
        raw = np.where(mask, 0.0, raw)
    return raw / raw.sum()


def _random_simplex(rng: Rng, n: int) -> np.ndarray:
    raw = rng.uniform(0.05, 1.0, n)
    return raw / raw.sum()


def check_pythagorean(seed: int = 0, n_joints: int = 1000,
                      tol: float = 1e-11) -> CheckResult:
    """KL(p || q x r) splits exactly into I(p) + marginal KLs."""
    rng = Rng(seed, stream=1)
    worst = 0.0
    for i in range(n_joints):
        p = _random_joint(rng, with_zeros=(i % 5 == 0))
        q = _random_simplex(rng, p.shape[0])
        r = _random_simplex(rng, p.shape[1])
        worst = max(worst, abs(di.pythagorean_residual(p, q, r)))
    return CheckResult("pythagorean_identity", worst < tol,
                       f"max|residual|={worst:.3e} bound={tol:.0e}")


def check_projection_optimality(seed: int = 0, n_joints: int = 50,
                                n_perturb: int = 200,
                                slack: float = 1e-12) -> CheckResult:
    """No perturbed product reference beats the product of marginals."""
    rng = Rng(seed, stream=2)
    worst = np.inf
    for _ in range(n_joints):
        p = _random_joint(rng)
        qx, rz = di.i_projection(p)
        base = di.kl_to_product(p, qx, rz)
        for _ in range(n_perturb):
            size = 10.0 ** rng.uniform(-3.0, -0.3)
            qp = qx * np.exp(size * rng.normal(qx.shape[0]))
            rp = rz * np.exp(size * rng.normal(rz.shape[0]))
            value = di.kl_to_product(p, qp / qp.sum(), rp / rp.sum())
            worst = min(worst, value - base)
    return CheckResult("projection_optimality", worst >= -slack,
                       f"min(margin)={worst:.3e} slack={slack:.0e}")


def check_fr_gap_decay(seed: int = 0, n_dirs: int = 20,
                       lo: float = 6.0, hi: float = 10.0) -> CheckResult:
    """|KL - quadratic proxy| decays cubically: halving the offset divides
    the gap by ~8."""
    rng = Rng(seed, stream=3)
    k = 3
    lo_seen, hi_seen = np.inf, 0.0
    ok = True
    for _ in range(n_dirs):
        direction = rng.normal(2 * k)
        direction /= np.linalg.norm(direction)
        for delta in (0.2, 0.1, 0.05):
            gaps = []
            for scale in (delta, delta / 2.0):
                q = DiagonalGaussian(scale * direction[:k],
                                     scale * direction[k:])
                gaps.append(fr_second_order_gap(q))
            ratio = gaps[0] / gaps[1]
            lo_seen = min(lo_seen, ratio)
            hi_seen = max(hi_seen, ratio)
            ok = ok and lo <= ratio <= hi
    return CheckResult("fr_gap_cubic_decay", ok,
                       f"ratios=[{lo_seen:.3f},{hi_seen:.3f}] bounds=[{lo},{hi}]")


def check_bound_chain(seed: int = 0, n_channels: int = 500,
                      eq_tol: float = 1e-10, ineq_tol: float = 1e-12) -> CheckResult:
    """Sylvester equality of the two logdet forms; trace bound dominates;
    correlated inputs (C <= I) can only lower the capacity."""
    rng = Rng(seed, stream=4)
    worst_eq, worst_ineq, worst_cap = 0.0, -np.inf, -np.inf
    for i in range(n_channels):
        out_d = int(rng.integers(1, 7))
        in_d = int(rng.integers(1, 7))
        jac = rng.normal((out_d, in_d)) * (10.0 ** rng.uniform(-1.0, 0.5))
        noise = np.exp(rng.uniform(-2.0, 2.0, out_d))
        ch = LocalChannel(jacobian=jac, noise_cov=noise)
        lhs, mid, rhs = bound_chain_check(ch)
        worst_eq = max(worst_eq, abs(lhs - mid))
        worst_ineq = max(worst_ineq, mid - rhs)
        if i % 2 == 0:
            # random symmetric C with spectrum in [0, 1]
            basis = np.linalg.qr(rng.normal((in_d, in_d)))[0]
            spec = rng.uniform(0.0, 1.0, in_d)
            cov = basis @ np.diag(spec) @ basis.T
            cov = 0.5 * (cov + cov.T)
            ch_c = LocalChannel(jacobian=jac, noise_cov=noise, input_cov=cov)
            worst_cap = max(worst_cap, capacity_logdet(ch_c) - lhs)
    ok = worst_eq <= eq_tol and worst_ineq <= ineq_tol and worst_cap <= ineq_tol
    return CheckResult(
        "jf_bound_chain", ok,
        f"max|lhs-mid|={worst_eq:.3e} max(mid-rhs)={worst_ineq:.3e} "
        f"max(cap-lhs)={worst_cap:.3e}",
    )


def _random_small_net(rng: Rng, in_lo: int = 2, in_hi: int = 6) -> Network:
    d_in = int(rng.integers(in_lo, in_hi + 1))
    d_mid = int(rng.integers(2, 7))
    d_out = int(rng.integers(1, 7))
    act = ("tanh", "softplus")[int(rng.integers(0, 2))]
    return Network(
        [LayerSpec(d_in, d_mid, act), LayerSpec(d_mid, d_out, "identity")],
        rng,
    )


def check_hutchinson(seed: int = 0, n_nets: int = 20, n_probes: int = 10_000,
                     n_reps: int = 50, rep_tol: float = 0.01) -> CheckResult:
    """The probe estimator is unbiased for the exact weighted trace."""
    rng = Rng(seed, stream=5)
    ok = True
    worst_sigma = 0.0
    for i in range(n_nets):
        net = _random_small_net(rng)
        x = rng.normal(net.in_dim)
        noise = np.exp(rng.uniform(-1.0, 1.0, net.out_dim))
        exact = exact_trace(LocalChannel(net.explicit_jacobian(x), noise))
        est = jf_hutchinson(net, x, noise, n_probes, Rng(seed, stream=600 + i))
        se = float(np.std(est.per_probe, ddof=1) / np.sqrt(n_probes))
        sigmas = abs(est.value - exact) / se
        worst_sigma = max(worst_sigma, sigmas)
        ok = ok and sigmas <= 3.0
    # mean of repeated estimates on the first net drifts under 1% of exact
    rng = Rng(seed, stream=5)
    net = _random_small_net(rng)
    x = rng.normal(net.in_dim)
    noise = np.exp(rng.uniform(-1.0, 1.0, net.out_dim))
    exact = exact_trace(LocalChannel(net.explicit_jacobian(x), noise))
    reps = [
        jf_hutchinson(net, x, noise, n_probes, Rng(seed, stream=700 + r)).value
        for r in range(n_reps)
    ]
    rel = abs(float(np.mean(reps)) - exact) / exact
    ok = ok and rel <= rep_tol
    return CheckResult(
        "hutchinson_unbiased", ok,
        f"max|z|={worst_sigma:.2f}sigma rep_rel_err={rel:.4%}",
    )


def check_gradients_fd(seed: int = 0, tol: float = 1e-4,
                       step: float = 1e-5) -> CheckResult:
    """Analytic objective gradients match central finite differences."""
    worst = 0.0
    for trial, fr_mode in enumerate(("closed_form_kl", "fr_quadratic")):
        rng = Rng(seed, stream=8 + trial)
        k_dim = 2
        enc = Network(
            [LayerSpec(3, 4, "tanh"), LayerSpec(4, 2 * k_dim, "identity")],
            rng,
        )
        dec = Network(
            [LayerSpec(k_dim, 4, "softplus"), LayerSpec(4, 3, "identity")],
            rng,
        )
        batch = 5
        x = rng.normal((batch, 3))
        y = rng.integers(0, 3, batch)
        eps = rng.normal((batch, k_dim))
        probes = draw_probes(rng, 2, batch, 3)
        beta = 0.5
        # freeze the noise covariance at the base parameters, matching the
        # constant treatment inside the analytic gradient
        out = enc.forward(x)
        lv = np.clip(out[:, k_dim:], -12.0, 12.0)
        nc = np.exp(lv)
        kwargs = dict(beta=beta, fr_mode=fr_mode, sigma_floor=1e-8,
                      k_dim=k_dim, eps=eps, probes=probes, noise_cov=nc)
        _, g_enc, g_dec = geoib_loss_and_grads(enc, dec, x, y, **kwargs)
        analytic = np.concatenate([flatten_blocks(g_enc), flatten_blocks(g_dec)])

        def value(flat_enc, flat_dec):
            e2, d2 = enc.copy(), dec.copy()
            e2.set_params(flat_enc)
            d2.set_params(flat_dec)
            m = geoib_loss_and_grads(e2, d2, x, y, want_grads=False, **kwargs)
            return m.total

        p_enc, p_dec = enc.get_params(), dec.get_params()
        fd = np.zeros_like(analytic)
        for i in range(p_enc.size):
            up, dn = p_enc.copy(), p_enc.copy()
            up[i] += step
            dn[i] -= step
            fd[i] = (value(up, p_dec) - value(dn, p_dec)) / (2 * step)
        for i in range(p_dec.size):
            up, dn = p_dec.copy(), p_dec.copy()
            up[i] += step
            dn[i] -= step
            fd[p_enc.size + i] = (value(p_enc, up) - value(p_enc, dn)) / (2 * step)
        rel = np.abs(analytic - fd) / np.maximum(np.abs(fd), 1e-4)
        worst = max(worst, float(rel.max()))
    return CheckResult("gradient_finite_difference", worst < tol,
                       f"max_rel_err={worst:.3e} bound={tol:.0e}")


def check_cg_vs_dense(seed: int = 0, tol_solve: float = 1e-8,
                      tol_fvp: float = 1e-12) -> CheckResult:
    """CG on the exact damped Fisher reproduces the dense solve, and the
    factored FVP agrees with the explicit Kronecker product."""
    rng = Rng(seed, stream=10)
    net = Network(
        [LayerSpec(3, 4, "tanh"), LayerSpec(4, 3, "identity")], rng
    )
    x = rng.normal((12, 3))
    fisher = empirical_fisher_exact(net, x, likelihood="categorical")
    lam = 1e-3
    g = rng.normal(net.n_params)
    step = natural_gradient(fisher, g, damping=lam, tol=1e-14,
                            max_iter=4 * net.n_params)
    dense = np.linalg.solve(fisher + lam * np.eye(net.n_params), g)
    err_solve = float(np.max(np.abs(step.direction - dense)))

    # factored operator against the materialized Kronecker blocks
    state = kfac_init(net, damping=lam, ema_decay=0.0)
    out = net.forward(x, capture=True)
    net.backward(rng.normal(out.shape))
    kfac_update(state, net)
    v = rng.normal(net.n_params)
    v /= np.linalg.norm(v)
    fvp = fisher_vector_product(state, v)
    explicit = np.zeros_like(fvp)
    offset = 0
    for a_f, g_f in zip(state.a_factors, state.g_factors):
        blk = np.kron(g_f + lam * np.eye(g_f.shape[0]),
                      a_f + lam * np.eye(a_f.shape[0]))
        size = blk.shape[0]
        explicit[offset : offset + size] = blk @ v[offset : offset + size]
        offset += size
    err_fvp = float(np.max(np.abs(fvp - explicit)))
    ok = err_solve < tol_solve and err_fvp < tol_fvp
    return CheckResult("natural_gradient_solves", ok,
                       f"cg_vs_dense={err_solve:.3e} fvp_vs_kron={err_fvp:.3e}")


def check_steepest_descent(seed: int = 0, n_fishers: int = 20,
                           n_dirs: int = 10_000,
                           slack: float = 1e-10) -> CheckResult:
    """No random unit-Fisher-norm direction descends faster than the
    normalized natural gradient."""
    rng = Rng(seed, stream=11)
    worst = np.inf
    for i in range(n_fishers):
        dim = int(rng.integers(3, 9))
        basis = np.linalg.qr(rng.normal((dim, dim)))[0]
        spec = np.exp(rng.uniform(-1.0, 1.0, dim))
        fisher = basis @ np.diag(spec) @ basis.T
        fisher = 0.5 * (fisher + fisher.T)
        g = rng.normal(dim)
        margin = steepest_descent_margin(fisher, g, n_dirs,
                                         Rng(seed, stream=1100 + i))
        worst = min(worst, margin)
    return CheckResult("steepest_descent", worst >= -slack,
                       f"min(margin)={worst:.3e} slack={slack:.0e}")


def _geodesic_ode(p: Gaussian1D, tangent, rtol: float = 1e-11) -> Gaussian1D:
    """Independent endpoint: integrate the geodesic equations of the metric
    diag(1/sigma^2, 2/sigma^2) from t=0 to 1."""

    def rhs(_t, state):
        _mu, sigma, dmu, dsigma = state
        return [dmu, dsigma,
                2.0 * dmu * dsigma / sigma,
                (dsigma**2 - 0.5 * dmu**2) / sigma]

    sol = solve_ivp(rhs, (0.0, 1.0),
                    [p.mu, p.sigma, float(tangent[0]), float(tangent[1])],
                    rtol=rtol, atol=1e-13, dense_output=False)
    if not sol.success:
        raise RuntimeError(f"geodesic integration failed: {sol.message}")
    return Gaussian1D(mu=float(sol.y[0, -1]), sigma=float(sol.y[1, -1]))


def check_geodesic(seed: int = 0, n_points: int = 10, ode_tol: float = 1e-6,
                   lo: float = 3.5, hi: float = 4.5) -> CheckResult:
    """Closed-form exponential map matches the integrated geodesic, and the
    additive-step gap shrinks quadratically in the step size."""
    rng = Rng(seed, stream=12)
    worst_ode = 0.0
    lo_seen, hi_seen = np.inf, 0.0
    ok = True
    for _ in range(n_points):
        p = Gaussian1D(mu=float(rng.uniform(-1.0, 1.0)),
                       sigma=float(np.exp(rng.uniform(-0.7, 0.7))))
        tangent = rng.normal(2)
        endpoint = exp_map_1d(p, tangent)
        oracle = _geodesic_ode(p, tangent)
        worst_ode = max(worst_ode,
                        float(np.hypot(endpoint.mu - oracle.mu,
                                       endpoint.sigma - oracle.sigma)))
        grad = rng.normal(2)
        grad /= np.linalg.norm(grad)
        for eta in (0.1, 0.05, 0.025):
            ratio = (geodesic_vs_additive_gap(p, grad, eta)
                     / geodesic_vs_additive_gap(p, grad, eta / 2.0))
            lo_seen = min(lo_seen, ratio)
            hi_seen = max(hi_seen, ratio)
            ok = ok and lo <= ratio <= hi
    ok = ok and worst_ode < ode_tol
    return CheckResult(
        "geodesic_consistency", ok,
        f"ode_gap={worst_ode:.3e} ratios=[{lo_seen:.3f},{hi_seen:.3f}]",
    )


def check_reparam_invariance(seed: int = 0, n_triples: int = 50,
                             max_cond: float = 100.0,
                             tol: float = 1e-8) -> CheckResult:
    """Natural steps computed in transformed coordinates map back exactly."""
    rng = Rng(seed, stream=13)
    worst = 0.0
    for _ in range(n_triples):
        dim = int(rng.integers(3, 9))
        basis = np.linalg.qr(rng.normal((dim, dim)))[0]
        spec = np.exp(rng.uniform(-0.7, 0.7, dim))
        fisher = basis @ np.diag(spec) @ basis.T
        fisher = 0.5 * (fisher + fisher.T)
        g = rng.normal(dim)
        cond = 10.0 ** rng.uniform(0.0, 2.0)  # condition number <= 100
        u = np.linalg.qr(rng.normal((dim, dim)))[0]
        vt = np.linalg.qr(rng.normal((dim, dim)))[0]
        sing = np.geomspace(1.0, cond, dim)
        transform = u @ np.diag(sing) @ vt
        worst = max(worst, reparam_invariance_check(fisher, g, transform))
    return CheckResult("reparam_invariance", worst < tol,
                       f"max_gap={worst:.3e} bound={tol:.0e}")


ALL_CHECKS = (
    check_pythagorean,
    check_projection_optimality,
    check_fr_gap_decay,
    check_bound_chain,
    check_hutchinson,
    check_gradients_fd,
    check_cg_vs_dense,
    check_steepest_descent,
    check_geodesic,
    check_reparam_invariance,
)


def run_all_checks(seed: int = 0) -> list[CheckResult]:
    return [check(seed=seed) for check in ALL_CHECKS]


def write_results(results, path) -> None:
    """Deterministic results file: name,status,metric per line, no timing."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("check,status,metric\n")
        for r in results:
            fh.write(r.line() + "\n")
