"""Jacobian-Frobenius capacity penalty and its estimators.

A stochastic encoder z = f(x) + eps with eps ~ N(0, diag(noise_cov)) acts
locally as a linear Gaussian channel with matrix J = df/dx.  Its capacity
is controlled by the chain

    0.5 logdet(I + S^-1/2 J C J^T S^-1/2)          (input covariance C <= I)
      <= 0.5 logdet(I + S^-1/2 J J^T S^-1/2)
       = 0.5 logdet(I + J^T S^-1 J)                (Sylvester)
      <= 0.5 tr(S^-1 J J^T) = 0.5 ||S^-1/2 J||_F^2

where S = diag(noise_cov).  Training penalizes the final Frobenius form,
estimated without materializing J by Hutchinson probes through forward-mode
Jacobian-vector products: ||S^-1/2 J v||^2 averaged over v ~ N(0, I) is an
unbiased estimate of the trace.  One or two probes per step suffice in
practice.  The exact forms here exist to verify the estimator and the bound
chain; none of them appear on the training path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import SIGMA_SQ_FLOOR
from .linalg import logdet_psd


@dataclass(frozen=True)
class JfEstimate:
    """A Hutchinson estimate: the probe-averaged value plus its parts."""

    value: float
    n_probes: int
    per_probe: np.ndarray

    def __post_init__(self):
        pp = np.asarray(self.per_probe, dtype=np.float64)
        if pp.shape != (self.n_probes,):
            raise ValueError(
                f"per_probe has shape {pp.shape}, expected ({self.n_probes},)"
            )
        object.__setattr__(self, "per_probe", pp)


@dataclass(frozen=True)
class LocalChannel:
    """A linearized encoder at one input: z = J x + eps.

    Attributes:
        jacobian: (out, in) matrix J.
        noise_cov: (out,) diagonal of the noise covariance, floored at
            SIGMA_SQ_FLOOR on construction.
        input_cov: optional (in, in) symmetric input covariance with
            eigenvalues in [0, 1].
    """

    jacobian: np.ndarray
    noise_cov: np.ndarray
    input_cov: np.ndarray | None = None

    def __post_init__(self):
        j = np.asarray(self.jacobian, dtype=np.float64)
        if j.ndim != 2:
            raise ValueError(f"jacobian must be 2-D, got shape {j.shape}")
        nc = np.asarray(self.noise_cov, dtype=np.float64)
        if nc.shape != (j.shape[0],):
            raise ValueError(
                f"noise_cov must have shape ({j.shape[0]},), got {nc.shape}"
            )
        if not np.all(np.isfinite(nc)):
            raise ValueError("noise_cov must be finite")
        object.__setattr__(self, "jacobian", j)
        object.__setattr__(self, "noise_cov", np.maximum(nc, SIGMA_SQ_FLOOR))
        if self.input_cov is not None:
            c = np.asarray(self.input_cov, dtype=np.float64)
            if c.shape != (j.shape[1], j.shape[1]):
                raise ValueError(
                    f"input_cov must have shape ({j.shape[1]}, {j.shape[1]}), got {c.shape}"
                )
            if np.max(np.abs(c - c.T)) > 1e-10:
                raise ValueError("input_cov must be symmetric")
            eig = np.linalg.eigvalsh(c)
            if eig[0] < -1e-10 or eig[-1] > 1.0 + 1e-10:
                raise ValueError(
                    f"input_cov eigenvalues must lie in [0, 1], got range "
                    f"[{eig[0]:.3e}, {eig[-1]:.3e}]"
                )
            object.__setattr__(self, "input_cov", c)


def exact_trace(ch: LocalChannel) -> float:
    """0.5-free trace form tr(S^-1 J J^T), computed row by row."""
    inv = 1.0 / ch.noise_cov
    return float(np.sum((ch.jacobian**2).sum(axis=1) * inv))


def capacity_logdet(ch: LocalChannel) -> float:
    """0.5 logdet(I + S^-1/2 J C J^T S^-1/2); C defaults to the identity."""
    d = 1.0 / np.sqrt(ch.noise_cov)
    jw = d[:, None] * ch.jacobian
    if ch.input_cov is None:
        core = jw @ jw.T
    else:
        core = jw @ ch.input_cov @ jw.T
    m = np.eye(ch.jacobian.shape[0]) + 0.5 * (core + core.T)
    return 0.5 * logdet_psd(m)


def bound_chain_check(ch: LocalChannel) -> tuple[float, float, float]:
    """The three capacity bounds at C = I.

    Returns:
        (half_logdet_out, half_logdet_in, half_trace): the logdet in output
        space, the same determinant moved to input space by the Sylvester
        identity, and the trace bound.  In exact arithmetic the first two
        are equal and the third dominates.
    """
    d = 1.0 / np.sqrt(ch.noise_cov)
    jw = d[:, None] * ch.jacobian          # S^-1/2 J
    out_form = np.eye(jw.shape[0]) + jw @ jw.T
    in_form = np.eye(jw.shape[1]) + jw.T @ jw
    half_out = 0.5 * logdet_psd(0.5 * (out_form + out_form.T))
    half_in = 0.5 * logdet_psd(0.5 * (in_form + in_form.T))
    half_trace = 0.5 * exact_trace(ch)
    return half_out, half_in, half_trace


def draw_probes(rng, n_probes: int, batch: int, dim: int) -> np.ndarray:
    """(n_probes, batch, dim) standard normal probes, one substream per
    probe index so the loop can be parallelized or reordered freely."""
    if n_probes <= 0:
        raise ValueError(f"n_probes must be positive, got {n_probes}")
    return np.stack(
        [rng.substream(s).normal((batch, dim)) for s in range(n_probes)]
    )


def _check_head(net, head_dim: int | None) -> int:
    if head_dim is None:
        return net.out_dim
    if not 0 < head_dim <= net.out_dim:
        raise ValueError(
            f"head_dim must be in (0, {net.out_dim}], got {head_dim}"
        )
    return head_dim


def jf_batch(net, x, noise_cov, probes, head_dim: int | None = None):
    """Per-sample Hutchinson estimates for a batch with explicit probes.

    Args:
        net: network whose leading `head_dim` outputs form the mean map.
        x: (B, in_dim) inputs.
        noise_cov: (B, head) or (head,) diagonal noise variances.
        probes: (S, B, in_dim) tangent probes, e.g. from `draw_probes`.
        head_dim: number of leading outputs that constitute the map; the
            rest (a log-variance head, say) carry no penalty.

    Returns:
        (values, per_probe): values is (B,) with the probe-averaged estimate
        per sample; per_probe is (S,) with batch means per probe.
    """
    x = np.asarray(x, dtype=np.float64)
    probes = np.asarray(probes, dtype=np.float64)
    head = _check_head(net, head_dim)
    if probes.ndim != 3 or probes.shape[1:] != x.shape:
        raise ValueError(
            f"probes must be (S, {x.shape[0]}, {x.shape[1]}), got {probes.shape}"
        )
    nc = np.maximum(np.asarray(noise_cov, dtype=np.float64), SIGMA_SQ_FLOOR)
    if nc.ndim == 1:
        nc = np.broadcast_to(nc, (x.shape[0], head))
    if nc.shape != (x.shape[0], head):
        raise ValueError(
            f"noise_cov must broadcast to ({x.shape[0]}, {head}), got {nc.shape}"
        )
    n_probes, batch = probes.shape[0], x.shape[0]
    # fold probes into the batch axis: one JVP pass for all S*B pairs
    x_rep = np.broadcast_to(x, probes.shape).reshape(n_probes * batch, -1)
    u, _ = net.jvp_batch(x_rep, probes.reshape(n_probes * batch, -1))
    u_head = u[:, :head].reshape(n_probes, batch, head)
    per_sample = np.sum(u_head**2 / nc, axis=2)
    return per_sample.mean(axis=0), per_sample.mean(axis=1)


def jf_hutchinson(net, x, noise_cov, n_probes: int, rng,
                  head_dim: int | None = None,
                  probes: np.ndarray | None = None) -> JfEstimate:
    """Estimate tr(S^-1 J J^T) at x by probing the Jacobian.

    Args:
        net: the mean map (leading head_dim outputs if head_dim is given).
        x: a single (in_dim,) input or a (B, in_dim) batch; with a batch the
            value is the batch mean.
        noise_cov: diagonal noise variances, per sample or shared.
        n_probes: probe count S; redrawn from `rng` unless `probes` is given.
        rng: probe source (substream per probe index).
        head_dim: see `jf_batch`.
        probes: fixed probes for finite-difference tests; shape
            (S, B, in_dim).

    Returns:
        JfEstimate with the batch-mean value and per-probe batch means.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if probes is None:
        probes = draw_probes(rng, n_probes, xb.shape[0], xb.shape[1])
    else:
        probes = np.asarray(probes, dtype=np.float64)
        if probes.shape[0] != n_probes:
            raise ValueError(
                f"probes holds {probes.shape[0]} probes, n_probes says {n_probes}"
            )
    values, per_probe = jf_batch(net, xb, noise_cov, probes, head_dim=head_dim)
    return JfEstimate(value=float(values.mean()), n_probes=n_probes, per_probe=per_probe)


def jf_isotropic(net, x, sigma_sq: float, n_probes: int, rng,
                 head_dim: int | None = None,
                 probes: np.ndarray | None = None) -> JfEstimate:
    """Isotropic-noise shortcut ||J||_F^2 / sigma^2 with the variance floor."""
    sig = max(float(sigma_sq), SIGMA_SQ_FLOOR)
    head = _check_head(net, head_dim)
    shared = np.full(head, sig)
    return jf_hutchinson(net, x, shared, n_probes, rng,
                         head_dim=head_dim, probes=probes)


def jf_value_and_grad(net, x, noise_cov, probes, head_dim: int | None = None):
    """Batch JF estimate together with its parameter gradient.

    The gradient treats noise_cov as a constant: the only differentiated
    path runs through the Jacobian-vector products.

    Args:
        net, x, noise_cov, probes, head_dim: as in `jf_batch`.

    Returns:
        (values, grads): values is (B,) per-sample estimates; grads is the
        per-layer block gradient of sum_i values_i (sum convention, like
        `Network.backward`).
    """
    x = np.asarray(x, dtype=np.float64)
    probes = np.asarray(probes, dtype=np.float64)
    head = _check_head(net, head_dim)
    nc = np.maximum(np.asarray(noise_cov, dtype=np.float64), SIGMA_SQ_FLOOR)
    if nc.ndim == 1:
        nc = np.broadcast_to(nc, (x.shape[0], head))
    n_probes, batch = probes.shape[0], x.shape[0]
    x_rep = np.broadcast_to(x, probes.shape).reshape(n_probes * batch, -1)
    u, cache = net.jvp_batch(x_rep, probes.reshape(n_probes * batch, -1))
    u_head = u[:, :head].reshape(n_probes, batch, head)
    values = np.sum(u_head**2 / nc, axis=2).mean(axis=0)
    u_bar = np.zeros_like(u)
    u_bar[:, :head] = (2.0 * u_head / nc).reshape(n_probes * batch, head)
    # adjoint sums over the folded S*B axis; dividing by S leaves the
    # probe average in the same sum-over-batch convention as backward
    grads = [g / n_probes for g in net.jvp_adjoint(cache, u_bar)]
    return values, grads
