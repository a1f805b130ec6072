"""Fisher information machinery: exact dense Fisher, Kronecker factors,
and damped natural-gradient solves.

The natural gradient is the Riemannian gradient of the loss under the
Fisher metric: preconditioning by F^-1 yields the steepest-descent
direction per unit Fisher-Rao norm, and the resulting step is invariant
under smooth reparameterization to first order.  Both properties have
direct numerical checks here (`steepest_descent_check`,
`reparam_invariance_check`) because they are what the optimizer is for.

For layered networks the Fisher block of a layer is approximated by the
Kronecker product A x G of the layer-input second moment A (bias handled by
augmenting a constant 1) and the pre-activation gradient second moment G.
Solves go through conjugate gradient with the factored, damped product

    FVP(V) = (G + lam I) V (A + lam I)

as the operator, so the damped system is (A + lam I) x (G + lam I) rather
than A x G + lam I; the exact dense Fisher is kept only as a test oracle
and is guarded to tiny networks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import conjugate_gradient
from .nets import Network

# empirical_fisher_exact refuses nets larger than this.
DENSE_FISHER_GUARD = 2000


# --------------------------------------------------------------------- blocks


def flatten_blocks(blocks) -> np.ndarray:
    """Concatenate per-layer (out, in+1) blocks row-major, matching
    `Network.get_params` layout."""
    return np.concatenate([np.asarray(b, dtype=np.float64).ravel() for b in blocks])


def split_flat(flat, shapes) -> list[np.ndarray]:
    """Inverse of `flatten_blocks` for the given (a_dim, g_dim) shape list."""
    flat = np.asarray(flat, dtype=np.float64).ravel()
    total = sum(a * g for a, g in shapes)
    if flat.shape[0] != total:
        raise ValueError(f"flat vector has {flat.shape[0]} entries, expected {total}")
    blocks = []
    offset = 0
    for a_dim, g_dim in shapes:
        size = a_dim * g_dim
        blocks.append(flat[offset : offset + size].reshape(g_dim, a_dim))
        offset += size
    return blocks


# ---------------------------------------------------------------- K-FAC state


@dataclass
class KfacState:
    """Kronecker factors of a network's Fisher, maintained as EMAs.

    Factors are unset until the first `kfac_update`; the first update adopts
    the batch statistics outright, later ones blend with decay `ema_decay`
    (a decay of 0 keeps per-batch factors).
    """

    shapes: tuple
    damping: float
    ema_decay: float
    a_factors: list | None = None
    g_factors: list | None = None
    steps: int = 0

    def __post_init__(self):
        if self.damping < 0.0:
            raise ValueError(f"damping must be nonnegative, got {self.damping}")
        if not 0.0 <= self.ema_decay < 1.0:
            raise ValueError(f"ema_decay must lie in [0, 1), got {self.ema_decay}")

    @property
    def n_params(self) -> int:
        return sum(a * g for a, g in self.shapes)


def kfac_init(net: Network, damping: float = 1e-3, ema_decay: float = 0.95) -> KfacState:
    shapes = tuple((sp.in_dim + 1, sp.out_dim) for sp in net.specs)
    return KfacState(shapes=shapes, damping=damping, ema_decay=ema_decay)


def kfac_update(state: KfacState, net: Network) -> KfacState:
    """Absorb the captured forward/backward statistics of `net`.

    Per layer, with B the batch size, a the layer inputs augmented by the
    bias constant, and g the captured pre-activation gradients:

        A <- rho A + (1 - rho) (1/B) sum_i a_i a_i^T
        G <- rho G + (1 - rho) (1/B) sum_i g_i g_i^T

    Mutates and returns `state`.
    """
    acts, grads_pre = net.captured_stats()
    expect = tuple((sp.in_dim + 1, sp.out_dim) for sp in net.specs)
    if expect != state.shapes:
        raise ValueError("network layer shapes do not match this KfacState")
    a_new, g_new = [], []
    for a, g in zip(acts, grads_pre):
        batch = a.shape[0]
        aug = np.concatenate([a, np.ones((batch, 1))], axis=1)
        a_new.append(aug.T @ aug / batch)
        g_new.append(g.T @ g / batch)
    if state.a_factors is None:
        state.a_factors = a_new
        state.g_factors = g_new
    else:
        rho = state.ema_decay
        state.a_factors = [rho * old + (1.0 - rho) * new
                           for old, new in zip(state.a_factors, a_new)]
        state.g_factors = [rho * old + (1.0 - rho) * new
                           for old, new in zip(state.g_factors, g_new)]
    state.steps += 1
    return state


def fisher_vector_product(state: KfacState, v) -> np.ndarray:
    """Damped Kronecker-factored Fisher applied to a flat vector.

    Per layer block V (out, in+1) this is (G + lam I) V (A + lam I), i.e.
    the operator (A + lam I) x (G + lam I) in Kronecker form.
    """
    if state.a_factors is None:
        raise RuntimeError("KfacState has no factors yet; run kfac_update first")
    lam = state.damping
    blocks = split_flat(v, state.shapes)
    out = []
    for blk, a_f, g_f in zip(blocks, state.a_factors, state.g_factors):
        a_d = a_f + lam * np.eye(a_f.shape[0])
        g_d = g_f + lam * np.eye(g_f.shape[0])
        out.append(g_d @ blk @ a_d)
    return flatten_blocks(out)


def kfac_dense_matrix(state: KfacState, damped: bool = False) -> np.ndarray:
    """Materialize the block-diagonal Kronecker approximation (test sizes).

    With row-major block flattening the layer block is kron(G, A).
    """
    if state.a_factors is None:
        raise RuntimeError("KfacState has no factors yet; run kfac_update first")
    n = state.n_params
    if n > DENSE_FISHER_GUARD:
        raise ValueError(
            f"dense Fisher of {n} parameters exceeds the {DENSE_FISHER_GUARD} guard"
        )
    lam = state.damping if damped else 0.0
    out = np.zeros((n, n))
    offset = 0
    for a_f, g_f in zip(state.a_factors, state.g_factors):
        a_d = a_f + lam * np.eye(a_f.shape[0])
        g_d = g_f + lam * np.eye(g_f.shape[0])
        blk = np.kron(g_d, a_d)
        size = blk.shape[0]
        out[offset : offset + size, offset : offset + size] = blk
        offset += size
    return out


# ------------------------------------------------------------- exact Fisher


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


def empirical_fisher_exact(net: Network, x, likelihood: str = "categorical") -> np.ndarray:
    """Dense Fisher of the network's predictive distribution, exact in the
    model expectation.

    For each input the expectation over model outputs is carried out in
    closed form rather than sampled: for a categorical (softmax) output
    F_i = sum_y p_y grad log p(y) grad log p(y)^T, and for Bernoulli
    (sigmoid) units F_i = sum_u p_u (1 - p_u) grad s_u grad s_u^T with s_u
    the logit.  The result is averaged over the batch.

    Args:
        net: network with <= 2000 parameters (guarded).
        x: (B, in_dim) inputs.
        likelihood: "categorical" or "bernoulli".

    Returns:
        (P, P) symmetric positive semidefinite matrix.
    """
    if net.n_params > DENSE_FISHER_GUARD:
        raise ValueError(
            f"dense Fisher of {net.n_params} parameters exceeds the "
            f"{DENSE_FISHER_GUARD} guard"
        )
    if likelihood not in ("categorical", "bernoulli"):
        raise ValueError(f"unknown likelihood {likelihood!r}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"x must be a batch, got shape {x.shape}")
    n = net.n_params
    fisher = np.zeros((n, n))
    for i in range(x.shape[0]):
        xi = x[i : i + 1]
        out = net.forward(xi, capture=True)[0]
        if likelihood == "categorical":
            p = _softmax(out)
            for y in range(out.shape[0]):
                upstream = -p.copy()
                upstream[y] += 1.0
                g = flatten_blocks(net.backward(upstream[None, :]))
                fisher += p[y] * np.outer(g, g)
        else:
            p = _sigmoid_stable(out)
            for u in range(out.shape[0]):
                upstream = np.zeros_like(out)
                upstream[u] = 1.0
                g = flatten_blocks(net.backward(upstream[None, :]))
                fisher += p[u] * (1.0 - p[u]) * np.outer(g, g)
    return fisher / x.shape[0]


def _sigmoid_stable(s: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * s))


# ------------------------------------------------------- natural gradient


@dataclass(frozen=True)
class NaturalGradStep:
    """A preconditioned direction with its solve diagnostics."""

    direction: np.ndarray
    residual: float
    iterations: int
    converged: bool


def natural_gradient(fisher, grad, damping: float = 1e-3,
                     tol: float = 1e-6, max_iter: int = 50) -> NaturalGradStep:
    """Solve the damped Fisher system for the natural direction.

    Args:
        fisher: either a KfacState (its internal per-factor damping applies
            and `damping` is ignored) or a dense symmetric PSD matrix, in
            which case the system is (F + damping I) v = grad.
        grad: flat gradient vector.
        tol: relative residual target for conjugate gradient.
        max_iter: conjugate gradient iteration cap; on hitting it the best
            iterate is returned with converged=False.

    Returns:
        NaturalGradStep with the direction and solve report.
    """
    g = np.asarray(grad, dtype=np.float64).ravel()
    if isinstance(fisher, KfacState):
        res = conjugate_gradient(
            lambda v: fisher_vector_product(fisher, v), g,
            lam=0.0, tol=tol, max_iter=max_iter,
        )
    else:
        f = np.asarray(fisher, dtype=np.float64)
        if f.ndim != 2 or f.shape[0] != f.shape[1] or f.shape[0] != g.shape[0]:
            raise ValueError(
                f"fisher has shape {f.shape}, expected ({g.shape[0]}, {g.shape[0]})"
            )
        res = conjugate_gradient(lambda v: f @ v, g, lam=damping,
                                 tol=tol, max_iter=max_iter)
    return NaturalGradStep(direction=res.x, residual=res.residual,
                           iterations=res.iterations, converged=res.converged)


def steepest_descent_margin(fisher_matrix, grad, n_dirs: int, rng) -> float:
    """Worst slack of the steepest-descent property over random directions.

    The normalized natural direction v* = -F^-1 g / ||F^-1 g||_F minimizes
    the directional derivative g . v over the unit Fisher-Rao sphere.  For
    each random unit-FR direction v the margin g.v - g.v* must be >= 0 up
    to round-off; the minimum margin over all trials is returned (so a
    nonnegative return, up to the caller's slack, certifies the property).
    """
    f = np.asarray(fisher_matrix, dtype=np.float64)
    g = np.asarray(grad, dtype=np.float64).ravel()
    if not np.any(g):
        return 0.0
    nat = np.linalg.solve(f, g)
    nat_norm = float(np.sqrt(nat @ f @ nat))
    best = float(g @ (-nat / nat_norm))
    w = rng.normal((n_dirs, g.shape[0]))
    norms = np.sqrt(np.einsum("nd,de,ne->n", w, f, w))
    slopes = (w @ g) / norms
    return float(np.min(slopes) - best)


def steepest_descent_check(fisher_matrix, grad, n_dirs: int, rng,
                           slack: float = 1e-10) -> bool:
    """True iff no trial direction descends faster than the natural one,
    within slack.  A zero gradient passes trivially (v* = 0 convention)."""
    return steepest_descent_margin(fisher_matrix, grad, n_dirs, rng) >= -slack


def reparam_invariance_check(fisher_matrix, grad, transform) -> float:
    """Gap between the natural step and the one computed in linearly
    transformed coordinates and mapped back.

    Under parameters psi = T phi the gradient becomes T^-T g and the Fisher
    T^-T F T^-1; the natural step transforms as v' = T v, so
    T^-1 F'^-1 g' - F^-1 g vanishes in exact arithmetic.

    Returns:
        Euclidean norm of that difference.
    """
    f = np.asarray(fisher_matrix, dtype=np.float64)
    g = np.asarray(grad, dtype=np.float64).ravel()
    t = np.asarray(transform, dtype=np.float64)
    n = g.shape[0]
    if f.shape != (n, n) or t.shape != (n, n):
        raise ValueError("fisher, grad, and transform sizes must agree")
    v = np.linalg.solve(f, g)
    t_inv = np.linalg.inv(t)
    f_prime = t_inv.T @ f @ t_inv
    g_prime = t_inv.T @ g
    v_prime = np.linalg.solve(f_prime, g_prime)
    return float(np.linalg.norm(t_inv @ v_prime - v))


def kfac_vs_exact_error(state: KfacState, exact_fisher) -> float:
    """Relative Frobenius error of the undamped Kronecker approximation
    against a dense Fisher.  Diagnostic only; no threshold is attached."""
    f = np.asarray(exact_fisher, dtype=np.float64)
    approx = kfac_dense_matrix(state, damped=False)
    denom = float(np.linalg.norm(f))
    if denom == 0.0:
        return float(np.linalg.norm(approx))
    return float(np.linalg.norm(approx - f) / denom)


# ----------------------------------------------------------------- checkpoint


def save_kfac(state: KfacState, path) -> None:
    """Text header (damping, decay, steps, block shapes) + little-endian
    float64 payload of all A factors then all G factors."""
    dims = " ".join(f"{a}x{g}" for a, g in state.shapes)
    header = f"kfac {state.damping!r} {state.ema_decay!r} {state.steps} {dims}"
    with open(path, "wb") as fh:
        fh.write((header + "\n").encode("ascii"))
        if state.a_factors is not None:
            flat = np.concatenate(
                [m.ravel() for m in state.a_factors]
                + [m.ravel() for m in state.g_factors]
            )
            fh.write(flat.astype("<f8").tobytes())


def load_kfac(path) -> KfacState:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        payload = fh.read()
    fields = header.split()
    if not fields or fields[0] != "kfac" or len(fields) < 4:
        raise ValueError(f"{path}: not a kfac checkpoint (header {header!r})")
    damping = float(fields[1])
    ema_decay = float(fields[2])
    steps = int(fields[3])
    shapes = []
    for tok in fields[4:]:
        a, g = tok.split("x")
        shapes.append((int(a), int(g)))
    state = KfacState(shapes=tuple(shapes), damping=damping,
                      ema_decay=ema_decay, steps=steps)
    if steps > 0:
        flat = np.frombuffer(payload, dtype="<f8").astype(np.float64)
        expect = sum(a * a for a, _ in shapes) + sum(g * g for _, g in shapes)
        if flat.shape[0] != expect:
            raise ValueError(
                f"{path}: payload holds {flat.shape[0]} floats, expected {expect}"
            )
        offset = 0
        a_factors, g_factors = [], []
        for a, _ in shapes:
            a_factors.append(flat[offset : offset + a * a].reshape(a, a).copy())
            offset += a * a
        for _, g in shapes:
            g_factors.append(flat[offset : offset + g * g].reshape(g, g).copy())
            offset += g * g
        state.a_factors = a_factors
        state.g_factors = g_factors
    elif payload:
        raise ValueError(f"{path}: unexpected payload on a factorless checkpoint")
    return state
