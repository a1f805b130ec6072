"""Small dense networks with explicit forward, reverse, and tangent passes.

The package trains by assembling gradients and curvature factors by hand, so
the network keeps its internals open: `forward(capture=True)` records the
per-layer inputs and `backward` records the pre-activation gradients, which
are exactly the two statistics the Kronecker-factored Fisher needs.  A
forward-mode `jvp` provides Jacobian-vector products for the capacity
penalty, and `jvp_adjoint` differentiates a weighted squared JVP with
respect to the parameters (reverse over forward), which is the gradient
path of that penalty.

Parameters of a layer live in an augmented block [W | b] of shape
(out, in+1); the flat parameter vector concatenates these blocks row-major,
so the total count is sum((in+1) * out).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("identity", "tanh", "relu", "softplus")

# explicit_jacobian refuses to materialize anything larger than this.
JACOBIAN_SIZE_GUARD = 10_000


def _sigmoid(s: np.ndarray) -> np.ndarray:
    # tanh form is stable for large |s| in both directions
    return 0.5 * (1.0 + np.tanh(0.5 * s))


def _act(name: str, s: np.ndarray) -> np.ndarray:
    if name == "identity":
        return s
    if name == "tanh":
        return np.tanh(s)
    if name == "relu":
        return np.maximum(s, 0.0)
    if name == "softplus":
        return np.logaddexp(0.0, s)
    raise ValueError(f"unknown activation {name!r}")


def _act_d(name: str, s: np.ndarray) -> np.ndarray:
    """First derivative at pre-activation s.  relu'(0) is defined as 0."""
    if name == "identity":
        return np.ones_like(s)
    if name == "tanh":
        y = np.tanh(s)
        return 1.0 - y * y
    if name == "relu":
        return (s > 0.0).astype(np.float64)
    if name == "softplus":
        return _sigmoid(s)
    raise ValueError(f"unknown activation {name!r}")


def _act_dd(name: str, s: np.ndarray) -> np.ndarray:
    """Second derivative at pre-activation s (zero a.e. for relu)."""
    if name in ("identity", "relu"):
        return np.zeros_like(s)
    if name == "tanh":
        y = np.tanh(s)
        return -2.0 * y * (1.0 - y * y)
    if name == "softplus":
        p = _sigmoid(s)
        return p * (1.0 - p)
    raise ValueError(f"unknown activation {name!r}")


@dataclass(frozen=True)
class LayerSpec:
    """One dense layer: out = activation(W x + b)."""

    in_dim: int
    out_dim: int
    activation: str = "identity"

    def __post_init__(self):
        if self.in_dim <= 0 or self.out_dim <= 0:
            raise ValueError(f"layer dims must be positive, got {self.in_dim}x{self.out_dim}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"activation must be one of {ACTIVATIONS}, got {self.activation!r}"
            )


class Network:
    """A stack of dense layers over float64 arrays.

    Args:
        specs: layer specs; consecutive dims must chain.
        rng: source for the initial draw.  Weights are uniform in
            +-sqrt(6 / (in_dim + out_dim)), biases start at zero.
    """

    def __init__(self, specs, rng=None):
        specs = tuple(specs)
        if not specs:
            raise ValueError("network needs at least one layer")
        for a, b in zip(specs, specs[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError(
                    f"layer dims do not chain: {a.out_dim} -> {b.in_dim}"
                )
        self.specs = specs
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for sp in specs:
            if rng is None:
                w = np.zeros((sp.out_dim, sp.in_dim))
            else:
                bound = np.sqrt(6.0 / (sp.in_dim + sp.out_dim))
                w = rng.uniform(-bound, bound, (sp.out_dim, sp.in_dim))
            self.weights.append(np.asarray(w, dtype=np.float64))
            self.biases.append(np.zeros(sp.out_dim))
        self._acts = None       # layer inputs a_0 .. a_{L-1}, captured
        self._pre = None        # pre-activations s_0 .. s_{L-1}, captured
        self._grads_pre = None  # pre-activation gradients, captured by backward

    # ------------------------------------------------------------------ shape

    @property
    def in_dim(self) -> int:
        return self.specs[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.specs[-1].out_dim

    @property
    def n_layers(self) -> int:
        return len(self.specs)

    @property
    def n_params(self) -> int:
        return sum((sp.in_dim + 1) * sp.out_dim for sp in self.specs)

    # ------------------------------------------------------------- parameters

    def param_blocks(self) -> list[np.ndarray]:
        """Per-layer augmented [W | b] blocks, shape (out, in+1).  Copies."""
        return [
            np.concatenate([w, b[:, None]], axis=1)
            for w, b in zip(self.weights, self.biases)
        ]

    def get_params(self) -> np.ndarray:
        return np.concatenate([blk.ravel() for blk in self.param_blocks()])

    def set_params(self, flat) -> None:
        flat = np.asarray(flat, dtype=np.float64).ravel()
        if flat.shape[0] != self.n_params:
            raise ValueError(
                f"expected {self.n_params} parameters, got {flat.shape[0]}"
            )
        offset = 0
        for i, sp in enumerate(self.specs):
            size = (sp.in_dim + 1) * sp.out_dim
            blk = flat[offset : offset + size].reshape(sp.out_dim, sp.in_dim + 1)
            self.weights[i] = blk[:, : sp.in_dim].copy()
            self.biases[i] = blk[:, sp.in_dim].copy()
            offset += size

    def copy(self) -> "Network":
        net = Network(self.specs)
        net.weights = [w.copy() for w in self.weights]
        net.biases = [b.copy() for b in self.biases]
        return net

    # ---------------------------------------------------------------- forward

    def forward(self, x, capture: bool = False) -> np.ndarray:
        """Run the network on a batch.

        Args:
            x: (B, in_dim) batch or a single (in_dim,) vector.
            capture: record per-layer inputs and pre-activations so that a
                subsequent `backward` can run and Fisher factors can be read.

        Returns:
            (B, out_dim) outputs, or (out_dim,) when x was a vector.
        """
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(
                f"input has shape {x.shape}, expected (*, {self.in_dim})"
            )
        acts = [x]
        pre = []
        a = x
        for sp, w, b in zip(self.specs, self.weights, self.biases):
            s = a @ w.T + b
            pre.append(s)
            a = _act(sp.activation, s)
            acts.append(a)
        if capture:
            self._acts = acts[:-1]
            self._pre = pre
            self._grads_pre = None
        return a[0] if single else a

    def backward(self, upstream, return_input_grad: bool = False):
        """Gradients of sum(upstream * output) over the captured batch.

        Requires a preceding `forward(..., capture=True)`.  The pre-activation
        gradients of every layer are recorded for Fisher factor estimation.

        Args:
            upstream: (B, out_dim) adjoint of the output (or (out_dim,) if the
                captured batch was a single vector).
            return_input_grad: also return d/dx, shape matching the input.

        Returns:
            List of per-layer gradient blocks, each (out, in+1) matching
            `param_blocks`; optionally (grads, input_grad).

        Raises:
            RuntimeError: if no captured forward pass is available.
        """
        if self._acts is None:
            raise RuntimeError("backward requires a captured forward pass")
        up = np.asarray(upstream, dtype=np.float64)
        if up.ndim == 1:
            up = up[None, :]
        batch = self._acts[0].shape[0]
        if up.shape != (batch, self.out_dim):
            raise ValueError(
                f"upstream has shape {up.shape}, expected {(batch, self.out_dim)}"
            )
        grads: list[np.ndarray] = [None] * self.n_layers
        grads_pre: list[np.ndarray] = [None] * self.n_layers
        delta = up
        for l in range(self.n_layers - 1, -1, -1):
            sp = self.specs[l]
            delta = delta * _act_d(sp.activation, self._pre[l])
            grads_pre[l] = delta
            gw = delta.T @ self._acts[l]
            gb = delta.sum(axis=0)
            grads[l] = np.concatenate([gw, gb[:, None]], axis=1)
            if l > 0 or return_input_grad:
                delta = delta @ self.weights[l]
        self._grads_pre = grads_pre
        if return_input_grad:
            return grads, delta
        return grads

    def captured_stats(self):
        """(layer inputs, pre-activation gradients) recorded by the last
        capture + backward pair, for Kronecker factor updates."""
        if self._acts is None or self._grads_pre is None:
            raise RuntimeError("no captured forward/backward pair available")
        return self._acts, self._grads_pre

    # --------------------------------------------------------------- tangents

    def jvp(self, x, v) -> np.ndarray:
        """Jacobian-vector product J(x) v by forward-mode propagation."""
        x = np.asarray(x, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        if x.shape != (self.in_dim,) or v.shape != (self.in_dim,):
            raise ValueError(
                f"x and v must both have shape ({self.in_dim},), got {x.shape} and {v.shape}"
            )
        u, _ = self.jvp_batch(x[None, :], v[None, :])
        return u[0]

    def jvp_batch(self, x, v):
        """Batched J(x_i) v_i with the intermediate tangents returned.

        Args:
            x: (B, in_dim) inputs.
            v: (B, in_dim) per-sample tangent vectors.

        Returns:
            (u, cache): u is the (B, out_dim) tangent output; cache holds the
            intermediates needed by `jvp_adjoint`.
        """
        x = np.asarray(x, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim or v.shape != x.shape:
            raise ValueError(
                f"x and v must be (B, {self.in_dim}) with matching shapes, "
                f"got {x.shape} and {v.shape}"
            )
        a, t = x, v
        acts, pre, tangents, tan_pre = [x], [], [v], []
        for sp, w, b in zip(self.specs, self.weights, self.biases):
            s = a @ w.T + b
            ts = t @ w.T
            pre.append(s)
            tan_pre.append(ts)
            a = _act(sp.activation, s)
            t = _act_d(sp.activation, s) * ts
            acts.append(a)
            tangents.append(t)
        cache = (acts, pre, tangents, tan_pre)
        return t, cache

    def jvp_adjoint(self, cache, u_bar) -> list[np.ndarray]:
        """Parameter gradient of sum(u_bar * u) where u = J(x_i) v_i.

        This is reverse-mode applied to the forward-tangent computation of
        `jvp_batch`: adjoints flow through both the primal track (because
        activation derivatives depend on the pre-activations) and the tangent
        track.

        Args:
            cache: second output of `jvp_batch`.
            u_bar: (B, out_dim) adjoint of the tangent output.

        Returns:
            Per-layer gradient blocks (out, in+1), same layout as
            `param_blocks`.
        """
        acts, pre, tangents, tan_pre = cache
        u_bar = np.asarray(u_bar, dtype=np.float64)
        batch = acts[0].shape[0]
        if u_bar.shape != (batch, self.out_dim):
            raise ValueError(
                f"u_bar has shape {u_bar.shape}, expected {(batch, self.out_dim)}"
            )
        grads: list[np.ndarray] = [None] * self.n_layers
        a_bar = np.zeros_like(acts[-1])
        t_bar = u_bar
        for l in range(self.n_layers - 1, -1, -1):
            sp = self.specs[l]
            d = _act_d(sp.activation, pre[l])
            dd = _act_dd(sp.activation, pre[l])
            ts_bar = t_bar * d
            s_bar = a_bar * d + t_bar * tan_pre[l] * dd
            gw = s_bar.T @ acts[l] + ts_bar.T @ tangents[l]
            gb = s_bar.sum(axis=0)
            grads[l] = np.concatenate([gw, gb[:, None]], axis=1)
            a_bar = s_bar @ self.weights[l]
            t_bar = ts_bar @ self.weights[l]
        return grads

    def explicit_jacobian(self, x) -> np.ndarray:
        """Materialize J(x) row by row via basis-vector JVPs.

        Refuses when out_dim * in_dim exceeds the 10^4 element guard.
        """
        if self.out_dim * self.in_dim > JACOBIAN_SIZE_GUARD:
            raise ValueError(
                f"explicit Jacobian of {self.out_dim}x{self.in_dim} exceeds the "
                f"{JACOBIAN_SIZE_GUARD}-element guard"
            )
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.in_dim,):
            raise ValueError(f"x must have shape ({self.in_dim},), got {x.shape}")
        eye = np.eye(self.in_dim)
        xs = np.repeat(x[None, :], self.in_dim, axis=0)
        u, _ = self.jvp_batch(xs, eye)
        return u.T.copy()

    # --------------------------------------------------------------------- io

    def save(self, path) -> None:
        """Write a text header (layer dims and activations) followed by the
        flat parameter vector as little-endian float64."""
        header = "net " + " ".join(
            f"{sp.in_dim}:{sp.activation}:{sp.out_dim}" for sp in self.specs
        )
        with open(path, "wb") as fh:
            fh.write((header + "\n").encode("ascii"))
            fh.write(self.get_params().astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "Network":
        with open(path, "rb") as fh:
            header = fh.readline().decode("ascii").strip()
            payload = fh.read()
        fields = header.split()
        if not fields or fields[0] != "net":
            raise ValueError(f"{path}: not a network file (header {header!r})")
        specs = []
        for tok in fields[1:]:
            parts = tok.split(":")
            if len(parts) != 3:
                raise ValueError(f"{path}: bad layer token {tok!r}")
            specs.append(LayerSpec(int(parts[0]), int(parts[2]), parts[1]))
        net = cls(specs)
        flat = np.frombuffer(payload, dtype="<f8")
        if flat.shape[0] != net.n_params:
            raise ValueError(
                f"{path}: payload holds {flat.shape[0]} floats, "
                f"expected {net.n_params}"
            )
        net.set_params(flat.astype(np.float64))
        return net
