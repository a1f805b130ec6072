"""Training loops: geometry-aware bottleneck runs and the plain baseline.

One optimizer step of the main method does, in order: (1) draw a minibatch
and reparameterized codes z = mu + sigma * eps, (2) estimate the rate term
and the Jacobian capacity penalty with Hutchinson probes, (3) assemble
Euclidean gradients for decoder and encoder (the encoder gradient carries
beta times the two penalties), (4) refresh the Kronecker Fisher factors
from the captured statistics, (5) solve the damped factored systems by
conjugate gradient, and (6) apply additive parameter updates scaled by the
two step sizes.  The baseline optimizes NLL + beta * KL by plain gradient
descent (an ablation flag lets it borrow the preconditioner).

Everything stochastic draws from substreams of the run seed keyed by step
index, so runs are reproducible sample-for-sample and a config uniquely
determines the final parameters.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, asdict, replace

import numpy as np

from .config import TrainConfig, save_config
from .data import DatasetHandle, make_dataset
from .encoder import LOG_VAR_MAX, LOG_VAR_MIN
from .fisher import (
    KfacState,
    flatten_blocks,
    kfac_init,
    kfac_update,
    natural_gradient,
)
from .jf import draw_probes, jf_batch, jf_value_and_grad
from .mi import (
    InfoPlanePoint,
    classification_accuracy,
    inversion_probe,
    mi_knn,
    write_points_csv,
    write_points_jsonl,
)
from .nets import LayerSpec, Network
from .rng import Rng

# Substream layout of the run seed.
_STREAM_ENC_INIT = 11
_STREAM_DEC_INIT = 12
_STREAM_EVAL = 31337
_STREAM_EPOCH = 100_000
_STREAM_STEP = 1_000_000

# Default information-plane grids.
DEFAULT_BETA_GRID = tuple(10.0**e for e in range(-6, 2))
DEFAULT_K_GRID = (2, 4, 8, 16, 32, 64, 128, 256, 512)

# KSG sample caps keep high-dimensional neighbor queries tractable.
_MI_CAP_LOW_DIM = 5000
_MI_CAP_HIGH_DIM = 2000
_MI_DIM_SWITCH = 64


class TrainingDiverged(RuntimeError):
    """Raised when a step goes non-finite; carries the last finite params."""

    def __init__(self, message: str, checkpoint_dir: str | None = None):
        super().__init__(message)
        self.checkpoint_dir = checkpoint_dir


def build_nets(cfg: TrainConfig, d_in: int, n_classes: int, root: Rng):
    """Encoder (tanh hidden, linear 2K head) and decoder (tanh hidden,
    linear logits), initialized from disjoint substreams of the run seed."""
    dims = [d_in] + cfg.hidden_dims("enc")
    enc_specs = [LayerSpec(a, b, "tanh") for a, b in zip(dims, dims[1:])]
    enc_specs.append(LayerSpec(dims[-1], 2 * cfg.k_dim, "identity"))
    ddims = [cfg.k_dim] + cfg.hidden_dims("dec")
    dec_specs = [LayerSpec(a, b, "tanh") for a, b in zip(ddims, ddims[1:])]
    dec_specs.append(LayerSpec(ddims[-1], n_classes, "identity"))
    enc = Network(enc_specs, root.substream(_STREAM_ENC_INIT))
    dec = Network(dec_specs, root.substream(_STREAM_DEC_INIT))
    return enc, dec


def _nll_and_upstream(logits: np.ndarray, y: np.ndarray):
    """Per-sample softmax cross-entropy and its per-sample logit gradient."""
    m = logits.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
    rows = np.arange(logits.shape[0])
    nll = lse - logits[rows, y]
    p = np.exp(logits - lse[:, None])
    upstream = p.copy()
    upstream[rows, y] -= 1.0
    return nll, upstream, p


@dataclass(frozen=True)
class StepMetrics:
    """Loss parts and solver diagnostics for one optimizer step."""

    total: float
    nll: float
    fr: float
    jf: float
    grad_norm_enc: float = 0.0
    grad_norm_dec: float = 0.0
    cg_iters_enc: int = 0
    cg_iters_dec: int = 0
    cg_residual_enc: float = 0.0
    cg_residual_dec: float = 0.0


def geoib_loss_and_grads(enc: Network, dec: Network, x, y, *,
                         beta: float, fr_mode: str, sigma_floor: float,
                         k_dim: int, eps: np.ndarray, probes: np.ndarray,
                         noise_cov: np.ndarray | None = None,
                         want_grads: bool = True):
    """The full objective NLL + beta (FR + JF) and, optionally, its exact
    gradients for both networks.

    The Jacobian penalty treats the noise covariance as a constant input:
    pass `noise_cov` explicitly to freeze it (finite-difference checks), or
    leave it None to evaluate it from the current log-variances.

    Args:
        eps: (B, k_dim) reparameterization draws, fixed for this call.
        probes: (S, B, d_in) Hutchinson probes, fixed for this call.

    Returns:
        metrics alone when want_grads is False, else
        (metrics, g_enc_blocks, g_dec_blocks) with mean-over-batch gradient
        blocks per layer.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    batch = x.shape[0]
    out = enc.forward(x, capture=want_grads)
    mu = out[:, :k_dim]
    raw_lv = out[:, k_dim:]
    lv = np.clip(raw_lv, LOG_VAR_MIN, LOG_VAR_MAX)
    clamp_open = (raw_lv > LOG_VAR_MIN) & (raw_lv < LOG_VAR_MAX)
    sig = np.exp(0.5 * lv)
    z = mu + sig * eps
    logits = dec.forward(z, capture=want_grads)
    nll_vec, up_dec, _ = _nll_and_upstream(logits, y)
    nll = float(nll_vec.mean())

    var = np.exp(lv)
    if fr_mode == "closed_form_kl":
        fr_vec = 0.5 * np.sum(mu**2 + var - lv - 1.0, axis=1)
        dlv_fr = 0.5 * (var - 1.0)
    else:
        fr_vec = 0.5 * np.sum(mu**2, axis=1) + 0.25 * np.sum(lv**2, axis=1)
        dlv_fr = 0.5 * lv
    fr = float(fr_vec.mean())

    nc = noise_cov if noise_cov is not None else np.maximum(var, sigma_floor)
    if want_grads:
        jf_vec, jf_grads = jf_value_and_grad(enc, x, nc, probes, head_dim=k_dim)
    else:
        jf_vec, _ = jf_batch(enc, x, nc, probes, head_dim=k_dim)
    jf = float(jf_vec.mean())

    total = nll + beta * (fr + jf)
    metrics = StepMetrics(total=total, nll=nll, fr=fr, jf=jf)
    if not want_grads:
        return metrics

    g_dec_blocks, dz = dec.backward(up_dec, return_input_grad=True)
    up_enc = np.zeros((batch, 2 * k_dim))
    up_enc[:, :k_dim] = dz + beta * mu
    up_enc[:, k_dim:] = (dz * (0.5 * sig * eps) + beta * dlv_fr) * clamp_open
    g_enc_blocks = enc.backward(up_enc)
    g_enc = [(g + beta * jg) / batch for g, jg in zip(g_enc_blocks, jf_grads)]
    g_dec = [g / batch for g in g_dec_blocks]
    return metrics, g_enc, g_dec


def vib_loss_and_grads(enc: Network, dec: Network, x, y, *,
                       beta: float, k_dim: int, eps: np.ndarray,
                       want_grads: bool = True):
    """Baseline objective NLL + beta * KL(q || N(0, I)), no Jacobian term."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    batch = x.shape[0]
    out = enc.forward(x, capture=want_grads)
    mu = out[:, :k_dim]
    raw_lv = out[:, k_dim:]
    lv = np.clip(raw_lv, LOG_VAR_MIN, LOG_VAR_MAX)
    clamp_open = (raw_lv > LOG_VAR_MIN) & (raw_lv < LOG_VAR_MAX)
    sig = np.exp(0.5 * lv)
    z = mu + sig * eps
    logits = dec.forward(z, capture=want_grads)
    nll_vec, up_dec, _ = _nll_and_upstream(logits, y)
    nll = float(nll_vec.mean())
    var = np.exp(lv)
    fr_vec = 0.5 * np.sum(mu**2 + var - lv - 1.0, axis=1)
    fr = float(fr_vec.mean())
    total = nll + beta * fr
    metrics = StepMetrics(total=total, nll=nll, fr=fr, jf=0.0)
    if not want_grads:
        return metrics
    g_dec_blocks, dz = dec.backward(up_dec, return_input_grad=True)
    up_enc = np.zeros((batch, 2 * k_dim))
    up_enc[:, :k_dim] = dz + beta * mu
    up_enc[:, k_dim:] = (dz * (0.5 * sig * eps) + beta * 0.5 * (var - 1.0)) * clamp_open
    g_enc = [g / batch for g in enc.backward(up_enc)]
    g_dec = [g / batch for g in g_dec_blocks]
    return metrics, g_enc, g_dec


def _sampled_capture(enc: Network, dec: Network, x, z, mu, sig, clamp_open,
                     k_dim: int, step_rng: Rng) -> None:
    """Refresh the captured backward statistics with model-sampled targets:
    decoder targets y ~ p(y|z), encoder scores at fresh codes z ~ q(.|x)."""
    logits = dec.forward(z, capture=True)
    m = logits.max(axis=1, keepdims=True)
    p = np.exp(logits - m)
    p /= p.sum(axis=1, keepdims=True)
    u = step_rng.substream(771).uniform(0.0, 1.0, (x.shape[0], 1))
    y_samp = (p.cumsum(axis=1) > u).argmax(axis=1)
    up_dec = p.copy()
    up_dec[np.arange(x.shape[0]), y_samp] -= 1.0
    dec.backward(up_dec)
    eps2 = step_rng.substream(772).normal((x.shape[0], k_dim))
    up_enc = np.zeros((x.shape[0], 2 * k_dim))
    up_enc[:, :k_dim] = eps2 / sig
    up_enc[:, k_dim:] = 0.5 * (eps2**2 - 1.0) * clamp_open
    enc.forward(x, capture=True)
    enc.backward(up_enc)


def _clip_step(delta: np.ndarray, max_norm: float) -> np.ndarray:
    """Scale a parameter displacement down to max_norm (0 = no cap).

    Scaling preserves the direction, so directional properties of the step
    (descent, cosine with the gradient) survive clipping.
    """
    n = float(np.linalg.norm(delta))
    if max_norm > 0.0 and n > max_norm:
        return delta * (max_norm / n)
    return delta


def gib_step(cfg: TrainConfig, enc: Network, dec: Network,
             kfac_enc: KfacState, kfac_dec: KfacState,
             x, y, step_rng: Rng) -> StepMetrics:
    """One six-part natural-gradient step; mutates nets and factors."""
    x = np.asarray(x, dtype=np.float64)
    batch = x.shape[0]
    eps = step_rng.normal((batch, cfg.k_dim))
    probes = draw_probes(step_rng, cfg.jf_probes, batch, x.shape[1])
    metrics, g_enc, g_dec = geoib_loss_and_grads(
        enc, dec, x, y, beta=cfg.beta, fr_mode=cfg.fr_mode,
        sigma_floor=cfg.sigma_floor, k_dim=cfg.k_dim, eps=eps, probes=probes,
    )
    if not np.isfinite(metrics.total):
        raise FloatingPointError(f"objective went non-finite: {metrics.total!r}")
    if cfg.fisher_stats == "sampled":
        out = enc.forward(x)
        mu = out[:, : cfg.k_dim]
        raw_lv = out[:, cfg.k_dim :]
        lv = np.clip(raw_lv, LOG_VAR_MIN, LOG_VAR_MAX)
        clamp_open = (raw_lv > LOG_VAR_MIN) & (raw_lv < LOG_VAR_MAX)
        sig = np.exp(0.5 * lv)
        _sampled_capture(enc, dec, x, mu + sig * eps, mu, sig, clamp_open,
                         cfg.k_dim, step_rng)
    kfac_update(kfac_enc, enc)
    kfac_update(kfac_dec, dec)
    flat_enc = flatten_blocks(g_enc)
    flat_dec = flatten_blocks(g_dec)
    step_enc = natural_gradient(kfac_enc, flat_enc, tol=cfg.cg_tol,
                                max_iter=cfg.cg_max_iter)
    step_dec = natural_gradient(kfac_dec, flat_dec, tol=cfg.cg_tol,
                                max_iter=cfg.cg_max_iter)
    enc.set_params(enc.get_params()
                   - _clip_step(cfg.eta_phi * step_enc.direction, cfg.step_clip))
    dec.set_params(dec.get_params()
                   - _clip_step(cfg.eta_theta * step_dec.direction, cfg.step_clip))
    return replace(
        metrics,
        grad_norm_enc=float(np.linalg.norm(flat_enc)),
        grad_norm_dec=float(np.linalg.norm(flat_dec)),
        cg_iters_enc=step_enc.iterations, cg_iters_dec=step_dec.iterations,
        cg_residual_enc=step_enc.residual, cg_residual_dec=step_dec.residual,
    )


def vib_step(cfg: TrainConfig, enc: Network, dec: Network,
             kfac_enc: KfacState | None, kfac_dec: KfacState | None,
             x, y, step_rng: Rng) -> StepMetrics:
    """One baseline step: plain gradient descent on NLL + beta KL, or the
    preconditioned variant when cfg.vib_natural_gradient is set."""
    x = np.asarray(x, dtype=np.float64)
    eps = step_rng.normal((x.shape[0], cfg.k_dim))
    metrics, g_enc, g_dec = vib_loss_and_grads(
        enc, dec, x, y, beta=cfg.beta, k_dim=cfg.k_dim, eps=eps,
    )
    if not np.isfinite(metrics.total):
        raise FloatingPointError(f"objective went non-finite: {metrics.total!r}")
    flat_enc = flatten_blocks(g_enc)
    flat_dec = flatten_blocks(g_dec)
    if cfg.vib_natural_gradient:
        kfac_update(kfac_enc, enc)
        kfac_update(kfac_dec, dec)
        step_enc = natural_gradient(kfac_enc, flat_enc, tol=cfg.cg_tol,
                                    max_iter=cfg.cg_max_iter)
        step_dec = natural_gradient(kfac_dec, flat_dec, tol=cfg.cg_tol,
                                    max_iter=cfg.cg_max_iter)
        dir_enc, dir_dec = step_enc.direction, step_dec.direction
        extra = dict(cg_iters_enc=step_enc.iterations,
                     cg_iters_dec=step_dec.iterations,
                     cg_residual_enc=step_enc.residual,
                     cg_residual_dec=step_dec.residual)
    else:
        dir_enc, dir_dec = flat_enc, flat_dec
        extra = {}
    enc.set_params(enc.get_params()
                   - _clip_step(cfg.eta_phi * dir_enc, cfg.step_clip))
    dec.set_params(dec.get_params()
                   - _clip_step(cfg.eta_theta * dir_dec, cfg.step_clip))
    return replace(metrics, grad_norm_enc=float(np.linalg.norm(flat_enc)),
                   grad_norm_dec=float(np.linalg.norm(flat_dec)), **extra)


@dataclass
class RunResult:
    cfg: TrainConfig
    enc: Network
    dec: Network
    history: list
    point: InfoPlanePoint | None
    dataset: DatasetHandle
    out_dir: str | None


def run_training(cfg: TrainConfig, out_dir: str | None = None,
                 evaluate: bool = True) -> RunResult:
    """Train per the config; optionally evaluate and write a run directory.

    Step sizes follow a cosine decay over epochs from their configured
    values toward zero, so minibatch jitter around the optimum is annealed
    away and the final parameters are settled rather than oscillating.

    The run directory receives the resolved config, final network
    checkpoints, per-epoch metrics as JSON lines, and the final evaluation
    as a one-row CSV.  On divergence the last finite parameters are saved
    (when a directory is given) and TrainingDiverged is raised.
    """
    t0 = time.perf_counter()
    ds = make_dataset(cfg.dataset, cfg.seed)
    root = Rng(cfg.seed)
    enc, dec = build_nets(cfg, ds.n_features, ds.n_classes, root)
    need_kfac = cfg.method == "geoib" or cfg.vib_natural_gradient
    kfac_enc = kfac_init(enc, cfg.damping, cfg.kfac_decay) if need_kfac else None
    kfac_dec = kfac_init(dec, cfg.damping, cfg.kfac_decay) if need_kfac else None
    x_tr, y_tr = ds.split("train")
    n = x_tr.shape[0]
    history: list[dict] = []
    last_good = (enc.get_params(), dec.get_params())
    global_step = 0
    for epoch in range(cfg.epochs):
        decay = 0.5 * (1.0 + np.cos(np.pi * epoch / cfg.epochs))
        cfg_epoch = replace(cfg, eta_phi=cfg.eta_phi * decay,
                            eta_theta=cfg.eta_theta * decay)
        order = root.substream(_STREAM_EPOCH + epoch).permutation(n)
        sums: dict[str, float] = {}
        steps_in_epoch = 0
        for start in range(0, n, cfg.batch):
            idx = order[start : start + cfg.batch]
            step_rng = root.substream(_STREAM_STEP + global_step)
            try:
                if cfg.method == "geoib":
                    m = gib_step(cfg_epoch, enc, dec, kfac_enc, kfac_dec,
                                 x_tr[idx], y_tr[idx], step_rng)
                else:
                    m = vib_step(cfg_epoch, enc, dec, kfac_enc, kfac_dec,
                                 x_tr[idx], y_tr[idx], step_rng)
            except FloatingPointError as exc:
                enc.set_params(last_good[0])
                dec.set_params(last_good[1])
                ckpt = None
                if out_dir is not None:
                    os.makedirs(out_dir, exist_ok=True)
                    enc.save(os.path.join(out_dir, "encoder.last_good.net"))
                    dec.save(os.path.join(out_dir, "decoder.last_good.net"))
                    ckpt = out_dir
                raise TrainingDiverged(
                    f"step {global_step} (epoch {epoch}): {exc}",
                    checkpoint_dir=ckpt,
                ) from exc
            global_step += 1
            steps_in_epoch += 1
            for key, val in asdict(m).items():
                sums[key] = sums.get(key, 0.0) + float(val)
        record = {"epoch": epoch}
        record.update({k: v / steps_in_epoch for k, v in sums.items()})
        history.append(record)
        last_good = (enc.get_params(), dec.get_params())
    wall = time.perf_counter() - t0
    point = evaluate_run(cfg, enc, dec, ds, wall) if evaluate else None
    if out_dir is not None:
        write_run_outputs(out_dir, cfg, enc, dec, history, point)
    return RunResult(cfg=cfg, enc=enc, dec=dec, history=history, point=point,
                     dataset=ds, out_dir=out_dir)


def posterior_means(enc: Network, x, k_dim: int) -> np.ndarray:
    """Evaluation-time representation: the posterior mean head mu(x)."""
    return enc.forward(np.asarray(x, dtype=np.float64))[:, :k_dim]


def _standardized(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    std = x.std(axis=0)
    return (x - x.mean(axis=0)) / np.where(std > 0.0, std, 1.0)


def _noise_relative_view(mu: np.ndarray, lv: np.ndarray) -> np.ndarray:
    """Coordinates in which the kNN estimator reads the channel's MI.

    The stochastic code is z = mu(x) + sigma(x) eps, so information lives
    in mu relative to the noise scale: dividing each coordinate by its mean
    posterior sigma (an invertible linear map, MI-preserving) places
    resolvable structure above 1 and noise-dominated structure below it.
    The result is then only ever shrunk, never amplified, to sit at the
    same scale as the standardized features; a max-norm kNN estimate is
    blind to dependence living far below the dominant block's scale, in
    either direction.
    """
    sig = np.exp(0.5 * lv).mean(axis=0)
    snr = (mu - mu.mean(axis=0)) / sig
    top = float(snr.std(axis=0).max())
    if top > 1.0:
        snr = snr / top
    return snr


def evaluate_run(cfg: TrainConfig, enc: Network, dec: Network,
                 ds: DatasetHandle, wall_clock_s: float) -> InfoPlanePoint:
    """Accuracy, mutual information, and inversion leakage at mu(x)."""
    x_te, y_te = ds.split("test")
    mu_te = posterior_means(enc, x_te, cfg.k_dim)
    acc = classification_accuracy(dec, mu_te, y_te)
    x_tr, _ = ds.split("train")
    mu_tr = posterior_means(enc, x_tr, cfg.k_dim)
    inv = inversion_probe(mu_tr, x_tr, mu_te, x_te, seed=cfg.seed)
    joint_dim = ds.n_features + cfg.k_dim
    cap = _MI_CAP_LOW_DIM if joint_dim <= _MI_DIM_SWITCH else _MI_CAP_HIGH_DIM
    n = ds.features.shape[0]
    if n > cap:
        sel = np.sort(Rng(cfg.seed, stream=_STREAM_EVAL).permutation(n)[:cap])
    else:
        sel = np.arange(n)
    x_mi = ds.features[sel]
    out = enc.forward(x_mi)
    mu_mi = out[:, : cfg.k_dim]
    lv_mi = np.clip(out[:, cfg.k_dim :], LOG_VAR_MIN, LOG_VAR_MAX)
    mi = mi_knn(_standardized(x_mi), _noise_relative_view(mu_mi, lv_mi))
    return InfoPlanePoint(beta=cfg.beta, k_dim=cfg.k_dim, accuracy=acc,
                          mi_xz_nats=mi, inversion_mse=inv, seed=cfg.seed,
                          wall_clock_s=wall_clock_s)


def write_run_outputs(out_dir: str, cfg: TrainConfig, enc: Network,
                      dec: Network, history, point) -> None:
    os.makedirs(out_dir, exist_ok=True)
    save_config(cfg, os.path.join(out_dir, "config.resolved"))
    enc.save(os.path.join(out_dir, "encoder.net"))
    dec.save(os.path.join(out_dir, "decoder.net"))
    with open(os.path.join(out_dir, "metrics.jsonl"), "w", encoding="ascii") as fh:
        for rec in history:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    if point is not None:
        write_points_csv([point], os.path.join(out_dir, "point.csv"))
        write_points_jsonl([point], os.path.join(out_dir, "point.jsonl"))


# ----------------------------------------------------------------- sweeps


def _cell_key(beta: float, k_dim: int, seed: int) -> str:
    return f"beta{beta:g}_k{k_dim}_seed{seed}"


def run_sweep(base_cfg: TrainConfig, out_dir: str,
              betas=None, k_dims=None, seeds=(0,)) -> list[InfoPlanePoint]:
    """Grid product of (beta, k_dim, seed) runs with resumability.

    Completed cells are recorded in manifest.jsonl and skipped on re-entry;
    failed cells are recorded with the error and do not stop the sweep.
    The aggregate info_plane.csv and points.jsonl are rewritten at the end
    from all successful cells.
    """
    betas = tuple(betas) if betas is not None else DEFAULT_BETA_GRID
    k_dims = tuple(k_dims) if k_dims is not None else DEFAULT_K_GRID
    os.makedirs(out_dir, exist_ok=True)
    manifest_path = os.path.join(out_dir, "manifest.jsonl")
    done: dict[str, dict] = {}
    if os.path.exists(manifest_path):
        with open(manifest_path, "r", encoding="ascii") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rec = json.loads(line)
                    done[rec["cell"]] = rec
    points: list[InfoPlanePoint] = []
    with open(manifest_path, "a", encoding="ascii") as manifest:
        for beta in betas:
            for k_dim in k_dims:
                for seed in seeds:
                    key = _cell_key(beta, k_dim, seed)
                    if key in done:
                        rec = done[key]
                        if rec.get("status") == "ok":
                            points.append(InfoPlanePoint(**rec["point"]))
                        continue
                    cfg = replace(base_cfg, beta=beta, k_dim=k_dim, seed=seed)
                    cell_dir = os.path.join(out_dir, key)
                    try:
                        res = run_training(cfg, out_dir=cell_dir)
                        rec = {"cell": key, "status": "ok",
                               "point": asdict(res.point)}
                        points.append(res.point)
                    except Exception as exc:  # record and continue the grid
                        rec = {"cell": key, "status": "error",
                               "error": f"{type(exc).__name__}: {exc}"}
                    manifest.write(json.dumps(rec, sort_keys=True) + "\n")
                    manifest.flush()
    write_points_csv(points, os.path.join(out_dir, "info_plane.csv"))
    write_points_jsonl(points, os.path.join(out_dir, "points.jsonl"))
    return points
