"""Flat key=value run configuration.

A config file is plain text: one `key = value` per line, '#' starts a
comment, nothing nests.  Every run writes its fully resolved config next to
its outputs, with every field spelled out, so a run directory is
self-describing and re-runnable.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

METHODS = ("geoib", "vib")
FR_MODES = ("closed_form_kl", "fr_quadratic")
FISHER_STATS = ("empirical", "sampled")


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run depends on.

    Attributes:
        method: "geoib" (natural-gradient with the geometric penalties) or
            "vib" (plain-gradient variational baseline).
        beta: compression weight.
        k_dim: representation dimension.
        fr_mode: "closed_form_kl" or "fr_quadratic" for the rate term.
        jf_probes: Hutchinson probe count per step.
        eta_phi / eta_theta: encoder / decoder step sizes.
        damping: Tikhonov damping added to each Kronecker factor.
        cg_tol / cg_max_iter: conjugate-gradient stopping rule.
        batch: minibatch size.
        epochs: passes over the training split.
        seed: run seed; fixes data, init, and every stochastic draw.
        sigma_floor: variance floor for noise covariances.
        step_clip: per-step cap on the parameter displacement norm, applied
            by scaling (direction preserved); 0 disables.  Guards against
            the huge early steps a barely-warmed Fisher produces.
        dataset: dataset spec string, e.g. "gauss_mixture:n=5000,noise=0.14".
        enc_hidden / dec_hidden: comma-separated hidden widths ('' = none).
        kfac_decay: EMA decay of the Kronecker factors.
        fisher_stats: "empirical" (reuse the loss backward pass) or
            "sampled" (model-sampled backward pass) for factor statistics.
        vib_natural_gradient: precondition the vib baseline too (ablation).
    """

    method: str = "geoib"
    beta: float = 1e-4
    k_dim: int = 8
    fr_mode: str = "closed_form_kl"
    jf_probes: int = 2
    eta_phi: float = 0.2
    eta_theta: float = 0.2
    damping: float = 1e-3
    cg_tol: float = 1e-6
    cg_max_iter: int = 50
    batch: int = 128
    epochs: int = 50
    seed: int = 0
    sigma_floor: float = float(np.exp(-12.0))
    step_clip: float = 1.0
    dataset: str = "gauss_mixture:n=5000,noise=0.14"
    enc_hidden: str = "32"
    dec_hidden: str = ""
    kfac_decay: float = 0.95
    fisher_stats: str = "empirical"
    vib_natural_gradient: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.fr_mode not in FR_MODES:
            raise ValueError(f"fr_mode must be one of {FR_MODES}, got {self.fr_mode!r}")
        if self.fisher_stats not in FISHER_STATS:
            raise ValueError(
                f"fisher_stats must be one of {FISHER_STATS}, got {self.fisher_stats!r}"
            )
        if self.beta < 0.0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        for name in ("k_dim", "jf_probes", "batch", "epochs", "cg_max_iter"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("eta_phi", "eta_theta", "cg_tol", "sigma_floor", "step_clip"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")
        if not 0.0 <= self.kfac_decay < 1.0:
            raise ValueError(f"kfac_decay must lie in [0, 1), got {self.kfac_decay}")

    def hidden_dims(self, which: str) -> list[int]:
        raw = {"enc": self.enc_hidden, "dec": self.dec_hidden}[which]
        raw = raw.strip()
        if not raw:
            return []
        return [int(tok) for tok in raw.split(",")]


def _parse_value(field_type, raw: str):
    if field_type is bool:
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    return field_type(raw)


def parse_config_text(text: str, base: TrainConfig | None = None) -> TrainConfig:
    """Parse key=value lines into a TrainConfig, starting from `base`.

    Raises:
        ValueError: on unknown keys, malformed lines, or bad values.
    """
    cfg = base if base is not None else TrainConfig()
    known = {f.name: f.type for f in fields(TrainConfig)}
    type_map = {"str": str, "float": float, "int": int, "bool": bool}
    updates = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key not in known:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        ftype = known[key]
        if isinstance(ftype, str):
            ftype = type_map[ftype]
        try:
            updates[key] = _parse_value(ftype, raw)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return replace(cfg, **updates)


def load_config(path, base: TrainConfig | None = None) -> TrainConfig:
    with open(path, "r", encoding="ascii") as fh:
        return parse_config_text(fh.read(), base=base)


def config_text(cfg: TrainConfig) -> str:
    """Render every field, one per line, in declaration order."""
    lines = []
    for f in fields(TrainConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def save_config(cfg: TrainConfig, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(config_text(cfg))
