import json
import os
from dataclasses import asdict

import numpy as np
import pytest

from geoib.config import TrainConfig
from geoib.data import gauss_mixture
from geoib.fisher import flatten_blocks, kfac_init
from geoib.jf import draw_probes
from geoib.mi import classification_accuracy, read_points_csv, read_points_jsonl
from geoib.nets import Network
from geoib.rng import Rng
from geoib.training import (
    RunResult,
    TrainingDiverged,
    build_nets,
    evaluate_run,
    geoib_loss_and_grads,
    gib_step,
    posterior_means,
    run_sweep,
    run_training,
    vib_loss_and_grads,
    vib_step,
)

TOY = "gauss_mixture:n=600,noise=0.1,classes=2,dim=2"


def _toy_setup(cfg, seed=0):
    ds = gauss_mixture(600, 0.1, seed=seed, classes=2, dim=2)
    root = Rng(cfg.seed)
    enc, dec = build_nets(cfg, ds.n_features, ds.n_classes, root)
    ke = kfac_init(enc, cfg.damping, cfg.kfac_decay)
    kd = kfac_init(dec, cfg.damping, cfg.kfac_decay)
    x, y = ds.split("train")
    return ds, root, enc, dec, ke, kd, x, y


# ------------------------------------------------------------------- nets


def test_build_nets_shapes():
    cfg = TrainConfig(k_dim=4, enc_hidden="32", dec_hidden="16")
    enc, dec = build_nets(cfg, d_in=8, n_classes=3, root=Rng(0))
    assert [(s.in_dim, s.out_dim, s.activation) for s in enc.specs] == [
        (8, 32, "tanh"), (32, 8, "identity")]
    assert [(s.in_dim, s.out_dim, s.activation) for s in dec.specs] == [
        (4, 16, "tanh"), (16, 3, "identity")]
    enc2, dec2 = build_nets(cfg, d_in=8, n_classes=3, root=Rng(0))
    np.testing.assert_array_equal(enc.get_params(), enc2.get_params())
    np.testing.assert_array_equal(dec.get_params(), dec2.get_params())


# ------------------------------------------------------------- objectives


def test_beta_zero_objectives_agree():
    # without the multiplier the two methods share loss and gradients
    cfg = TrainConfig(beta=0.0, k_dim=2, enc_hidden="8", dataset=TOY)
    _, _, enc, dec, _, _, x, y = _toy_setup(cfg)
    x, y = x[:32], y[:32]
    eps = Rng(1).normal((32, 2))
    probes = draw_probes(Rng(2), 2, 32, 2)
    mg, ge_g, gd_g = geoib_loss_and_grads(
        enc, dec, x, y, beta=0.0, fr_mode=cfg.fr_mode,
        sigma_floor=cfg.sigma_floor, k_dim=2, eps=eps, probes=probes)
    mv, ge_v, gd_v = vib_loss_and_grads(enc, dec, x, y, beta=0.0, k_dim=2,
                                        eps=eps)
    assert mg.total == mv.total == mg.nll == mv.nll
    for a, b in zip(ge_g, ge_v):
        np.testing.assert_array_equal(a, b)
    for a, b in zip(gd_g, gd_v):
        np.testing.assert_array_equal(a, b)


def test_want_grads_false_returns_metrics_only():
    cfg = TrainConfig(k_dim=2, enc_hidden="8", dataset=TOY)
    _, _, enc, dec, _, _, x, y = _toy_setup(cfg)
    eps = Rng(3).normal((16, 2))
    probes = draw_probes(Rng(4), 2, 16, 2)
    m = geoib_loss_and_grads(
        enc, dec, x[:16], y[:16], beta=cfg.beta, fr_mode=cfg.fr_mode,
        sigma_floor=cfg.sigma_floor, k_dim=2, eps=eps, probes=probes,
        want_grads=False)
    assert np.isfinite(m.total) and m.fr >= 0.0 and m.jf >= 0.0
    assert abs(m.total - (m.nll + cfg.beta * (m.fr + m.jf))) < 1e-12


# ------------------------------------------------------------------ steps


def test_gib_step_frozen_when_lr_zero():
    cfg = TrainConfig(eta_phi=0.0, eta_theta=0.0, k_dim=2, enc_hidden="8",
                      dataset=TOY)
    _, _, enc, dec, ke, kd, x, y = _toy_setup(cfg)
    p_e, p_d = enc.get_params().copy(), dec.get_params().copy()
    m = gib_step(cfg, enc, dec, ke, kd, x[:32], y[:32], Rng(5))
    np.testing.assert_array_equal(enc.get_params(), p_e)
    np.testing.assert_array_equal(dec.get_params(), p_d)
    assert np.isfinite(m.total) and m.cg_iters_enc >= 1
    assert m.grad_norm_enc > 0.0


def test_vib_step_frozen_when_lr_zero():
    cfg = TrainConfig(method="vib", eta_phi=0.0, eta_theta=0.0, k_dim=2,
                      enc_hidden="8", dataset=TOY)
    _, _, enc, dec, _, _, x, y = _toy_setup(cfg)
    p_e = enc.get_params().copy()
    m = vib_step(cfg, enc, dec, None, None, x[:32], y[:32], Rng(6))
    np.testing.assert_array_equal(enc.get_params(), p_e)
    assert np.isfinite(m.total) and m.jf == 0.0


def test_gib_step_learns_separable_toy():
    cfg = TrainConfig(beta=1e-4, k_dim=2, enc_hidden="8", batch=32,
                      dataset=TOY)
    _, root, enc, dec, ke, kd, x, y = _toy_setup(cfg)
    n = x.shape[0]
    for step in range(500):
        rng = root.substream(1_000_000 + step)
        idx = rng.permutation(n)[: cfg.batch]
        gib_step(cfg, enc, dec, ke, kd, x[idx], y[idx], rng)
    acc = classification_accuracy(dec, posterior_means(enc, x, 2), y)
    assert acc >= 0.98


def test_vib_matches_gib_at_beta_zero_on_toy():
    accs = {}
    for method in ("geoib", "vib"):
        cfg = TrainConfig(method=method, beta=0.0, k_dim=2, enc_hidden="8",
                          batch=32, dataset=TOY)
        _, root, enc, dec, ke, kd, x, y = _toy_setup(cfg)
        n = x.shape[0]
        for step in range(500):
            rng = root.substream(1_000_000 + step)
            idx = rng.permutation(n)[: cfg.batch]
            if method == "geoib":
                gib_step(cfg, enc, dec, ke, kd, x[idx], y[idx], rng)
            else:
                vib_step(cfg, enc, dec, None, None, x[idx], y[idx], rng)
        accs[method] = classification_accuracy(
            dec, posterior_means(enc, x, 2), y)
    assert abs(accs["geoib"] - accs["vib"]) <= 0.01


def test_huge_damping_gives_plain_gradient_direction():
    # lambda -> inf: the preconditioner approaches a multiple of the identity
    cfg = TrainConfig(damping=1e6, step_clip=0.0, k_dim=2, enc_hidden="8",
                      dataset=TOY, batch=64)
    _, _, enc, dec, ke, kd, x, y = _toy_setup(cfg)
    x, y = x[:64], y[:64]
    rng = Rng(99)
    eps = rng.normal((64, 2))
    probes = draw_probes(rng, cfg.jf_probes, 64, 2)
    _, g_enc, g_dec = geoib_loss_and_grads(
        enc.copy(), dec.copy(), x, y, beta=cfg.beta, fr_mode=cfg.fr_mode,
        sigma_floor=cfg.sigma_floor, k_dim=2, eps=eps, probes=probes)
    p_e, p_d = enc.get_params().copy(), dec.get_params().copy()
    gib_step(cfg, enc, dec, ke, kd, x, y, Rng(99))
    for delta, g in ((p_e - enc.get_params(), flatten_blocks(g_enc)),
                     (p_d - dec.get_params(), flatten_blocks(g_dec))):
        cos = float(delta @ g / (np.linalg.norm(delta) * np.linalg.norm(g)))
        assert cos > 0.999


def test_gib_step_rejects_non_finite_loss():
    cfg = TrainConfig(k_dim=2, enc_hidden="8", dataset=TOY)
    _, _, enc, dec, ke, kd, x, y = _toy_setup(cfg)
    enc.set_params(np.full(enc.n_params, np.inf))
    with np.errstate(all="ignore"):
        with pytest.raises(FloatingPointError, match="non-finite"):
            gib_step(cfg, enc, dec, ke, kd, x[:8], y[:8], Rng(7))


def test_sampled_fisher_stats_step_is_deterministic():
    results = []
    for _ in range(2):
        cfg = TrainConfig(fisher_stats="sampled", k_dim=2, enc_hidden="8",
                          dataset=TOY)
        _, _, enc, dec, ke, kd, x, y = _toy_setup(cfg)
        gib_step(cfg, enc, dec, ke, kd, x[:32], y[:32], Rng(8))
        results.append(enc.get_params())
    np.testing.assert_array_equal(results[0], results[1])


def test_vib_natural_gradient_ablation_uses_solver():
    cfg = TrainConfig(method="vib", vib_natural_gradient=True, k_dim=2,
                      enc_hidden="8", dataset=TOY)
    _, _, enc, dec, ke, kd, x, y = _toy_setup(cfg)
    p_e = enc.get_params().copy()
    m = vib_step(cfg, enc, dec, ke, kd, x[:32], y[:32], Rng(9))
    assert m.cg_iters_enc >= 1
    assert not np.array_equal(enc.get_params(), p_e)


# ------------------------------------------------------------- full runs


def test_beta_zero_run_masters_separated_mixture():
    # means six noise-sigmas apart: near-Bayes accuracy is reachable
    cfg = TrainConfig(beta=0.0, dataset="gauss_mixture:n=2000,noise=0.14",
                      epochs=20)
    res = run_training(cfg, evaluate=True)
    assert res.point.accuracy >= 0.99


def test_run_training_deterministic():
    cfg = TrainConfig(dataset="gauss_mixture:n=300,noise=0.14", epochs=2,
                      k_dim=4, enc_hidden="8")
    a = run_training(cfg)
    b = run_training(cfg)
    np.testing.assert_array_equal(a.enc.get_params(), b.enc.get_params())
    np.testing.assert_array_equal(a.dec.get_params(), b.dec.get_params())
    assert a.history == b.history
    pa, pb = asdict(a.point), asdict(b.point)
    pa.pop("wall_clock_s")
    pb.pop("wall_clock_s")
    assert pa == pb


def test_run_training_writes_round_trippable_outputs(tmp_path):
    out = tmp_path / "run"
    cfg = TrainConfig(dataset="gauss_mixture:n=300,noise=0.14", epochs=2,
                      k_dim=4, enc_hidden="8")
    res = run_training(cfg, out_dir=str(out))
    from geoib.config import load_config

    assert load_config(out / "config.resolved") == cfg
    enc = Network.load(out / "encoder.net")
    np.testing.assert_array_equal(enc.get_params(), res.enc.get_params())
    with open(out / "metrics.jsonl") as fh:
        records = [json.loads(line) for line in fh]
    assert [r["epoch"] for r in records] == [0, 1]
    assert all(np.isfinite(r["total"]) for r in records)
    (csv_pt,) = read_points_csv(out / "point.csv")
    assert csv_pt.accuracy == res.point.accuracy
    (jsonl_pt,) = read_points_jsonl(out / "point.jsonl")
    assert jsonl_pt == res.point


def test_divergence_saves_last_good_checkpoint(tmp_path):
    cfg = TrainConfig(method="vib", eta_phi=1e200, eta_theta=1e200,
                      step_clip=0.0, epochs=1, k_dim=4, enc_hidden="8",
                      dataset="gauss_mixture:n=300,noise=0.14")
    out = tmp_path / "diverged"
    with np.errstate(all="ignore"):
        with pytest.raises(TrainingDiverged, match="step") as info:
            run_training(cfg, out_dir=str(out))
    assert info.value.checkpoint_dir == str(out)
    saved = Network.load(out / "encoder.last_good.net")
    # nothing survived epoch 0, so last-good is the initialization
    ds = gauss_mixture(300, 0.14, seed=cfg.seed)
    enc0, _ = build_nets(cfg, ds.n_features, ds.n_classes, Rng(cfg.seed))
    np.testing.assert_array_equal(saved.get_params(), enc0.get_params())


def test_evaluate_run_passes_wall_clock_through():
    cfg = TrainConfig(dataset="gauss_mixture:n=300,noise=0.14", epochs=1,
                      k_dim=4, enc_hidden="8")
    res = run_training(cfg, evaluate=False)
    assert res.point is None
    point = evaluate_run(cfg, res.enc, res.dec, res.dataset, wall_clock_s=3.25)
    assert point.wall_clock_s == 3.25
    assert 0.0 <= point.accuracy <= 1.0
    assert point.beta == cfg.beta and point.k_dim == cfg.k_dim


# ----------------------------------------------------------------- sweeps


_SWEEP_CFG = TrainConfig(dataset="gauss_mixture:n=200,noise=0.14", epochs=2,
                         k_dim=2, enc_hidden="8")


def test_run_sweep_single_cell(tmp_path):
    out = tmp_path / "sweep"
    points = run_sweep(_SWEEP_CFG, str(out), betas=(1e-4,), k_dims=(2,),
                       seeds=(0,))
    assert len(points) == 1
    assert points[0].beta == 1e-4 and points[0].k_dim == 2
    assert (out / "beta0.0001_k2_seed0" / "config.resolved").exists()
    assert read_points_csv(out / "info_plane.csv") is not None
    assert len(read_points_jsonl(out / "points.jsonl")) == 1


def test_run_sweep_resumes_from_manifest(tmp_path):
    out = tmp_path / "sweep"
    first = run_sweep(_SWEEP_CFG, str(out), betas=(1e-4,), k_dims=(2,),
                      seeds=(0,))
    manifest = (out / "manifest.jsonl").read_text()
    assert len(manifest.splitlines()) == 1
    second = run_sweep(_SWEEP_CFG, str(out), betas=(1e-4,), k_dims=(2,),
                       seeds=(0,))
    assert (out / "manifest.jsonl").read_text() == manifest
    assert second == first


def test_run_sweep_records_failures_and_continues(tmp_path):
    bad = TrainConfig(method="vib", eta_phi=1e200, eta_theta=1e200,
                      step_clip=0.0, epochs=1, k_dim=2, enc_hidden="8",
                      dataset="gauss_mixture:n=200,noise=0.14")
    out = tmp_path / "sweep"
    with np.errstate(all="ignore"):
        points = run_sweep(bad, str(out), betas=(1e-4,), k_dims=(2,),
                           seeds=(0, 1))
    assert points == []
    with open(out / "manifest.jsonl") as fh:
        records = [json.loads(line) for line in fh]
    assert len(records) == 2
    assert all(r["status"] == "error" for r in records)
    assert all("TrainingDiverged" in r["error"] for r in records)
    # aggregate files still written, just empty of rows
    assert read_points_csv(out / "info_plane.csv") == []
