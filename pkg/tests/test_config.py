import dataclasses

import pytest

from geoib.config import (
    TrainConfig,
    config_text,
    load_config,
    parse_config_text,
    save_config,
)


def test_defaults_are_valid():
    cfg = TrainConfig()
    assert cfg.method == "geoib"
    assert cfg.beta == 1e-4
    assert cfg.k_dim == 8
    assert cfg.batch == 128
    assert cfg.dataset.startswith("gauss_mixture")


def test_parse_overrides_and_comments():
    cfg = parse_config_text(
        """
        # sweep cell
        beta = 0.01   # compression weight
        k_dim = 32
        method = vib

        epochs = 5
        """
    )
    assert cfg.beta == 0.01
    assert cfg.k_dim == 32
    assert cfg.method == "vib"
    assert cfg.epochs == 5
    assert cfg.batch == 128  # untouched default


def test_parse_reports_line_numbers():
    with pytest.raises(ValueError, match="line 2: unknown key 'betta'"):
        parse_config_text("beta = 0.1\nbetta = 0.2\n")
    with pytest.raises(ValueError, match="line 1: expected key = value"):
        parse_config_text("just words\n")
    with pytest.raises(ValueError, match="line 3: bad value for epochs"):
        parse_config_text("beta = 0.1\n\nepochs = soon\n")


def test_parse_booleans():
    assert parse_config_text("vib_natural_gradient = true").vib_natural_gradient
    assert parse_config_text("vib_natural_gradient = 1").vib_natural_gradient
    assert not parse_config_text("vib_natural_gradient = no").vib_natural_gradient
    with pytest.raises(ValueError, match="boolean"):
        parse_config_text("vib_natural_gradient = maybe")


def test_parse_starts_from_base():
    base = TrainConfig(beta=0.5, k_dim=4)
    cfg = parse_config_text("k_dim = 16", base=base)
    assert cfg.beta == 0.5 and cfg.k_dim == 16


def test_round_trip_through_text():
    cfg = TrainConfig(method="vib", beta=1.5e-3, k_dim=64, epochs=7,
                      vib_natural_gradient=True, enc_hidden="64,32",
                      dataset="two_moons:n=500,noise=0.05")
    back = parse_config_text(config_text(cfg))
    assert back == cfg


def test_text_lists_every_field_in_order():
    text = config_text(TrainConfig())
    lines = text.strip().splitlines()
    names = [ln.split(" = ")[0] for ln in lines]
    assert names == [f.name for f in dataclasses.fields(TrainConfig)]
    assert "method = geoib" in lines
    assert "vib_natural_gradient = false" in lines


def test_file_round_trip(tmp_path):
    cfg = TrainConfig(beta=2e-2, seed=11)
    path = tmp_path / "run.cfg"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_validation_rejects_bad_fields():
    with pytest.raises(ValueError, match="method"):
        TrainConfig(method="sgd")
    with pytest.raises(ValueError, match="fr_mode"):
        TrainConfig(fr_mode="exact")
    with pytest.raises(ValueError, match="fisher_stats"):
        TrainConfig(fisher_stats="montecarlo")
    with pytest.raises(ValueError, match="beta"):
        TrainConfig(beta=-1.0)
    with pytest.raises(ValueError, match="k_dim"):
        TrainConfig(k_dim=0)
    with pytest.raises(ValueError, match="epochs"):
        TrainConfig(epochs=-1)
    with pytest.raises(ValueError, match="eta_phi"):
        TrainConfig(eta_phi=-0.1)
    with pytest.raises(ValueError, match="kfac_decay"):
        TrainConfig(kfac_decay=1.0)


def test_hidden_dims_parsing():
    cfg = TrainConfig(enc_hidden="64, 32", dec_hidden="")
    assert cfg.hidden_dims("enc") == [64, 32]
    assert cfg.hidden_dims("dec") == []
