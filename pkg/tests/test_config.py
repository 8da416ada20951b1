import pytest

from vesselcast.config import (
    TrainConfig,
    architecture_hash,
    config_from_mapping,
    load_train_config,
    parse_flat,
)
from vesselcast.data.types import WaterwayConfig


def test_parse_flat_comments_and_blanks():
    text = "a = 1\n\n# comment\nb = two  # trailing\n"
    assert parse_flat(text) == {"a": "1", "b": "two"}


def test_parse_flat_rejects_bad_line():
    with pytest.raises(ValueError, match="line 2"):
        parse_flat("a = 1\nnot a pair\n")


def test_coercion_types():
    cfg = config_from_mapping(
        TrainConfig,
        {"lr": "0.002", "epochs": "7", "use_bank": "false", "stem_channels": "4, 8, 8"},
    )
    assert cfg.lr == 0.002
    assert cfg.epochs == 7
    assert cfg.use_bank is False
    assert cfg.stem_channels == (4, 8, 8)


def test_unknown_key_rejected():
    with pytest.raises(ValueError, match="unknown config keys"):
        config_from_mapping(TrainConfig, {"nope": "1"})


def test_validation_rejects_odd_d():
    cfg = TrainConfig(d_model=7, heads=7)
    with pytest.raises(ValueError):
        cfg.validate()


def test_architecture_hash_ignores_training_fields():
    a = TrainConfig(lr=1e-4, epochs=10)
    b = TrainConfig(lr=5e-3, epochs=99)
    assert architecture_hash(a) == architecture_hash(b)
    c = TrainConfig(d_model=16, latent_dim=8)
    assert architecture_hash(a) != architecture_hash(c)


def test_waterway_validation():
    with pytest.raises(ValueError, match="halfwidth"):
        WaterwayConfig(channel_halfwidth=0.0).validate()
    with pytest.raises(ValueError, match="invertible"):
        WaterwayConfig(homography=(1, 0, 0, 2, 0, 0, 3, 0, 0)).validate()


def test_load_train_config_defaults(tmp_path):
    cfg = load_train_config(None)
    assert cfg.lr == 1e-4
    assert cfg.scheduler_factor == 0.5
    assert cfg.scheduler_patience == 10
    assert cfg.kl_weight == 0.01
    assert cfg.bank_clusters == 16
    assert cfg.latent_dim == 16
    path = tmp_path / "c.cfg"
    path.write_text("lr = 3e-3\nepochs = 2\n")
    cfg2 = load_train_config(path)
    assert cfg2.lr == 3e-3 and cfg2.epochs == 2
