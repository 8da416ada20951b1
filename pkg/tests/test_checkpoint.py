import numpy as np
import pytest

from conftest import micro_config
from vesselcast.checkpoint import (
    CheckpointError,
    load_checkpoint,
    load_model,
    save_checkpoint,
    save_model,
)
from vesselcast.engine import Rng
from vesselcast.model import Model


def test_round_trip_bit_exact(tmp_path):
    rng = Rng(1)
    tensors = {
        "a.w": np.array(rng.uniforms(12)).reshape(3, 4),
        "a.b": np.array(rng.uniforms(4)),
        "scalarish": np.array([rng.uniform()]),
        "deep": np.array(rng.uniforms(24)).reshape(2, 3, 4),
    }
    p1, p2 = tmp_path / "c1.bin", tmp_path / "c2.bin"
    save_checkpoint(p1, tensors)
    loaded, version = load_checkpoint(p1)
    assert version == 1
    assert list(loaded) == list(tensors)
    for name in tensors:
        assert np.array_equal(loaded[name], tensors[name])
        assert loaded[name].dtype == np.float64
    save_checkpoint(p2, loaded)
    assert p1.read_bytes() == p2.read_bytes()


def test_corrupted_magic_names_path(tmp_path):
    path = tmp_path / "bad.bin"
    save_checkpoint(path, {"x": np.ones(3)})
    blob = bytearray(path.read_bytes())
    blob[:4] = b"NOPE"
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError, match="bad.bin"):
        load_checkpoint(path)


def test_truncated_file(tmp_path):
    path = tmp_path / "trunc.bin"
    save_checkpoint(path, {"x": np.ones(10)})
    path.write_bytes(path.read_bytes()[:-12])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_payload_corruption_fails_checksum(tmp_path):
    path = tmp_path / "flip.bin"
    save_checkpoint(path, {"x": np.ones(10)})
    blob = bytearray(path.read_bytes())
    blob[30] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError, match="checksum"):
        load_checkpoint(path)


def test_model_save_load_identity(tmp_path):
    cfg = micro_config()
    model = Model(cfg)
    path = tmp_path / "model.bin"
    save_model(path, model)
    loaded = load_model(path, cfg)
    for name, tens in model.named.items():
        assert np.array_equal(tens.data, loaded.named[name].data), name


def test_shape_mismatch_names_offending_tensor(tmp_path):
    cfg_big = micro_config(d_model=8)
    cfg_small = micro_config(d_model=4)
    model = Model(cfg_big)
    path = tmp_path / "big.bin"
    save_model(path, model)
    with pytest.raises(CheckpointError, match=r"shape"):
        load_model(path, cfg_small)
    # the error names a concrete tensor
    try:
        load_model(path, cfg_small)
    except CheckpointError as e:
        assert "." in str(e) and "(" in str(e)


def test_architecture_hash_mismatch(tmp_path):
    cfg_a = micro_config(decay=0.1)
    cfg_b = micro_config(decay=0.2)  # same shapes, different forward semantics
    model = Model(cfg_a)
    path = tmp_path / "arch.bin"
    save_model(path, model)
    with pytest.raises(CheckpointError, match="architecture"):
        load_model(path, cfg_b)
