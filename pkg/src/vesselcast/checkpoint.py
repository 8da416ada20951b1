"""Binary checkpoint format.

Layout (all integers little-endian):

    magic   4 bytes  b"CMIV"
    version u32
    count   u32          number of tensors
    per tensor:
        name_len u32, name UTF-8 bytes
        rank     u32
        dims     rank x u64
        payload  prod(dims) x f64 little-endian
    checksum u64         FNV-1a over all payload bytes, in tensor order

The model's architecture fingerprint rides along as the reserved 1-element
tensor "meta.architecture_hash" (an integer below 2^53, exact in f64).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .hashutil import fnv1a64

MAGIC = b"CMIV"
VERSION = 1
HASH_KEY = "meta.architecture_hash"


class CheckpointError(RuntimeError):
    pass


def save_checkpoint(path: str | Path, tensors: dict[str, np.ndarray]) -> None:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    payload_hash = None
    payloads = []
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape) if arr.ndim else b"")
        payload = arr.tobytes()
        payloads.append(payload)
        chunks.append(payload)
    checksum = fnv1a64(b"".join(payloads))
    chunks.append(struct.pack("<Q", checksum))
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], int]:
    """Read and verify a checkpoint; returns (tensors, version)."""
    blob = Path(path).read_bytes()
    view = memoryview(blob)
    pos = 0

    def take(n: int) -> memoryview:
        nonlocal pos
        if pos + n > len(blob):
            raise CheckpointError(f"checkpoint {path} is truncated at byte {pos}")
        chunk = view[pos : pos + n]
        pos += n
        return chunk

    magic = bytes(take(4))
    if magic != MAGIC:
        raise CheckpointError(f"checkpoint {path} has bad magic {magic!r}")
    version, count = struct.unpack("<II", take(8))
    if version != VERSION:
        raise CheckpointError(f"checkpoint {path} has unsupported version {version}")
    tensors: dict[str, np.ndarray] = {}
    payloads = []
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(4))
        name = bytes(take(name_len)).decode("utf-8")
        (rank,) = struct.unpack("<I", take(4))
        dims = struct.unpack(f"<{rank}Q", take(8 * rank)) if rank else ()
        size = 1
        for dim in dims:
            size *= dim
        payload = bytes(take(8 * size))
        payloads.append(payload)
        tensors[name] = np.frombuffer(payload, dtype="<f8").reshape(dims).copy()
    (stored,) = struct.unpack("<Q", take(8))
    if pos != len(blob):
        raise CheckpointError(f"checkpoint {path} has {len(blob) - pos} trailing bytes")
    actual = fnv1a64(b"".join(payloads))
    if stored != actual:
        raise CheckpointError(f"checkpoint {path} payload checksum mismatch")
    return tensors, version


def save_model(path: str | Path, model) -> None:
    tensors = dict(model.state_arrays())
    tensors[HASH_KEY] = np.array([float(model.architecture_hash())])
    save_checkpoint(path, tensors)


def load_model(path: str | Path, cfg):
    """Instantiate a model from cfg and fill it from the checkpoint.

    Shape disagreements name the offending tensor; an architecture-hash
    mismatch with matching shapes means cfg differs in a non-shape field.
    """
    from .model import Model

    tensors, _ = load_checkpoint(path)
    stored_hash = tensors.pop(HASH_KEY, None)
    model = Model(cfg, seed=0)
    for name, param in model.named.items():
        if name not in tensors:
            raise CheckpointError(f"checkpoint {path} is missing tensor '{name}'")
        if tensors[name].shape != param.data.shape:
            raise CheckpointError(
                f"checkpoint {path}: tensor '{name}' has shape {tensors[name].shape}, "
                f"config expects {param.data.shape}"
            )
    extra = set(tensors) - set(model.named)
    if extra:
        raise CheckpointError(f"checkpoint {path} has unexpected tensors: {sorted(extra)}")
    if stored_hash is not None and int(stored_hash[0]) != model.architecture_hash():
        raise CheckpointError(
            f"checkpoint {path} was written under a different architecture config"
        )
    for name, param in model.named.items():
        param.data[...] = tensors[name]
    return model
