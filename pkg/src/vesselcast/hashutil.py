"""Stable 64-bit hashing for checksums, config fingerprints, and stream keys."""

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes | str) -> int:
    """FNV-1a over bytes (strings are UTF-8 encoded). Returns an unsigned u64."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK64
    return h


def config_fingerprint(text: str) -> int:
    """Hash a canonical config rendering into the exact-in-float64 range.

    Masked to 53 bits so the value survives storage as an f64 payload without
    rounding.
    """
    return fnv1a64(text) & ((1 << 53) - 1)
