"""Digest primitives shared by the standard and distributed filters.

A digest is a 32-byte ``bytes`` value. It is used as element identity,
node identity and as hash material for filter mappings.
"""

from __future__ import annotations

import hashlib

import numpy as np

DIGEST_SIZE = 32

# Format constants; recorded in experiment output.
DIGEST_FUNCTION = "sha256"
HASH64_FUNCTION = "blake2b-64"

Digest = bytes


def check_digest(value: bytes) -> bytes:
    if not isinstance(value, (bytes, bytearray)) or len(value) != DIGEST_SIZE:
        raise ValueError(f"digest must be {DIGEST_SIZE} bytes")
    return bytes(value)


def digest(data: bytes) -> Digest:
    """256-bit digest function used for node ids and mapping chains."""
    return hashlib.sha256(data).digest()


def xor_digests(a: bytes, b: bytes) -> Digest:
    if len(a) != len(b):
        raise ValueError("digests must have identical width")
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(len(a), "big")


def low64(value: bytes) -> int:
    """The low 64 bits of a digest read as a big-endian integer."""
    return int.from_bytes(value[-8:], "big")


def low64_array(values) -> np.ndarray:
    """Vectorised :func:`low64` over a sequence of digests."""
    buf = b"".join(v[-8:] for v in values)
    return np.frombuffer(buf, dtype=">u8").astype(np.uint64)


def hash64(data: bytes, salt: int, which: int) -> int:
    """Seeded 64-bit hash. ``which`` selects one of several independent functions."""
    h = hashlib.blake2b(
        data,
        digest_size=8,
        key=(salt & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "big"),
        person=b"dbf-h%d" % which,
    )
    return int.from_bytes(h.digest(), "big")
