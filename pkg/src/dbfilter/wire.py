"""Binary message layout.

Every message starts with the magic ``b"DBF1"`` and a one-byte type tag.
Integers are little-endian. Filter bits are packed with bit ``i`` at byte
``i // 8``, bit position ``i % 8``. The encoded length is what the
simulator charges as bandwidth.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterator, Union

import numpy as np

from .hashing import DIGEST_SIZE

MAGIC = b"DBF1"

ANNOUNCE, INDEX_REQUEST, ELEMENT_TRANSFER, SIZE_PROBE = 1, 2, 3, 4

# Seed-mode byte in a FilterAnnounce. STANDARD carries the global salt in the
# counter field.
MODE_STANDARD = 0
MODE_PAIR_STATIC = 1
MODE_PER_INTERACTION = 2

_HEADER = struct.Struct("<4sB")
_ANNOUNCE = struct.Struct("<32sBQIHI")
_COUNT = struct.Struct("<I")

ANNOUNCE_HEADER_SIZE = _HEADER.size + _ANNOUNCE.size


class DecodeError(ValueError):
    pass


@dataclass(frozen=True)
class FilterAnnounce:
    sender: bytes
    seed_mode: int
    counter: int
    m: int
    k: int
    n_sender: int
    bits: bytes

    def __post_init__(self):
        if len(self.sender) != DIGEST_SIZE:
            raise ValueError("sender id must be 32 bytes")
        if self.seed_mode not in (MODE_STANDARD, MODE_PAIR_STATIC, MODE_PER_INTERACTION):
            raise ValueError(f"unknown seed mode {self.seed_mode}")
        if not (1 <= self.m < 2**32 and 1 <= self.k < 2**16):
            raise ValueError("m or k out of range")
        if not 0 <= self.n_sender < 2**32 or not 0 <= self.counter < 2**64:
            raise ValueError("n_sender or counter out of range")
        if len(self.bits) != (self.m + 7) // 8:
            raise ValueError(f"expected {(self.m + 7) // 8} filter bytes, got {len(self.bits)}")
        spare = len(self.bits) * 8 - self.m
        if spare and self.bits[-1] >> (8 - spare):
            raise ValueError("padding bits beyond m must be zero")

    @classmethod
    def from_bits(cls, sender, seed_mode, counter, k, n_sender, bits: np.ndarray) -> FilterAnnounce:
        bits = np.asarray(bits, dtype=np.uint8)
        packed = np.packbits(bits, bitorder="little").tobytes()
        return cls(sender, seed_mode, counter, len(bits), k, n_sender, packed)

    def unpack_bits(self) -> np.ndarray:
        arr = np.frombuffer(self.bits, dtype=np.uint8)
        return np.unpackbits(arr, bitorder="little")[: self.m]


@dataclass(frozen=True)
class IndexRequest:
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(self.indices)
        object.__setattr__(self, "indices", idx)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("indices must be sorted and distinct")
        if idx and (idx[0] < 0 or idx[-1] >= 2**32):
            raise ValueError("index out of range")

    @classmethod
    def of(cls, indices) -> IndexRequest:
        return cls(tuple(sorted(set(int(i) for i in indices))))


@dataclass(frozen=True)
class ElementTransfer:
    digests: tuple[bytes, ...]

    def __post_init__(self):
        d = tuple(bytes(x) for x in self.digests)
        object.__setattr__(self, "digests", d)
        if any(len(x) != DIGEST_SIZE for x in d):
            raise ValueError("digests must be 32 bytes")
        if len(set(d)) != len(d):
            raise ValueError("duplicate digest in transfer")


@dataclass(frozen=True)
class SizeProbe:
    n: int

    def __post_init__(self):
        if not 0 <= self.n < 2**32:
            raise ValueError("n out of range")


Message = Union[FilterAnnounce, IndexRequest, ElementTransfer, SizeProbe]


def encoded_size(msg: Message) -> int:
    """``len(encode_message(msg))`` without building the bytes."""
    base = _HEADER.size
    if isinstance(msg, FilterAnnounce):
        return ANNOUNCE_HEADER_SIZE + (msg.m + 7) // 8
    if isinstance(msg, IndexRequest):
        return base + 4 + 4 * len(msg.indices)
    if isinstance(msg, ElementTransfer):
        return base + 4 + DIGEST_SIZE * len(msg.digests)
    if isinstance(msg, SizeProbe):
        return base + 4
    raise TypeError(f"not a message: {type(msg).__name__}")


def announce_size(m: int) -> int:
    return ANNOUNCE_HEADER_SIZE + (m + 7) // 8


def request_size(count: int) -> int:
    return _HEADER.size + 4 + 4 * count


def transfer_size(count: int) -> int:
    return _HEADER.size + 4 + DIGEST_SIZE * count


def encode_message(msg: Message) -> bytes:
    if isinstance(msg, FilterAnnounce):
        return (
            _HEADER.pack(MAGIC, ANNOUNCE)
            + _ANNOUNCE.pack(msg.sender, msg.seed_mode, msg.counter, msg.m, msg.k, msg.n_sender)
            + msg.bits
        )
    if isinstance(msg, IndexRequest):
        return (
            _HEADER.pack(MAGIC, INDEX_REQUEST)
            + _COUNT.pack(len(msg.indices))
            + struct.pack(f"<{len(msg.indices)}I", *msg.indices)
        )
    if isinstance(msg, ElementTransfer):
        return _HEADER.pack(MAGIC, ELEMENT_TRANSFER) + _COUNT.pack(len(msg.digests)) + b"".join(msg.digests)
    if isinstance(msg, SizeProbe):
        return _HEADER.pack(MAGIC, SIZE_PROBE) + _COUNT.pack(msg.n)
    raise TypeError(f"not a message: {type(msg).__name__}")


def _need(data: bytes, size: int):
    if len(data) < size:
        raise DecodeError(f"truncated message: need {size} bytes, have {len(data)}")


def decode_message(data: bytes) -> Message:
    data = bytes(data)
    _need(data, _HEADER.size)
    magic, kind = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise DecodeError(f"bad magic {magic!r}")
    body = data[_HEADER.size:]
    try:
        if kind == ANNOUNCE:
            _need(body, _ANNOUNCE.size)
            sender, mode, counter, m, k, n = _ANNOUNCE.unpack_from(body)
            nbytes = (m + 7) // 8
            _need(body, _ANNOUNCE.size + nbytes)
            rest = body[_ANNOUNCE.size:]
            _exact(rest, nbytes)
            return FilterAnnounce(sender, mode, counter, m, k, n, rest)
        if kind == INDEX_REQUEST:
            _need(body, 4)
            (count,) = _COUNT.unpack_from(body)
            _need(body, 4 + 4 * count)
            _exact(body[4:], 4 * count)
            return IndexRequest(struct.unpack_from(f"<{count}I", body, 4))
        if kind == ELEMENT_TRANSFER:
            _need(body, 4)
            (count,) = _COUNT.unpack_from(body)
            _need(body, 4 + DIGEST_SIZE * count)
            _exact(body[4:], DIGEST_SIZE * count)
            raw = body[4:]
            return ElementTransfer(tuple(raw[i * DIGEST_SIZE:(i + 1) * DIGEST_SIZE] for i in range(count)))
        if kind == SIZE_PROBE:
            _exact(body, 4)
            return SizeProbe(_COUNT.unpack(body)[0])
    except DecodeError:
        raise
    except ValueError as exc:
        raise DecodeError(str(exc)) from exc
    raise DecodeError(f"unknown message type {kind}")


def _exact(body: bytes, size: int):
    _need(body, size)
    if len(body) != size:
        raise DecodeError(f"{len(body) - size} trailing bytes")


def write_trace(fh: BinaryIO, msg: Message) -> int:
    """Append one length-prefixed message to a trace file."""
    payload = encode_message(msg)
    fh.write(_COUNT.pack(len(payload)))
    fh.write(payload)
    return len(payload)


def read_trace(fh: BinaryIO) -> Iterator[Message]:
    while True:
        head = fh.read(4)
        if not head:
            return
        _need(head, 4)
        (size,) = _COUNT.unpack(head)
        payload = fh.read(size)
        _need(payload, size)
        yield decode_message(payload)
