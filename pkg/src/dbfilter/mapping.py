"""Per-pair filter mappings and XOR-based filter population.

Each node pair derives ``k`` hashes from a shared seed (the XOR of their
ids, optionally mixed with an interaction counter). Stored element digests
are XORed with those hashes and reduced modulo ``m``, so a fresh mapping
costs ``k`` hash evaluations regardless of the set size.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .bloom import BitFilter, filter_from_indices
from .hashing import Digest, check_digest, digest, low64, low64_array, xor_digests


class SeedMode(enum.IntEnum):
    PAIR_STATIC = 1
    PER_INTERACTION = 2


@dataclass(frozen=True)
class MappingSeed:
    value: Digest
    mode: SeedMode = SeedMode.PAIR_STATIC
    counter: int = 0


@dataclass(frozen=True)
class PairMapping:
    """The hash chain ``h_1..h_k`` for one seed. ``hash_calls`` is always ``k``."""

    hashes: tuple[Digest, ...]
    seed: MappingSeed

    @property
    def k(self) -> int:
        return len(self.hashes)

    @property
    def hash_calls(self) -> int:
        return len(self.hashes)

    def low64(self) -> np.ndarray:
        return low64_array(self.hashes)


def pair_seed(a: Digest, b: Digest) -> MappingSeed:
    return MappingSeed(xor_digests(check_digest(a), check_digest(b)), SeedMode.PAIR_STATIC, 0)


def interaction_seed(a: Digest, b: Digest, counter: int) -> MappingSeed:
    """Seed that changes with every interaction of the same pair."""
    if not 0 <= counter < 2**64:
        raise ValueError("counter must fit in 64 bits")
    mixed = xor_digests(check_digest(a), check_digest(b)) + counter.to_bytes(8, "big")
    return MappingSeed(digest(mixed), SeedMode.PER_INTERACTION, counter)


def derive_mapping(seed: MappingSeed, k: int) -> PairMapping:
    """Iterated hash chain: ``h_1 = H(seed)``, ``h_{i+1} = H(h_i)``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    hashes = []
    h = seed.value
    for _ in range(k):
        h = digest(h)
        hashes.append(h)
    return PairMapping(tuple(hashes), seed)


def dbf_indices(element: Digest, mapping: PairMapping, m: int) -> list[int]:
    if m < 1:
        raise ValueError("m must be >= 1")
    e = low64(element)
    return [(e ^ low64(h)) % m for h in mapping.hashes]


def dbf_index_matrix(element_low64: np.ndarray, mapping_low64: np.ndarray, m: int) -> np.ndarray:
    """Vectorised :func:`dbf_indices`; shape (S, k). No hashing involved."""
    x = np.asarray(element_low64, dtype=np.uint64)[:, None] ^ np.asarray(mapping_low64, dtype=np.uint64)[None, :]
    return (x % np.uint64(m)).astype(np.int64)


def populate_dbf(elements: Iterable[Digest], mapping: PairMapping, params) -> BitFilter:
    """Populate a filter under ``mapping``; spends no hash calls beyond the mapping itself."""
    if params.k != mapping.k:
        raise ValueError(f"mapping has {mapping.k} hashes but params.k={params.k}")
    unique = list(set(elements))
    idx = dbf_index_matrix(low64_array(unique), mapping.low64(), params.m) if unique else np.empty((0, params.k), np.int64)
    return filter_from_indices(params, idx, n=len(unique), hash_calls=0)
