"""Standard bloom filter with seeded double hashing, plus the closed-form
false positive probabilities used to size and analyse filters."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .hashing import Digest, hash64

Indexer = Callable[[Digest], Sequence[int]]


@dataclass(frozen=True)
class FilterParams:
    """Bit-array length ``m``, probe count ``k`` and the target rate they were sized for."""

    m: int
    k: int
    p_target: float = 0.5

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.p_target < 1.0:
            raise ValueError(f"p_target must be in (0, 1), got {self.p_target}")

    def same_shape(self, other: FilterParams) -> bool:
        return self.m == other.m and self.k == other.k


@dataclass(eq=False)
class BitFilter:
    """An m-bit array together with its parameters.

    ``n`` is the number of distinct elements inserted and ``hash_calls`` the
    number of base-hash evaluations spent populating it.
    """

    params: FilterParams
    bits: np.ndarray = None
    n: int = 0
    hash_calls: int = 0

    def __post_init__(self):
        if self.bits is None:
            self.bits = np.zeros(self.params.m, dtype=np.uint8)
        else:
            self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.bits.shape != (self.params.m,):
            raise ValueError(f"bit array length {self.bits.shape} does not match m={self.params.m}")
        self.bits.flags.writeable = False

    def __eq__(self, other):
        if not isinstance(other, BitFilter):
            return NotImplemented
        return self.params.same_shape(other.params) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.params.m, self.params.k, self.bits.tobytes()))

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    def set_indices(self) -> set[int]:
        return set(np.flatnonzero(self.bits).tolist())


def fpr_exact(m: int, k: int, n: int) -> float:
    """False positive probability of an m-bit, k-probe filter holding n elements."""
    if m < 1 or k < 1:
        raise ValueError("m and k must be >= 1")
    if n < 0:
        raise ValueError("n must be >= 0")
    return (1.0 - (1.0 - 1.0 / m) ** (k * n)) ** k


def network_miss_probability(m: int, k: int, n: int, peers: int) -> float:
    """Probability that ``peers`` independently mapped filters all report a false positive."""
    if peers < 1:
        raise ValueError("peer count must be >= 1")
    return fpr_exact(m, k, n) ** peers


def derive_params(n: int, p_target: float) -> FilterParams:
    """Size a filter for ``n`` elements at false positive rate ``p_target``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < p_target < 1.0:
        raise ValueError(f"p_target must be in (0, 1), got {p_target}")
    m = math.ceil(-n * math.log(p_target) / math.log(2) ** 2)
    k = max(1, round(m / n * math.log(2)))
    # ceil/round can overshoot the target for tiny n; grow m until it holds
    while fpr_exact(m, k, n) > p_target + 0.01:
        m += 1
        k = max(1, round(m / n * math.log(2)))
    return FilterParams(m=m, k=k, p_target=p_target)


def base_hashes(element: Digest, salt: int) -> tuple[int, int]:
    return hash64(element, salt, 1), hash64(element, salt, 2)


def standard_indices(element: Digest, params: FilterParams, salt: int) -> list[int]:
    """Probe indices ``(h1 + i*h2) mod m`` for ``i`` in ``0..k``."""
    h1, h2 = base_hashes(element, salt)
    return [(h1 + i * h2) % params.m for i in range(params.k)]


def standard_index_matrix(h1: np.ndarray, h2: np.ndarray, params: FilterParams) -> np.ndarray:
    """Vectorised :func:`standard_indices` from precomputed base hashes; shape (S, k)."""
    m = np.uint64(params.m)
    a = np.asarray(h1, dtype=np.uint64) % m
    b = np.asarray(h2, dtype=np.uint64) % m
    steps = np.arange(params.k, dtype=np.uint64)
    # a, b < m < 2**32 so the products cannot wrap
    return ((a[:, None] + steps[None, :] * b[:, None]) % m).astype(np.int64)


def filter_from_indices(params: FilterParams, indices: np.ndarray, n: int, hash_calls: int = 0) -> BitFilter:
    bits = np.zeros(params.m, dtype=np.uint8)
    if indices.size:
        bits[np.asarray(indices).ravel()] = 1
    return BitFilter(params, bits, n=n, hash_calls=hash_calls)


def populate_standard(
    elements: Iterable[Digest],
    params: FilterParams,
    salt: int,
    indexer: Indexer | None = None,
) -> BitFilter:
    """Build a standard filter; every element costs two base-hash evaluations.

    ``indexer`` replaces the hash-derived probe indices, e.g. to pin known vectors.
    """
    unique = set(elements)
    if indexer is None:
        indexer = lambda e: standard_indices(e, params, salt)  # noqa: E731
    rows = [list(indexer(e)) for e in unique]
    idx = np.array(rows, dtype=np.int64).reshape(len(rows), -1) if rows else np.empty((0, params.k), np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= params.m):
        raise ValueError("indexer produced an index outside [0, m)")
    return filter_from_indices(params, idx, n=len(unique), hash_calls=2 * len(unique))


def contains(filt: BitFilter, indices: Sequence[int]) -> bool:
    """True iff every listed bit is set."""
    m = filt.params.m
    for i in indices:
        if not 0 <= i < m:
            raise IndexError(f"index {i} outside [0, {m})")
    return all(filt.bits[i] for i in indices)
