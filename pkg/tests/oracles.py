"""Brute-force reference computations, deliberately written without numpy
or any of the package's vectorised paths."""

import random

from dbfilter.bloom import FilterParams
from dbfilter.hashing import low64
from dbfilter.mapping import PairMapping


def scalar_dbf_indices(element: bytes, mapping: PairMapping, m: int) -> list[int]:
    return [(low64(element) ^ low64(h)) % m for h in mapping.hashes]


def brute_force_detected(sender: set, receiver: set, index_of) -> set:
    """Sender elements the receiver lacks and can detect: those with at
    least one probe bit that no receiver element sets."""
    receiver_bits = {i for e in receiver for i in index_of(e)}
    return {e for e in sender - receiver if not set(index_of(e)) <= receiver_bits}


def random_instance(rng: random.Random):
    m = rng.randint(1, 32)
    k = rng.randint(1, 3)
    pool = [rng.randbytes(32) for _ in range(15)]
    sender = set(rng.sample(pool, rng.randint(0, 10)))
    receiver = set(rng.sample(pool, rng.randint(0, 10)))
    return FilterParams(m, k), sender, receiver
