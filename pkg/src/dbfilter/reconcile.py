"""One reconciliation exchange: reduce two same-mapping filters, classify the
differing bits and resolve requested indices back to local elements."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .bloom import BitFilter, FilterParams, derive_params, standard_indices
from .hashing import Digest
from .mapping import PairMapping, dbf_indices


def reduce_filters(own: BitFilter, received: BitFilter) -> np.ndarray:
    """Elementwise ``own - received``; entries are -1, 0 or +1."""
    if not own.params.same_shape(received.params):
        raise ValueError(
            f"cannot reduce m={own.params.m},k={own.params.k} "
            f"against m={received.params.m},k={received.params.k}"
        )
    return own.bits.astype(np.int8) - received.bits.astype(np.int8)


def classify_indices(reduction: np.ndarray) -> tuple[set[int], set[int]]:
    """Split a reduction into (missing, surplus) index sets.

    ``missing`` marks bits only the sender has, so the receiver may lack
    elements there; ``surplus`` marks bits only the receiver has.
    """
    reduction = np.asarray(reduction)
    missing = set(np.flatnonzero(reduction == -1).tolist())
    surplus = set(np.flatnonzero(reduction == 1).tolist())
    return missing, surplus


def resolve_indices(
    requested: Iterable[int],
    local_elements: Iterable[Digest],
    params: FilterParams,
    *,
    mapping: PairMapping | None = None,
    salt: int | None = None,
) -> set[Digest]:
    """Every local element with at least one probe index among ``requested``.

    Pass ``mapping`` for a distributed filter or ``salt`` for a standard one.
    The result over-approximates what the requester lacks.
    """
    if (mapping is None) == (salt is None):
        raise ValueError("exactly one of mapping or salt is required")
    wanted = set(requested)
    for i in wanted:
        if not 0 <= i < params.m:
            raise IndexError(f"index {i} outside [0, {params.m})")
    if not wanted:
        return set()
    if mapping is not None:
        indices_of = lambda e: dbf_indices(e, mapping, params.m)  # noqa: E731
    else:
        indices_of = lambda e: standard_indices(e, params, salt)  # noqa: E731
    return {e for e in set(local_elements) if wanted.intersection(indices_of(e))}


def apply_transfer(local: Iterable[Digest], incoming) -> set[Digest]:
    """Union of the local set with an :class:`ElementTransfer` (or any digest iterable)."""
    digests = getattr(incoming, "digests", incoming)
    return set(local) | set(digests)


def negotiate_params(n_a: int, n_b: int, p_target: float) -> FilterParams:
    """Size the shared filter for the larger of the two announced set sizes."""
    if n_a < 0 or n_b < 0:
        raise ValueError("set sizes must be >= 0")
    if n_a == 0 and n_b == 0:
        raise ValueError("at least one set size must be positive")
    return derive_params(max(n_a, n_b), p_target)
