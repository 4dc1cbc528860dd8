"""Standard and distributed bloom filters for set reconciliation, with a
deterministic gossip simulator."""

from .bloom import (
    BitFilter,
    FilterParams,
    contains,
    derive_params,
    fpr_exact,
    network_miss_probability,
    populate_standard,
    standard_indices,
)
from .mapping import (
    MappingSeed,
    PairMapping,
    SeedMode,
    dbf_indices,
    derive_mapping,
    interaction_seed,
    pair_seed,
    populate_dbf,
)
from .reconcile import apply_transfer, classify_indices, negotiate_params, reduce_filters, resolve_indices
from .sim import SimConfig, run_experiment, run_round
from .presets import PRESETS, preset_config

__version__ = "0.1.0"

__all__ = [
    "BitFilter",
    "FilterParams",
    "MappingSeed",
    "PRESETS",
    "PairMapping",
    "SeedMode",
    "SimConfig",
    "apply_transfer",
    "classify_indices",
    "contains",
    "dbf_indices",
    "derive_mapping",
    "derive_params",
    "fpr_exact",
    "interaction_seed",
    "negotiate_params",
    "network_miss_probability",
    "pair_seed",
    "populate_dbf",
    "populate_standard",
    "preset_config",
    "reduce_filters",
    "resolve_indices",
    "run_experiment",
    "run_round",
    "standard_indices",
]
