"""Named configurations for the two reconciliation experiments."""

from __future__ import annotations

from .sim import Delivery, FilterKind, SeedModeName, SimConfig, Sizing

_COMMON = dict(
    num_nodes=50,
    out_degree=10,
    universe_size=1000,
    initial_subset_size=200,
    p_target=0.5,
    seed_mode=SeedModeName.PAIR_STATIC,
    max_rounds=50,
    # both directions per exchange, each transfer visible to the next edge
    push_surplus=True,
    delivery=Delivery.IMMEDIATE,
)

PRESETS = {
    "exp1-sbf": dict(_COMMON, filter_kind=FilterKind.SBF, sizing=Sizing.FIXED_UNIVERSE),
    "exp1-dbf": dict(_COMMON, filter_kind=FilterKind.DBF, sizing=Sizing.FIXED_UNIVERSE),
    "exp2-sbf": dict(_COMMON, filter_kind=FilterKind.SBF, sizing=Sizing.ADAPTIVE),
    "exp2-dbf": dict(_COMMON, filter_kind=FilterKind.DBF, sizing=Sizing.ADAPTIVE),
}


def preset_config(name: str, rng_seed: int = 0, **overrides) -> SimConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    fields = dict(PRESETS[name], rng_seed=rng_seed)
    unknown = set(overrides) - set(SimConfig.__dataclass_fields__)
    if unknown:
        raise ValueError(f"unknown config fields: {', '.join(sorted(unknown))}")
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return SimConfig(**fields)
