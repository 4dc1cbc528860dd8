"""Exit criteria: the two reconciliation experiments over a 10-seed sweep,
the Monte-Carlo checks of both probability formulas, the brute-force
reconciliation oracle and the invariant suite."""

import random
import statistics
import time

import numpy as np
import pytest

from dbfilter.bloom import (
    FilterParams,
    derive_params,
    fpr_exact,
    network_miss_probability,
    populate_standard,
    standard_index_matrix,
    base_hashes,
)
from dbfilter.hashing import digest, low64_array
from dbfilter.mapping import dbf_index_matrix, derive_mapping, pair_seed, populate_dbf
from dbfilter.presets import preset_config
from dbfilter.reconcile import classify_indices, reduce_filters, resolve_indices
from dbfilter.sim import init_state, run_experiment, run_round
from dbfilter.wire import ElementTransfer, FilterAnnounce, IndexRequest, SizeProbe, decode_message, encode_message

from oracles import brute_force_detected, random_instance, scalar_dbf_indices

SEEDS = range(10)
TIME_LIMIT = 60.0
_sweeps = {}


def sweep(preset):
    """Final metrics, non-converged sizes, total hashes and wall time for every seed."""
    if preset not in _sweeps:
        runs = []
        for seed in SEEDS:
            t0 = time.perf_counter()
            result = run_experiment(preset_config(preset, seed))
            elapsed = time.perf_counter() - t0
            sizes = result.state.sizes()
            runs.append(dict(
                seed=seed,
                final=result.final,
                lagging=[s for s in sizes if s < result.config.universe_size],
                hashes=sum(m.hash_invocations for m in result.metrics),
                seconds=elapsed,
            ))
        _sweeps[preset] = runs
    return _sweeps[preset]


def _timing_ok(runs):
    return max(r["seconds"] for r in runs) < TIME_LIMIT


def test_criterion_1_exp1_dbf(report):
    runs = sweep("exp1-dbf")
    converged = [r["final"].converged_nodes for r in runs]
    rounds = [r["final"].round for r in runs]
    ok = (
        all(c >= 47 for c in converged)
        and sum(c == 50 for c in converged) > len(runs) / 2
        and all(x <= 50 for x in rounds)
        and _timing_ok(runs)
    )
    report(1, ok, f"converged per seed {converged}, rounds {rounds}")


def test_criterion_2_exp1_sbf(report):
    runs = sweep("exp1-sbf")
    converged = [r["final"].converged_nodes for r in runs]
    medians = [r["final"].median_set_size for r in runs]
    rounds = [r["final"].round for r in runs]
    ok = (
        all(c == 0 for c in converged)
        and all(x == 50 for x in rounds)
        and all(700 <= m <= 880 for m in medians)
        and _timing_ok(runs)
    )
    report(2, ok, f"converged {converged}, final median set size {medians}")


def test_criterion_3_exp2_sbf(report):
    runs = sweep("exp2-sbf")
    converged = [r["final"].converged_nodes for r in runs]
    lagging = [statistics.median_low(r["lagging"]) if r["lagging"] else None for r in runs]
    ok = (
        all(0 < c < 50 for c in converged)
        and all(m is not None and m >= 990 for m in lagging)
        and _timing_ok(runs)
    )
    report(3, ok, f"converged {converged}, median of non-converged {lagging}")


def test_criterion_4_exp2_dbf(report):
    runs = sweep("exp2-dbf")
    converged = [r["final"].converged_nodes for r in runs]
    rounds = [r["final"].round for r in runs]
    ok = (
        all(c >= 48 for c in converged)
        and sum(c == 50 for c in converged) > len(runs) / 2
        and all(x <= 50 for x in rounds)
        and _timing_ok(runs)
    )
    report(4, ok, f"converged per seed {converged}, rounds {rounds}")


def test_criterion_5_hash_cost(report):
    sbf, dbf = sweep("exp2-sbf"), sweep("exp2-dbf")
    ratios = [s["hashes"] / d["hashes"] for s, d in zip(sbf, dbf)]
    report(5, all(r >= 3 for r in ratios), f"SBF/DBF hash ratio min {min(ratios):.1f}, max {max(ratios):.1f}")


def test_criterion_6_single_filter_fpr(report):
    n, queries = 1000, 10_000
    params = derive_params(n, 0.5)
    expected = fpr_exact(params.m, params.k, n)
    rng = np.random.default_rng(2024)
    members = [rng.bytes(32) for _ in range(n)]
    probes = [rng.bytes(32) for _ in range(queries)]
    assert not set(members) & set(probes)

    salt = 77
    sbf = populate_standard(members, params, salt)
    pairs = [base_hashes(q, salt) for q in probes]
    idx = standard_index_matrix(
        np.array([p[0] for p in pairs], dtype=np.uint64), np.array([p[1] for p in pairs], dtype=np.uint64), params
    )
    observed_sbf = sbf.bits[idx].all(axis=1).mean()

    mapping = derive_mapping(pair_seed(digest(b"node-1"), digest(b"node-2")), params.k)
    dbf = populate_dbf(members, mapping, params)
    observed_dbf = dbf.bits[dbf_index_matrix(low64_array(probes), mapping.low64(), params.m)].all(axis=1).mean()

    ok = abs(observed_sbf - expected) <= 0.03 and abs(observed_dbf - expected) <= 0.03
    report(6, ok, f"expected {expected:.4f}, standard {observed_sbf:.4f}, distributed {observed_dbf:.4f}")


def test_criterion_7_network_miss(report):
    n, peers, queries = 1000, 5, 10_000
    params = derive_params(n, 0.5)
    expected = network_miss_probability(params.m, params.k, n, peers)
    rng = np.random.default_rng(7)
    members = [rng.bytes(32) for _ in range(n)]
    probes = low64_array([rng.bytes(32) for _ in range(queries)])
    self_id = digest(b"self")
    passing = np.ones(queries, dtype=bool)
    for p in range(peers):
        mapping = derive_mapping(pair_seed(self_id, digest(b"peer-%d" % p)), params.k)
        filt = populate_dbf(members, mapping, params)
        passing &= filt.bits[dbf_index_matrix(probes, mapping.low64(), params.m)].all(axis=1)
    observed = passing.mean()
    report(7, abs(observed - expected) <= 0.02, f"expected {expected:.4f}, observed {observed:.4f}")


def test_criterion_8_brute_force_reconciliation(report):
    rng = random.Random(8)
    mismatches = 0
    for _ in range(200):
        params, sender, receiver = random_instance(rng)
        assert params.m <= 32 and params.k <= 3 and len(sender) <= 10 and len(receiver) <= 10
        mapping = derive_mapping(pair_seed(rng.randbytes(32), rng.randbytes(32)), params.k)
        reduction = reduce_filters(populate_dbf(receiver, mapping, params), populate_dbf(sender, mapping, params))
        missing, _ = classify_indices(reduction)
        detected = resolve_indices(missing, sender, params, mapping=mapping) - receiver
        index_of = lambda e: scalar_dbf_indices(e, mapping, params.m)  # noqa: E731
        receiver_bits = {i for e in receiver for i in index_of(e)}
        covered = {e for e in sender - receiver if set(index_of(e)) <= receiver_bits}
        oracle = brute_force_detected(sender, receiver, index_of)
        if detected != oracle or detected != (sender - receiver) - covered:
            mismatches += 1
    report(8, mismatches == 0, f"{mismatches} mismatches over 200 random instances")


def _invariant_failures():
    failures = []
    rng = np.random.default_rng(9)

    params = FilterParams(257, 3)
    elements = [rng.bytes(32) for _ in range(200)]
    mapping = derive_mapping(pair_seed(digest(b"x"), digest(b"y")), 3)
    sbf = populate_standard(elements, params, 1)
    dbf = populate_dbf(elements, mapping, params)
    pairs = [base_hashes(e, 1) for e in elements]
    sbf_idx = standard_index_matrix(np.array([p[0] for p in pairs], np.uint64), np.array([p[1] for p in pairs], np.uint64), params)
    dbf_idx = dbf_index_matrix(low64_array(elements), mapping.low64(), params.m)
    if not (sbf.bits[sbf_idx].all() and dbf.bits[dbf_idx].all()):
        failures.append("false negative")

    a, b = rng.bytes(32), rng.bytes(32)
    if pair_seed(a, b) != pair_seed(b, a) or pair_seed(a, a).value != bytes(32):
        failures.append("pair seed symmetry")
    if reduce_filters(dbf, dbf).any():
        failures.append("self reduction")

    msgs = [
        FilterAnnounce.from_bits(a, 1, 0, 3, 200, dbf.bits),
        IndexRequest.of([5, 1, 9]),
        ElementTransfer(tuple(elements[:4])),
        SizeProbe(200),
    ]
    if any(decode_message(encode_message(m)) != m for m in msgs):
        failures.append("codec round trip")

    for preset in ("exp1-sbf", "exp1-dbf", "exp2-sbf", "exp2-dbf"):
        cfg = preset_config(preset, 0)
        state = init_state(cfg)
        union0 = np.logical_or.reduce([n.held for n in state.nodes])
        sizes = state.sizes()
        while state.round < cfg.max_rounds and min(sizes) < cfg.universe_size:
            state, _ = run_round(state)
            union = np.logical_or.reduce([n.held for n in state.nodes])
            new_sizes = state.sizes()
            if not np.array_equal(union, union0):
                failures.append(f"{preset} conservation at round {state.round}")
            if any(x > y for x, y in zip(sizes, new_sizes)):
                failures.append(f"{preset} monotonicity at round {state.round}")
            sizes = new_sizes
        first = run_experiment(cfg)
        if first.metrics != run_experiment(cfg).metrics:
            failures.append(f"{preset} determinism")
        if [n.held.tolist() for n in first.state.nodes] != [n.held.tolist() for n in state.nodes]:
            failures.append(f"{preset} stepwise run differs from run_experiment")
    return failures


def test_criterion_9_invariants(report):
    failures = _invariant_failures()
    report(9, not failures, "all invariants hold" if not failures else "; ".join(failures))


@pytest.mark.parametrize("preset", ["exp1-sbf", "exp1-dbf", "exp2-sbf", "exp2-dbf"])
def test_runs_within_time_limit(preset):
    assert _timing_ok(sweep(preset))
