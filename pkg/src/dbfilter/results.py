"""CSV rows and summaries of simulation runs."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

from .sim import ExperimentResult, SimConfig

COLUMNS = (
    "run_id",
    "preset",
    "rng_seed",
    "round",
    "converged_nodes",
    "median_set_size",
    "total_bits_sent",
    "hash_invocations",
    "elements_transferred",
)


@dataclass(frozen=True)
class ResultRow:
    run_id: str
    preset: str
    rng_seed: int
    round: int
    converged_nodes: int
    median_set_size: int
    total_bits_sent: int
    hash_invocations: int
    elements_transferred: int


def run_id(config: SimConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def result_rows(result: ExperimentResult, preset: str) -> list[ResultRow]:
    rid = run_id(result.config)
    return [
        ResultRow(rid, preset, result.config.rng_seed, **asdict(m))
        for m in result.metrics
    ]


def write_csv(rows: Iterable[ResultRow], path) -> None:
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([getattr(row, c) for c in COLUMNS])


def read_csv(path) -> list[ResultRow]:
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            ResultRow(**{c: (r[c] if c in ("run_id", "preset") else int(r[c])) for c in COLUMNS})
            for r in reader
        ]


def summarize(rows: list[ResultRow]) -> dict:
    """Final-round state and run totals for the rows of a single run."""
    if not rows:
        raise ValueError("no rows")
    last = max(rows, key=lambda r: r.round)
    return {
        "run_id": last.run_id,
        "preset": last.preset,
        "rng_seed": last.rng_seed,
        "rounds": last.round,
        "converged_nodes": last.converged_nodes,
        "median_set_size": last.median_set_size,
        "total_bits_sent": sum(r.total_bits_sent for r in rows),
        "hash_invocations": sum(r.hash_invocations for r in rows),
        "elements_transferred": sum(r.elements_transferred for r in rows),
    }


def group_runs(rows: Iterable[ResultRow]) -> dict[tuple[str, str, int], list[ResultRow]]:
    """Rows grouped by (preset, run_id, rng_seed), each group sorted by round."""
    runs: dict[tuple[str, str, int], list[ResultRow]] = {}
    for r in rows:
        runs.setdefault((r.preset, r.run_id, r.rng_seed), []).append(r)
    return {key: sorted(group, key=lambda r: r.round) for key, group in sorted(runs.items())}
