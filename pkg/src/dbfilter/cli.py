"""Command-line entry point: ``dbfilter {run,sweep,fpr,params,chart}``.

Exit codes: 0 success, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import nullcontext

from .bloom import derive_params, fpr_exact, network_miss_probability
from .chart import render_chart
from .hashing import DIGEST_FUNCTION, HASH64_FUNCTION
from .presets import PRESETS, preset_config
from .results import group_runs, read_csv, result_rows, summarize, write_csv
from .sim import SimConfig, run_experiment

EXIT_USAGE = 2
EXIT_IO = 3

log = logging.getLogger("dbfilter")


class UsageError(Exception):
    pass


# flag dest -> SimConfig field
OVERRIDE_FLAGS = {
    "nodes": "num_nodes",
    "degree": "out_degree",
    "universe": "universe_size",
    "subset": "initial_subset_size",
    "fpr": "p_target",
    "rounds": "max_rounds",
    "seed_mode": "seed_mode",
    "push_surplus": "push_surplus",
    "delivery": "delivery",
}


def _seed_range(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a..b or a,b,c, got {text!r}") from None


def _add_overrides(p: argparse.ArgumentParser):
    p.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p.add_argument("--config", help="JSON file with SimConfig fields; flags take precedence")
    p.add_argument("--nodes", type=int)
    p.add_argument("--degree", type=int)
    p.add_argument("--universe", type=int)
    p.add_argument("--subset", type=int)
    p.add_argument("--fpr", type=float)
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed-mode", choices=["pair_static", "per_interaction"])
    p.add_argument("--push-surplus", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--delivery", choices=["end_of_round", "immediate"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dbfilter", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one preset")
    _add_overrides(run)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default="results.csv")
    run.add_argument("--chart", help="also write an SVG convergence chart")
    run.add_argument("--trace", help="write length-prefixed encoded messages to this file")

    sweep = sub.add_parser("sweep", help="run a preset over a range of seeds")
    _add_overrides(sweep)
    sweep.add_argument("--seeds", type=_seed_range, default=_seed_range("0..9"))
    sweep.add_argument("--out", default="sweep.csv")
    sweep.add_argument("--jobs", type=int, default=1)

    fpr = sub.add_parser("fpr", help="false positive probability of one or N filters")
    fpr.add_argument("--m", type=int, required=True)
    fpr.add_argument("--k", type=int, required=True)
    fpr.add_argument("--n", type=int, required=True)
    fpr.add_argument("--peers", type=int)

    params = sub.add_parser("params", help="size a filter for n elements")
    params.add_argument("--n", type=int, required=True)
    params.add_argument("--p", type=float, required=True)

    chart = sub.add_parser("chart", help="render a results CSV as SVG")
    chart.add_argument("--in", dest="infile", required=True)
    chart.add_argument("--out", required=True)
    return parser


def config_from_args(args, rng_seed: int) -> SimConfig:
    fields = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                fields = json.load(fh)
        except ValueError as exc:
            raise UsageError(f"{args.config}: {exc}") from exc
        if not isinstance(fields, dict):
            raise UsageError(f"{args.config}: expected a JSON object")
    for flag, name in OVERRIDE_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            fields[name] = value
    fields.pop("rng_seed", None)
    try:
        return preset_config(args.preset, rng_seed, **fields)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _execute(job):
    preset, config = job
    return result_rows(run_experiment(config), preset)


def _print_summary(s: dict):
    print(
        f"{s['preset']} seed={s['rng_seed']} rounds={s['rounds']} "
        f"converged={s['converged_nodes']} median={s['median_set_size']} "
        f"bits_sent={s['total_bits_sent']} hashes={s['hash_invocations']} "
        f"elements_transferred={s['elements_transferred']}"
    )


def cmd_run(args) -> int:
    config = config_from_args(args, args.seed)
    with open(args.trace, "wb") if args.trace else nullcontext() as trace:
        result = run_experiment(config, trace=trace)
    rows = result_rows(result, args.preset)
    write_csv(rows, args.out)
    if args.chart:
        with open(args.chart, "w", encoding="utf-8") as fh:
            fh.write(render_chart(rows, title=args.preset))
    print(f"# digest={DIGEST_FUNCTION} hash64={HASH64_FUNCTION} run_id={rows[0].run_id}")
    _print_summary(summarize(rows))
    return 0


def cmd_sweep(args) -> int:
    jobs = [(args.preset, config_from_args(args, seed)) for seed in args.seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            batches = list(pool.map(_execute, jobs))
    else:
        batches = [_execute(j) for j in jobs]
    rows = sorted((r for b in batches for r in b), key=lambda r: (r.rng_seed, r.round))
    write_csv(rows, args.out)
    print(f"# digest={DIGEST_FUNCTION} hash64={HASH64_FUNCTION}")
    for group in group_runs(rows).values():
        _print_summary(summarize(group))
    return 0


def cmd_fpr(args) -> int:
    try:
        if args.peers is None:
            value = fpr_exact(args.m, args.k, args.n)
        else:
            value = network_miss_probability(args.m, args.k, args.n, args.peers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(repr(value))
    return 0


def cmd_params(args) -> int:
    try:
        params = derive_params(args.n, args.p)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(f"m={params.m} k={params.k} fpr={fpr_exact(params.m, params.k, args.n)!r}")
    return 0


def cmd_chart(args) -> int:
    try:
        rows = read_csv(args.infile)
        svg = render_chart(rows)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "fpr": cmd_fpr, "params": cmd_params, "chart": cmd_chart}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"dbfilter: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"dbfilter: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
