"""
Command-line interface.

    geoclip run <config.ini> [--seed N ...] [--out DIR] [--set section.key=value ...]
    geoclip sweep <config.ini> [--seeds 0..19] [--workers N] [--no-tune]
    geoclip accountant <sigma> <q> <T> <delta> [--curve out.csv] [--orders 2,4,8]
    geoclip gen-data <diabetes|breast_cancer|synthetic_regression|synthetic_classification|config.ini> <out.csv>

Exit status is 0 on success, 1 on a reported error and 2 on a usage error.
"""
from __future__ import annotations
import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .accountant import PrivacySpec, epsilon_curve, epsilon_of
from .core.config import config, update_config
from .core.errors import GeoClipError
from .core.utils import logger
from .data import BUNDLED, export_bundled, gen_synthetic_classification, gen_synthetic_regression
from .harness import emit, load_run_config, parse_seeds, sweep
from .harness.sweep import run_jobs
from .io.csv_loader import write_csv

GENERATORS = ("synthetic_regression", "synthetic_classification")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="Output directory (default: <output_dir>/<name>)")
    parser.add_argument("--workers", type=int, help="Worker processes")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
        help="Override a config key, e.g. --set run.learning_rate=0.5 (repeatable)",
    )
    parser.add_argument("--log-level", default=argparse.SUPPRESS, help="Logging level (default: INFO)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoclip", description="GeoClip DP-SGD benchmarks")
    parser.add_argument("--log-level", default=None, help="Logging level (default: INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Train one config for each of its seeds")
    run.add_argument("config", help="Run config (INI)")
    run.add_argument("--seed", type=int, action="append", help="Seed (repeatable; default: the config's)")
    _common(run)

    sw = sub.add_parser("sweep", help="Run every strategy x budget cell of a config")
    sw.add_argument("config", help="Run config (INI) with a [sweep] section")
    sw.add_argument("--seeds", help="Seeds, e.g. 0..19 or 0,1,2 (default: the config's)")
    sw.add_argument("--no-tune", action="store_true", help="Skip validation-split tuning")
    _common(sw)

    acct = sub.add_parser("accountant", help="Epsilon of T subsampled Gaussian releases")
    acct.add_argument("sigma", type=float, help="Noise multiplier")
    acct.add_argument("q", type=float, help="Poisson sampling rate")
    acct.add_argument("steps", type=int, help="Number of releases T")
    acct.add_argument("delta", type=float, help="Target delta")
    acct.add_argument("--curve", help="Also write the step,epsilon curve to this CSV")
    acct.add_argument("--orders", help="Comma-separated RDP orders (default: 1.25..64 step 0.25)")

    gen = sub.add_parser("gen-data", help="Write a benchmark dataset as CSV plus schema")
    gen.add_argument("spec", help=f"One of {', '.join(BUNDLED + GENERATORS)}, or a run config")
    gen.add_argument("out", help="Output CSV path")
    gen.add_argument("--seed", type=int, default=0, help="Generator seed (default: 0)")
    gen.add_argument("--n", type=int, help="Number of samples (generators only)")
    gen.add_argument("--p", type=int, help="Number of features (generators only)")
    return parser


def _out_dir(args, run_config) -> Path:
    if args.out:
        return Path(args.out)
    return Path(run_config.output_dir or config.output_dir) / run_config.name


def cmd_run(args) -> int:
    run_config = load_run_config(args.config, args.overrides)
    seeds = args.seed or list(run_config.seeds)
    workers = args.workers or run_config.workers
    records = run_jobs([(run_config, seed, "test") for seed in seeds], workers)
    emit(records, _out_dir(args, run_config))
    for record in records:
        final = record.final
        print(f"seed {record.seed}: {record.metric_name}={final.metric:.6g} epsilon={final.epsilon:.6g}")
    return 0


def cmd_sweep(args) -> int:
    run_config = load_run_config(args.config, args.overrides)
    seeds = parse_seeds(args.seeds) if args.seeds else None
    table = sweep(run_config, seeds=seeds, workers=args.workers, tune_first=not args.no_tune)
    emit(table.all_records(), _out_dir(args, run_config), table.tuning)
    for row in table.summary():
        print(f"{row.strategy:<20} {row.budget:<12} {row.metric:.6g} +/- {row.metric_std:.3g} "
              f"(sigma={row.sigma:.4g}, epsilon={row.epsilon:.4g}, seeds={row.seeds})")
    return 0


def cmd_accountant(args) -> int:
    orders = [float(a) for a in args.orders.split(",")] if args.orders else None
    spec = PrivacySpec(args.sigma, args.q, args.steps, args.delta)
    print(f"epsilon = {epsilon_of(spec, orders):.6g}")
    if args.curve:
        path = epsilon_curve(spec, orders=orders).to_csv(args.curve)
        logger.info(f"Wrote {path}")
    return 0


def cmd_gen_data(args) -> int:
    spec = args.spec
    if spec in BUNDLED:
        export_bundled(spec, args.out)
        return 0
    if spec.endswith(".ini"):
        data = load_run_config(spec).data
        if data.source in BUNDLED:
            export_bundled(data.source, args.out)
            return 0
        if data.source not in GENERATORS:
            raise GeoClipError(f"{spec}: data source {data.source!r} cannot be generated")
        spec, kwargs = data.source, dict(seed=data.seed, rho=data.rho, noise=data.noise)
        for key in ("n", "p", "corr_block"):
            if getattr(data, key) is not None:
                kwargs[key] = getattr(data, key)
    elif spec in GENERATORS:
        kwargs = dict(seed=args.seed)
    else:
        raise GeoClipError(f"unknown dataset spec {spec!r}; expected one of "
                           f"{', '.join(BUNDLED + GENERATORS)} or a .ini config")
    if args.n is not None:
        kwargs["n"] = args.n
    if args.p is not None:
        kwargs["p"] = args.p
        kwargs.setdefault("corr_block", min(args.p, 5 if spec == "synthetic_regression" else 50))
    generator = gen_synthetic_regression if spec == "synthetic_regression" else gen_synthetic_classification
    write_csv(generator(**kwargs), args.out)
    return 0


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "accountant": cmd_accountant,
    "gen-data": cmd_gen_data,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        try:
            update_config(log_level=args.log_level)
        except ValueError as e:
            print(f"error: {e}", file=sys.stderr)
            return 2
    try:
        return COMMANDS[args.command](args)
    except (GeoClipError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
