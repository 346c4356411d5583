"""Command-line experiment runner.

Usage::

    twinshift <scenario> [--config FILE] [--seed N] [--trials N]
              [--out PATH] [--format csv|json] [--paper-scale] [--workers N]

The master seed falls back to the TWINSHIFT_SEED environment variable when
``--seed`` is absent; config-file values override the scenario defaults and
CLI flags override both.
"""

from __future__ import annotations

import argparse
import os
import sys

from .experiments import (
    SCENARIOS,
    ConfigError,
    ExperimentResult,
    apply_overrides,
    default_config,
    emit_results,
    load_config_file,
    run_experiment,
)

SEED_ENV_VAR = "TWINSHIFT_SEED"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinshift",
        description="Twin-resolution hybrid precoding Monte-Carlo experiments",
    )
    sub = parser.add_subparsers(dest="scenario", required=True, metavar="scenario")
    for scenario in SCENARIOS:
        p = sub.add_parser(scenario, help=f"run the {scenario} scenario")
        p.add_argument("--config", help="YAML config file overriding scenario defaults")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--trials", type=int, default=None, help="Monte-Carlo trial count")
        p.add_argument("--out", default=None, help="output path (default <scenario>.<fmt>)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument(
            "--paper-scale",
            action="store_true",
            help="use the full published dimensions instead of desk scale",
        )
        p.add_argument("--workers", type=int, default=None, help="parallel trial workers")
        p.add_argument("--quiet", action="store_true", help="suppress the summary table")
    return parser


def config_from_args(args: argparse.Namespace):
    cfg = default_config(args.scenario, paper_scale=args.paper_scale)
    if args.config:
        cfg = apply_overrides(cfg, load_config_file(args.config))
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    elif os.environ.get(SEED_ENV_VAR):
        try:
            overrides["master_seed"] = int(os.environ[SEED_ENV_VAR])
        except ValueError as exc:
            raise ConfigError(
                f"{SEED_ENV_VAR} must be an integer, got {os.environ[SEED_ENV_VAR]!r}"
            ) from exc
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.workers is not None:
        overrides["workers"] = args.workers
    return apply_overrides(cfg, overrides).validate()


def print_summary(result: ExperimentResult, stream=None) -> None:
    stream = stream if stream is not None else sys.stdout
    header = f"{'arch':<18} {'sweep':<8} {'value':>8} {'n':>4} {'rate':>10} {'95% CI':>23}"
    print(header, file=stream)
    for row in result.aggregates:
        ci = f"[{row.rate_ci_low:9.4f}, {row.rate_ci_high:9.4f}]"
        print(
            f"{row.arch:<18} {row.sweep_name:<8} {row.sweep_value:8.2f} "
            f"{row.n:>4} {row.rate_mean:10.4f} {ci:>23}",
            file=stream,
        )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, OSError) as exc:
        parser.error(str(exc))
        return 2  # unreachable; parser.error exits
    result = run_experiment(cfg)
    out = args.out or f"{args.scenario}.{args.format}"
    try:
        emit_results(result.records, out, args.format)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not args.quiet:
        print_summary(result)
        print(f"wrote {len(result.records)} records to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
