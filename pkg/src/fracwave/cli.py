from __future__ import annotations

"""
Command-line interface for fracwave.

Every subcommand validates a config, runs one diagnostic (or the whole
acceptance suite) and writes a report bundle.

Typical usage
-------------

Integrate the configured scenario and tabulate its energy:

    fracwave simulate --config configs/cubic_1d.yaml --out results/cubic

Fit the dissipation rate, run the cluster sweep, ...:

    fracwave decay-fit --config configs/linear_cube.yaml --out results/decay
    fracwave cluster --config configs/linear_cube.yaml --out results/cluster

Run the acceptance suite (exit status 1 on any failed criterion):

    fracwave verify-all --config configs/cubic_1d.yaml --out results/verify

Exit status
-----------
0 success, 1 acceptance or runtime failure, 2 configuration error,
3 numerical failure (blow-up guard / step refinement exhausted).
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .acceptance import run_acceptance
from .api import RUNNERS, finish_run, run_diagnostics, start_run
from .config import RunConfig, load_run_config
from .core import RunContext
from .exceptions import ConfigLoadError, FracwaveError, NumericalRangeError, StepFailure
from .ids import generate_run_id
from .tools.export import write_table

logger = logging.getLogger("fracwave")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


# ---------------------------------------------------------------------------
# Common arguments
# ---------------------------------------------------------------------------


def _add_common_args(parser: argparse.ArgumentParser) -> None:
    """
    Arguments shared by every subcommand.
    """
    parser.add_argument(
        "--config",
        type=str,
        default=None,
        help="Path to a YAML/JSON/INI config file (built-in defaults if omitted).",
    )
    parser.add_argument(
        "--out",
        type=str,
        default=None,
        help='Bundle directory (default: "results/<run_id>").',
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="RNG seed; overrides [run] seed.",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker threads for ensembles (speed only, never results).",
    )
    parser.add_argument(
        "--quick",
        action="store_true",
        help="Shrink problem sizes for smoke runs (not for acceptance claims).",
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Log progress at DEBUG level on stderr.",
    )


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _out_dir(args: argparse.Namespace, config: RunConfig) -> Path:
    if args.out:
        return Path(args.out)
    return Path("results") / generate_run_id(config.data, prefix=args.command)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _execute(args: argparse.Namespace, config: RunConfig, body) -> int:
    """
    Open the bundle, run ``body(ctx)`` and map failures onto exit codes.
    ``body`` returns the exit code of a successful run.
    """
    try:
        ctx = start_run(
            config, _out_dir(args, config), args.command, threads=args.threads, source=args.config
        )
    except FracwaveError as e:
        print(f"fracwave: {e}", file=sys.stderr)
        return EXIT_FAILED

    try:
        code = body(ctx)
    except (StepFailure, NumericalRangeError) as e:
        window = getattr(e, "window", None)
        where = f" in window {window}" if window else ""
        print(f"fracwave: numerical failure{where}: {e}", file=sys.stderr)
        finish_run(ctx, "numerical_failure")
        return EXIT_NUMERICAL
    except FracwaveError as e:
        print(f"fracwave: {e}", file=sys.stderr)
        finish_run(ctx, "failed")
        return EXIT_FAILED

    finish_run(ctx, "done" if code == EXIT_OK else "failed")
    print(str(ctx.paths.root))
    return code


def _cmd_diagnostic(args: argparse.Namespace, config: RunConfig) -> int:
    """
    Run the single diagnostic named by the subcommand.
    """
    def body(ctx: RunContext) -> int:
        run_diagnostics(ctx, [args.command])
        return EXIT_OK

    return _execute(args, config, body)


def _cmd_verify_all(args: argparse.Namespace, config: RunConfig) -> int:
    """
    Run the configured outputs, then the acceptance suite.
    """
    def body(ctx: RunContext) -> int:
        run_diagnostics(ctx, list(config.outputs))
        rows = run_acceptance(config.seed, quick=config.quick, threads=ctx.threads, metrics=ctx.logger)
        write_table(
            ctx.paths.table("acceptance"),
            [("criterion", "1"), ("name", ""), ("unit", ""), ("measured", "criterion unit"),
             ("relation", ""), ("threshold", "criterion unit"), ("passed", "")],
            [tuple(r) for r in rows],
        )
        for r in rows:
            ctx.summary[f"acceptance.{r.number}.{r.name}.measured"] = r.measured
            key = f"acceptance.{r.number}.passed"
            ctx.summary[key] = ctx.summary.get(key, True) and r.passed
        passed = all(r.passed for r in rows)
        ctx.summary["acceptance.passed"] = passed
        return EXIT_OK if passed else EXIT_FAILED

    return _execute(args, config, body)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracwave",
        description="Simulate fractionally damped semilinear wave equations and verify their estimates.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    helps = {
        "simulate": "Integrate the scenario; table of E, E1 norms and energy-identity residual.",
        "decay-fit": "Fit the dissipation envelope for rescaled initial data.",
        "strichartz": "Per-window L5L10 norms under periodic forcing pulses.",
        "cluster": "Spectral-cluster L5 quotients against the Sobolev ceiling.",
        "smoothing": "Short-time blow-up exponent of the E1 norm.",
        "squeeze": "Squeezing constant over pairs in the absorbing set.",
        "attractor": "Absorbing radius, attractor sample and box-counting dimension.",
    }
    for name in RUNNERS:
        p = subparsers.add_parser(name, help=helps[name])
        _add_common_args(p)
        p.set_defaults(func=_cmd_diagnostic)

    p_verify = subparsers.add_parser(
        "verify-all",
        help="Run the configured outputs and the full acceptance suite.",
    )
    _add_common_args(p_verify)
    p_verify.set_defaults(func=_cmd_verify_all)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)

    if args.threads is not None and args.threads < 1:
        print("fracwave: config error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = load_run_config(args.config, seed=args.seed, quick=True if args.quick else None)
    except ConfigLoadError as e:
        print(f"fracwave: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(args, config)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
