"""Command-line entry points: run one experiment or compare algorithms.

Exit codes: 0 on success, 1 on validation/config errors, 2 on numeric
failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .exceptions import NumericError, ValidationError
from .harness import (
    ALGORITHMS,
    SEARCH_MODES,
    compare_runs,
    default_config,
    emit_trace,
    load_config,
    run_experiment,
    write_comparison_csv,
)


class _ArgumentParser(argparse.ArgumentParser):
    # Map bad CLI usage onto the validation exit code instead of
    # argparse's default exit(2).
    def error(self, message):
        raise ValidationError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="gmdoa",
        description=(
            "Maximum-likelihood DOA estimation in Gaussian mixture noise "
            "with alternating EM solvers."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser(
        "run", help="run one experiment and write its trace CSV"
    )
    run.add_argument(
        "--config",
        type=Path,
        help="YAML config; omitted fields fall back to built-in defaults",
    )
    run.add_argument("--algorithm", choices=ALGORITHMS)
    run.add_argument("--search", choices=SEARCH_MODES)
    run.add_argument("--iters", type=int, help="iteration budget")
    run.add_argument("--seed", type=int, help="noise synthesis seed")
    run.add_argument("--out", type=Path, required=True, help="trace CSV path")

    compare = sub.add_parser(
        "compare",
        help="run both algorithms over consecutive seeds, write a summary CSV",
    )
    compare.add_argument("--config", type=Path)
    compare.add_argument(
        "--seeds", type=int, default=1, help="number of consecutive seeds"
    )
    compare.add_argument("--out", type=Path, required=True)
    return parser


def _base_config(args):
    return load_config(args.config) if args.config else default_config()


def _cmd_run(args) -> None:
    config = _base_config(args)
    overrides = {}
    if args.algorithm is not None:
        overrides["algorithm"] = args.algorithm
    if args.search is not None:
        overrides["search"] = args.search
    if args.iters is not None:
        overrides["iterations"] = args.iters
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        config = config.with_overrides(**overrides)
    trace, estimate = run_experiment(config)
    emit_trace(trace, args.out)
    final = trace.final()
    doas = ", ".join(f"{x:.4f}" for x in final.doas_deg)
    print(
        f"wrote {args.out} ({len(trace.rows)} rows); "
        f"final DOAs [deg]: {doas}; loglik {final.loglik:.6f}"
    )


def _cmd_compare(args) -> None:
    if args.seeds < 1:
        raise ValidationError("--seeds must be at least 1")
    config = _base_config(args)
    results = []
    for i in range(args.seeds):
        results.append(compare_runs(config.with_overrides(seed=config.seed + i)))
    write_comparison_csv(results, args.out)
    print(f"wrote {args.out} ({len(results)} seeds)")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            _cmd_run(args)
        else:
            _cmd_compare(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
