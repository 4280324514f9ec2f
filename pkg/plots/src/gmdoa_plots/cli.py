"""Command-line interface: render convergence figures from trace CSVs."""

import argparse
import math
import sys
from pathlib import Path

from .figure import plot_convergence

__all__ = ["build_parser", "main"]


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; route through the
    # single error path instead so every malformed input exits 1
    def error(self, message):
        raise ValueError(message)


def _parse_truth(text):
    tokens = [tok.strip() for tok in text.split(",") if tok.strip()]
    try:
        values = [float(tok) for tok in tokens]
    except ValueError:
        raise ValueError(f"invalid --truth value: '{text}'") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise ValueError(f"invalid --truth value: '{text}'")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="gmdoa-plot",
        description="Render DOA-convergence figures from trace CSV files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    plot = sub.add_parser(
        "plot", help="draw one figure from one or more trace CSVs"
    )
    plot.add_argument(
        "--traces",
        nargs="+",
        type=Path,
        required=True,
        help="trace CSV files produced by the estimation harness",
    )
    plot.add_argument(
        "--truth",
        required=True,
        help="true DOAs in degrees, comma separated (e.g. 60,100)",
    )
    plot.add_argument(
        "--out", type=Path, required=True, help="output PNG path"
    )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        truth = _parse_truth(args.truth)
        plot_convergence(args.traces, truth, args.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0
