"""Standalone chart renderer for experiment results files.

Usage: plot --results results.jsonl --metric ma_err --out charts/ --format png
"""

from __future__ import annotations

import argparse
import sys

from .render import PlotError, PlotSpec, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot", description="Render metric-vs-noise charts from a results file."
    )
    parser.add_argument("--results", required=True, help="JSON-lines results file")
    parser.add_argument(
        "--metric",
        choices=["ma_err", "accuracy", "all"],
        default="all",
        help="which metric to draw (default: all)",
    )
    parser.add_argument("--groups", default=None, help="comma-separated group filter")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--format", default="png", help="image format (png, svg, pdf)")
    args = parser.parse_args(argv)

    spec = PlotSpec(
        results_path=args.results,
        metric=None if args.metric == "all" else args.metric,
        groups=tuple(g.strip() for g in args.groups.split(",")) if args.groups else None,
        out_dir=args.out,
        image_format=args.format,
    )
    try:
        written = render(spec)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
