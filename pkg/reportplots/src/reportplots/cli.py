"""Command line entry point: ``report-plots --in <dir> --out <dir>``."""

from __future__ import annotations

import argparse
import sys

from .render import render_all
from .schemas import SchemaError


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="report-plots",
        description="Render robust-shadows panel CSVs into static figures.",
    )
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="directory holding panel_*.csv bundles")
    parser.add_argument("--out", dest="out_dir", required=True,
                        help="directory to write PNG panels into")
    args = parser.parse_args(argv)

    try:
        summaries = render_all(args.in_dir, args.out_dir)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    for stem in sorted(summaries):
        print(summaries[stem]["out"])
    return 0


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
