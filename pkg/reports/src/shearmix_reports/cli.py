"""report: render figures from a shearmix run directory.

Exit codes: 0 on success, 1 for missing or schema-invalid artifacts
(including config-hash mismatches), 2 for bad command lines (argparse).
"""
from __future__ import annotations

import argparse
import sys

from .artifacts import HashMismatchError, SchemaError
from .render import render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="report",
        description="render vector figures from shearmix CSV/JSON artifacts")
    parser.add_argument("run_dir", help="directory holding the artifacts")
    parser.add_argument("--which", default="all",
                        choices=("lyapunov", "correlations", "mix", "drift",
                                 "all"))
    parser.add_argument("--out", default=None,
                        help="figure directory (default <run_dir>_figures)")
    args = parser.parse_args(argv)
    try:
        paths = render(args.run_dir, args.which, args.out)
    except (SchemaError, HashMismatchError, FileNotFoundError) as exc:
        print("report error: %s" % exc, file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
