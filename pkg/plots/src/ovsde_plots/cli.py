"""Batch figure renderer: ``ovsde-plots --figure <id> --in <csv...> --out <png>``.

Exit codes: 0 success, 1 failed containment check, 2 missing/malformed input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURES, ContainmentError, render
from .io import InputError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ovsde-plots",
        description="Render one figure from ovsde result files",
    )
    parser.add_argument("--figure", required=True, choices=sorted(FIGURES),
                        help="figure id")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        help="input CSV/JSON files, in the order the figure expects")
    parser.add_argument("--out", required=True, help="output PNG path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    if not out.parent.is_dir():
        print(f"error: output directory does not exist: {out.parent}", file=sys.stderr)
        return 2
    try:
        render(args.figure, args.inputs, out)
    except ContainmentError as exc:
        print(f"containment check failed: {exc}", file=sys.stderr)
        return 1
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
