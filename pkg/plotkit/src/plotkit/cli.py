"""Command-line figure rendering: mixphase-plot --kind K --in FILE --out FILE.png"""

from __future__ import annotations

import argparse
import json
import sys

from .figures import FIGURE_KINDS, FigureSpec, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mixphase-plot",
        description="Render diagnostic figures from mixphase metrics/sweep CSVs.",
    )
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="FILE", help="input CSV; repeat for overlays")
    parser.add_argument("--out", required=True, metavar="FILE.png")
    parser.add_argument("--title", default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        out = render(FigureSpec(args.kind, args.inputs, args.out, title=args.title))
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
