"""rtfigures: render simulator CSV outputs into PNG/SVG figures."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureDataError, FigureSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rtfigures",
        description="Render reverse-translation simulator results "
                    "(consumes the documented CSV contracts only).")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--input", action="append", required=True,
                        help="input CSV (repeatable)")
    parser.add_argument("--output", required=True,
                        help="output image path (.png or .svg)")
    args = parser.parse_args(argv)
    try:
        render(FigureSpec(kind=args.kind, inputs=args.input,
                          output=args.output))
    except FigureDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
