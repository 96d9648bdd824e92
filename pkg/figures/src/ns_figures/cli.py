"""render: batch figure generation from simulation CSV artifacts."""

import argparse
import sys

from .render import KINDS, FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="Render figures from congested-ns CSV artifacts"
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="inputs", required=True, action="append",
                        help="input CSV (repeatable)")
    parser.add_argument("--out", required=True, help="output image (.svg or .png)")
    parser.add_argument("--speed", type=float, default=None,
                        help="overlay slope for the interface figure")
    args = parser.parse_args(argv)
    try:
        render(FigureSpec(kind=args.kind, inputs=tuple(args.inputs),
                          output=args.out, speed=args.speed))
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
