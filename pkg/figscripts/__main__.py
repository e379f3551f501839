#!/usr/bin/env python3
"""Command line entry: one subcommand per figure id.

    python -m figscripts fig9 --input runs/fig9 --out figures

--input is the output directory of the matching `reproduce` target.
Exit codes: 0 on success, 2 on any input or schema problem.
"""

import argparse
import sys

from figscripts.figures import BUILDERS, FigureError, render


def build_parser():
    ap = argparse.ArgumentParser(prog="figscripts",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="figure_id", required=True)
    for figure_id, builder in sorted(BUILDERS.items()):
        sp = sub.add_parser(figure_id, help=builder.__doc__.splitlines()[0])
        sp.add_argument("--input", required=True,
                        help="reproduce-target output directory")
        sp.add_argument("--out", default="figures",
                        help="directory for the image files")
        sp.add_argument("--formats", default="png,svg",
                        help="comma-separated image formats")
        sp.add_argument("--dpi", type=int, default=150)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    formats = tuple(f for f in args.formats.split(",") if f)
    try:
        spec = BUILDERS[args.figure_id](args.input)
        written = render(spec, args.out, formats=formats, dpi=args.dpi)
    except (FigureError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
