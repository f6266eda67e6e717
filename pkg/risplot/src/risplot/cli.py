"""Command line wrapper around the figure renderer."""

import argparse
import logging
import sys

from . import __version__
from .figures import FIGURES, PlotError, PlotSpec, render


def _build_parser():
    p = argparse.ArgumentParser(
        prog="risplot",
        description="Render benchmark figures from sweep CSVs")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("input_csv", help="sweep results from the risce tool")
    p.add_argument("--figure", required=True, choices=sorted(FIGURES))
    p.add_argument("-o", "--output", required=True, dest="output_image",
                   help="PNG path to write")
    p.add_argument("--no-log-y", dest="log_y", action="store_false",
                   help="linear instead of logarithmic NMSE axis")
    return p


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    spec = PlotSpec(args.input_csv, args.figure, args.output_image,
                    args.log_y)
    try:
        out = render(spec)
    except PlotError as e:
        print(f"plot error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
