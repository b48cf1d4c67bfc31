"""Command-line entry point for the figure renderer."""

import argparse
import sys

from .render import FigureSpec, RenderError, render_figures


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="mpmab-plot",
        description="Render three-panel benchmark figures from summary.csv",
    )
    parser.add_argument("--csv", required=True, help="results table path")
    parser.add_argument("--v", required=True, type=int,
                        help="subpar-arm count to plot")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--format", choices=("png", "svg"), default="png")
    parser.add_argument("--algorithms", nargs="*", default=(),
                        help="algorithm subset and display order")
    args = parser.parse_args(argv)
    spec = FigureSpec(csv_path=args.csv, v=args.v, out_dir=args.out,
                      image_format=args.format,
                      algorithms=tuple(args.algorithms))
    try:
        paths = render_figures(spec)
    except (RenderError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
