"""Command line entry: render one figure or a whole report directory.

    curvflow-render render --in report.json --kind eoc --out fig.svg
    curvflow-render render-all --in reports/ [--out figures/] [--fmt svg]

Exit codes: 0 ok, 2 usage error, 3 unsupported report schema.
"""

from __future__ import annotations

import argparse
import sys

from .render import FigureSpec, SchemaError, render, render_all

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SCHEMA = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvflow-render")
    subs = parser.add_subparsers(dest="command")

    p = subs.add_parser("render", help="render one figure from a report")
    p.add_argument("--in", dest="input_path", required=True)
    p.add_argument("--kind", required=True,
                   choices=["eoc", "contraction", "admissibility", "eps-sweep"])
    p.add_argument("--out", dest="output_path", required=True)

    p = subs.add_parser("render-all", help="render every recognized report in a directory")
    p.add_argument("--in", dest="input_dir", required=True)
    p.add_argument("--out", dest="output_dir", default=None)
    p.add_argument("--fmt", default="svg", choices=["svg", "png"])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage()
        return EXIT_USAGE
    try:
        if args.command == "render":
            meta = render(FigureSpec(args.input_path, args.kind, args.output_path))
            print(f"wrote {args.output_path}: {meta}")
        else:
            out = render_all(args.input_dir, args.output_dir, fmt=args.fmt)
            print(f"rendered {len(out['rendered'])} figure(s), "
                  f"skipped {len(out['skipped'])}, index at {out['index']}")
        return EXIT_OK
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
