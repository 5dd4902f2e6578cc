"""render: turn an engine CSV bundle directory into a figure image."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .csvio import RenderError
from .job import PlotJob
from .render import REGISTRY, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render a CSV figure bundle to SVG or PNG.",
    )
    parser.add_argument("--figure", required=True, help="bundle name, e.g. fig6")
    parser.add_argument(
        "--in", dest="in_dir", required=True, type=Path, help="directory holding the CSVs"
    )
    parser.add_argument("--out", required=True, type=Path, help="output image (.svg or .png)")
    parser.add_argument("--no-annotate", action="store_true", help="skip feature overlays")
    parser.add_argument("--log-y", action="store_true", help="log scale where supported")
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument("--list", action="store_true", help="list known figures and exit")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list:
        for name, spec in sorted(REGISTRY.items()):
            print(f"{name}: {', '.join(spec.files)}")
        return 0
    if args.figure not in REGISTRY:
        print(
            f"unknown figure {args.figure!r}; known: {', '.join(sorted(REGISTRY))}",
            file=sys.stderr,
        )
        return 2
    if not args.in_dir.is_dir():
        print(f"not a directory: {args.in_dir}", file=sys.stderr)
        return 2
    job = PlotJob(
        figure=args.figure,
        inputs=[args.in_dir / name for name in REGISTRY[args.figure].files],
        output=args.out,
        log_y=args.log_y,
        annotate=not args.no_annotate,
        dpi=args.dpi,
    )
    try:
        out = render(job)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
