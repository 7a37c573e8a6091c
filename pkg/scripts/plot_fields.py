from __future__ import annotations

import argparse
from pathlib import Path

from nanoflow.viz.fields import render_fields


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Render contour snapshots from a cavity run.")
    parser.add_argument("--vtk", default="out/fields.vtk", help="Fields file (default: out/fields.vtk).")
    parser.add_argument(
        "--comparison",
        help="Fields of the run without thermophoresis (default: none).",
    )
    parser.add_argument("--output", default="out/fields.png", help="PNG path (default: out/fields.png).")
    parser.add_argument(
        "--fields",
        nargs="+",
        default=["speed", "phi"],
        help="Point-data fields to plot (default: speed phi).",
    )
    return parser.parse_args()


def main() -> None:
    args = parse_args()
    render_fields(
        Path(args.vtk),
        Path(args.output),
        comparison_vtk=Path(args.comparison) if args.comparison else None,
        fields=tuple(args.fields),
    )


if __name__ == "__main__":
    main()
