from __future__ import annotations

import argparse
from pathlib import Path

from nanoflow.export import write_mesh_dump
from nanoflow.mesh import build_rectangle, refine


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Write a structured rectangle mesh as plain text.")
    parser.add_argument("--width", type=float, default=2.0, help="Domain width (default: 2).")
    parser.add_argument("--height", type=float, default=1.0, help="Domain height (default: 1).")
    parser.add_argument("--nx", type=int, default=16, help="Cells in x (default: 16).")
    parser.add_argument("--ny", type=int, default=8, help="Cells in y (default: 8).")
    parser.add_argument("--refine", type=int, default=0, help="Uniform refinements (default: 0).")
    parser.add_argument("--output", default="out/mesh.txt", help="Output path (default: out/mesh.txt).")
    return parser.parse_args()


def main() -> None:
    args = parse_args()
    mesh = refine(build_rectangle(args.width, args.height, args.nx, args.ny), args.refine)
    write_mesh_dump(mesh, Path(args.output))


if __name__ == "__main__":
    main()
