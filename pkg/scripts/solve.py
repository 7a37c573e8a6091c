from __future__ import annotations

import argparse
import sys
from pathlib import Path

from nanoflow.app import run
from nanoflow.config import MeshSpec, NewtonConfig, RunConfig, resolve_params
from nanoflow.constants import MMS_BASE_N, TABLE_BASE_NX, TABLE_BASE_NY

# command-line flag -> ModelParams field
PARAM_FLAGS = {
    "Re": "Re",
    "Pr": "Pr",
    "Sc": "Sc",
    "Scf": "Sc_f",
    "Le": "Le",
    "Nbt": "N_BT",
    "T0": "T0",
    "beta": "beta",
    "phi_m": "phi_m",
    "cutoff_R": "cutoff_radius",
}


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Solve the stationary nanofluid system or run a convergence study.")
    parser.add_argument("--case", choices=["cavity", "mms", "eoc"], default="cavity", help="Problem to run (default: cavity).")
    parser.add_argument("--nx", type=int, help="Coarse grid cells in x (default: 16 for cavity/eoc, 8 for mms).")
    parser.add_argument("--ny", type=int, help="Coarse grid cells in y (default: 8 for cavity/eoc, 8 for mms).")
    parser.add_argument("--refine", type=int, default=0, help="Uniform refinements of the coarse grid.")
    parser.add_argument("--levels", type=int, default=4, help="Study levels for mms/eoc (default: 4).")
    parser.add_argument("--reference-gap", type=int, default=2, help="Levels between finest study mesh and reference.")
    parser.add_argument("--degree", type=int, choices=[1, 2], default=2, help="Polynomial degree of phi and T.")
    parser.add_argument("--flavor", choices=["trigonometric", "polynomial"], default="trigonometric", help="MMS exact solution.")
    parser.add_argument("--param-file", help="Text file with 'key = value' model parameters.")
    parser.add_argument("--Re", type=float)
    parser.add_argument("--Pr", type=float)
    parser.add_argument("--Sc", type=float)
    parser.add_argument("--Scf", type=float)
    parser.add_argument("--Le", type=float)
    parser.add_argument("--Nbt", type=float)
    parser.add_argument("--T0", type=float)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--phi-m", dest="phi_m", type=float)
    parser.add_argument("--cutoff-R", dest="cutoff_R", type=float, help="Cut-off radius of the thermophoretic flux.")
    parser.add_argument("--no-thermophoresis", action="store_true", help="Drop the thermophoretic coupling.")
    parser.add_argument("--compare", action="store_true", help="Cavity: also solve without thermophoresis.")
    parser.add_argument("--newton-tol", type=float, default=1e-10, help="Absolute residual tolerance.")
    parser.add_argument("--max-newton", type=int, default=25, help="Newton iterations per stage.")
    parser.add_argument("--ramp", type=int, default=1, help="Continuation stages towards the target parameters.")
    parser.add_argument("--verbose", action="store_true", help="Print every Newton iteration.")
    parser.add_argument("--out", default="out", help="Output directory (default: out).")
    parser.add_argument("--sequential", action="store_true", help="Single-threaded, bitwise reproducible assembly.")
    parser.add_argument("--png", action="store_true", help="Cavity: render field snapshots.")
    return parser.parse_args(argv)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cli = {field: getattr(args, flag) for flag, field in PARAM_FLAGS.items()}
    case, params = resolve_params(
        args.case,
        Path(args.param_file) if args.param_file else None,
        cli,
        thermophoresis=not args.no_thermophoresis,
    )
    default_nx, default_ny = (MMS_BASE_N, MMS_BASE_N) if case == "mms" else (TABLE_BASE_NX, TABLE_BASE_NY)
    return RunConfig(
        case=case,
        mesh=MeshSpec(nx=args.nx or default_nx, ny=args.ny or default_ny, refine=args.refine),
        params=params,
        newton=NewtonConfig(
            abs_tol=args.newton_tol,
            max_iters=args.max_newton,
            ramp_steps=args.ramp,
            verbose=args.verbose,
        ),
        out_dir=Path(args.out),
        scalar_degree=args.degree,
        levels=args.levels,
        reference_gap=args.reference_gap,
        mms_flavor=args.flavor,
        compare_thermophoresis=args.compare,
        sequential=args.sequential,
        emit_png=args.png,
    )


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    try:
        config = config_from_args(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"✖ {exc}", file=sys.stderr)
        return 2
    try:
        return run(config)
    except ValueError as exc:
        print(f"✖ {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"✖ {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
