from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

from tqdm import tqdm

from .analysis import (
    LevelSolution,
    check_study,
    constraint_defects,
    measure_errors,
    mesh_quality,
    solve_levels,
    thermophoresis_diagnostics,
)
from .assembly import Discretization, FieldState, discretize
from .config import RunConfig
from .export import write_eoc_csv, write_error_csv, write_report, write_vtk
from .manufactured import make_mms
from .mesh import build_rectangle, refine
from .model import CoefficientLaws, ModelParams, cavity_case, coefficients_alumina, coefficients_mild
from .solver import SolveReport, continuation_solve


def _params_entry(params: ModelParams) -> dict[str, object]:
    return asdict(params)


def _newton_entry(report: SolveReport) -> dict[str, object]:
    return {
        "converged": report.converged,
        "iterations": report.iterations,
        "residual_history": report.residual_history,
        "step_lengths": report.step_lengths,
        "backward_errors": report.backward_errors,
        "pivot_ratios": report.pivot_ratios,
        "phi_range": report.phi_range,
        "message": report.message,
        "failed_stage": report.stage,
    }


def _anomalies(params: ModelParams) -> list[str]:
    notes = []
    if params.Le < 0:
        notes.append(f"negative Lewis number Le={params.Le:g} used as given")
    return notes


def solve_cavity(
    config: RunConfig,
    laws: CoefficientLaws | None = None,
    thermophoresis: bool = True,
) -> tuple[Discretization, FieldState, SolveReport]:
    """Continuation solve of the heated cavity on the configured mesh."""

    case = cavity_case()
    mesh = refine(build_rectangle(case.width, case.height, config.mesh.nx, config.mesh.ny), config.mesh.refine)
    disc = discretize(mesh, case, scalar_degree=config.scalar_degree, workers=config.n_workers)
    params = config.params.updated(thermophoresis=thermophoresis and config.params.thermophoresis)
    state, report = continuation_solve(params, disc, laws or coefficients_alumina(), config.newton)
    return disc, state, report


def run_cavity(config: RunConfig, laws: CoefficientLaws | None = None) -> int:
    """
    Solve the cavity, write ``fields.vtk`` and ``report.txt`` and, on request, the
    run without thermophoresis for comparison. Returns the exit status.
    """

    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    laws = laws or coefficients_alumina()
    tqdm.write(f"Solving cavity on {config.mesh.nx}x{config.mesh.ny} grid, {config.mesh.refine} refinements.")

    disc, state, report = solve_cavity(config, laws)
    converged = report.converged
    entries: dict[str, object] = {
        "case": "cavity",
        "params": _params_entry(config.params),
        "mesh": mesh_quality(disc.mesh),
        "scalar_degree": config.scalar_degree,
        "newton": _newton_entry(report),
        "anomalies": _anomalies(config.params),
    }
    files: list[Path] = []
    if converged:
        entries["constraints"] = constraint_defects(disc, state, config.params)
        entries["diagnostics"] = thermophoresis_diagnostics(disc, state)
    if config.emit_vtk:
        files.append(write_vtk(out / "fields.vtk", disc, state, refined=True))

    if config.compare_thermophoresis:
        tqdm.write("Solving the comparison run without thermophoresis.")
        disc_off, state_off, report_off = solve_cavity(config, laws, thermophoresis=False)
        entries["newton_without_thermophoresis"] = _newton_entry(report_off)
        converged = converged and report_off.converged
        if report.converged and report_off.converged:
            with_tp = thermophoresis_diagnostics(disc, state)["top_max_speed"]
            without_tp = thermophoresis_diagnostics(disc_off, state_off)["top_max_speed"]
            entries["comparison"] = {
                "top_max_speed_with": with_tp,
                "top_max_speed_without": without_tp,
                "top_flow_enhanced": with_tp > without_tp,
            }
        if config.emit_vtk:
            files.append(write_vtk(out / "fields_no_thermophoresis.vtk", disc_off, state_off, refined=True))

    if config.emit_png and config.emit_vtk:
        from .viz.fields import render_fields

        comparison = out / "fields_no_thermophoresis.vtk" if config.compare_thermophoresis else None
        files.append(render_fields(out / "fields.vtk", out / "fields.png", comparison_vtk=comparison))

    write_report(out / "report.txt", entries, files)
    tqdm.write(f"{'✔' if converged else '✖'} Cavity run finished: {report.message}")
    return 0 if converged else 1


def _write_study(
    config: RunConfig,
    case_name: str,
    solutions: list[LevelSolution],
    records: list,
    params: ModelParams,
) -> int:
    out = config.out_dir
    files: list[Path] = []
    if config.emit_csv and records:
        files.append(write_eoc_csv(records, out / "eoc.csv"))
        files.append(write_error_csv(records, out / "eoc_all.csv"))
    converged = [s for s in solutions[: config.levels] if s.report.converged]
    if config.emit_vtk and converged:
        finest = converged[-1]
        files.append(write_vtk(out / "fields.vtk", finest.disc, finest.state, refined=True))

    entries: dict[str, object] = {
        "case": case_name,
        "params": _params_entry(params),
        "levels": config.levels,
        "meshes": [mesh_quality(s.disc.mesh) for s in solutions],
        "newton": [_newton_entry(s.report) for s in solutions],
        "errors": [{"nt": r.nt, **r.errors} for r in records],
        "eoc": [{"nt": r.nt, **r.eoc} for r in records],
        "anomalies": _anomalies(params),
    }
    if converged:
        entries["constraints"] = constraint_defects(converged[-1].disc, converged[-1].state, params)
    write_report(out / "report.txt", entries, files)

    complete = len(records) == config.levels
    tqdm.write(f"{'✔' if complete else '✖'} {len(records)}/{config.levels} levels measured.")
    return 0 if complete else 1


def run_eoc(config: RunConfig, laws: CoefficientLaws | None = None) -> int:
    """Cavity convergence table against a fine-grid reference ``reference_gap`` levels finer."""

    config.out_dir.mkdir(parents=True, exist_ok=True)
    total = check_study(config.levels, "fine-grid", None, config.reference_gap)
    case = cavity_case()
    base = refine(build_rectangle(case.width, case.height, config.mesh.nx, config.mesh.ny), config.mesh.refine)
    solutions = solve_levels(
        base, case, config.params, laws or coefficients_alumina(), total, config.newton,
        config.scalar_degree, config.n_workers, desc="EOC study",
    )
    records = measure_errors(solutions, config.levels)
    return _write_study(config, "eoc", solutions, records, config.params)


def run_mms(config: RunConfig, laws: CoefficientLaws | None = None) -> int:
    """Manufactured-solution study on the unit square against the exact fields."""

    config.out_dir.mkdir(parents=True, exist_ok=True)
    laws = laws or coefficients_mild()
    params = config.params.updated(constants_one=True)
    mms = make_mms(config.mms_flavor, laws=laws, params=params)
    case = mms.case()
    check_study(config.levels, "exact", mms, config.reference_gap)
    base = refine(build_rectangle(case.width, case.height, config.mesh.nx, config.mesh.ny), config.mesh.refine)
    solutions = solve_levels(
        base, case, params, laws, config.levels, config.newton, config.scalar_degree, config.n_workers,
        desc="MMS study",
    )
    records = measure_errors(solutions, config.levels, mms)
    return _write_study(config, "mms", solutions, records, params)


def run(config: RunConfig) -> int:
    runners = {"cavity": run_cavity, "eoc": run_eoc, "mms": run_mms}
    return runners[config.case](config)
