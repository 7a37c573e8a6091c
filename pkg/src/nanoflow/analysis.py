from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Literal, Protocol

import numpy as np
import pandas as pd
from tqdm import tqdm

from .assembly import Discretization, FieldState, discretize
from .config import NewtonConfig
from .constants import EOC_COLUMNS
from .fespace import Quadrature, Space, element_quadrature, element_tables, evaluate, evaluate_at
from .mesh import Mesh, mesh_size, refine
from .model import CaseSetup, CoefficientLaws, ModelParams
from .solver import SolveReport, continuation_solve, newton_solve, prolongate

SUPPORTED_EXPONENTS = (2, 6)


class ReferenceFields(Protocol):
    """Pointwise fields with gradients, as provided by manufactured solutions."""

    def phi(self, x: np.ndarray, y: np.ndarray) -> np.ndarray: ...
    def grad_phi(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...
    def T(self, x: np.ndarray, y: np.ndarray) -> np.ndarray: ...
    def grad_T(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...
    def u(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...
    def grad_u(self, x: np.ndarray, y: np.ndarray) -> tuple: ...
    def p(self, x: np.ndarray, y: np.ndarray) -> np.ndarray: ...


def _as_array(values: object, shape: tuple[int, ...]) -> np.ndarray:
    """Stack (nested) component tuples along trailing axes."""

    if isinstance(values, tuple):
        return np.stack([_as_array(v, shape) for v in values], axis=-1)
    return np.broadcast_to(np.asarray(values, dtype=float), shape)


def _pointwise_magnitude(values: np.ndarray, ndim: int) -> np.ndarray:
    extra = tuple(range(ndim, values.ndim))
    return np.sqrt(np.sum(values**2, axis=extra)) if extra else np.abs(values)


def _check_exponent(p: int) -> None:
    if p not in SUPPORTED_EXPONENTS:
        raise ValueError(f"Unsupported exponent p={p}; choose one of {SUPPORTED_EXPONENTS}.")


def _field_values(field, space: Space, tables, gradient=None) -> tuple[np.ndarray, np.ndarray | None]:
    shape = tables.weights.shape
    if callable(field):
        x, y = tables.points[..., 0], tables.points[..., 1]
        values = _as_array(field(x, y), shape)
        grads = _as_array(gradient(x, y), shape) if gradient is not None else None
        return values, grads
    return evaluate(space, np.asarray(field, dtype=float), tables)


def norm_Lp(field, space: Space, p: int, quad: Quadrature | None = None) -> float:
    """
    ``L_p`` norm over the mesh of ``space``. ``field`` is a coefficient vector of
    ``space`` or a pointwise function ``f(x, y)``; vector fields use the Euclidean norm.
    """

    _check_exponent(p)
    tables = element_tables(space.mesh, quad or element_quadrature(), degrees=(space.degree,))
    values, _ = _field_values(field, space, tables)
    magnitude = _pointwise_magnitude(values, 2)
    return float(np.sum(tables.weights * magnitude**p) ** (1.0 / p))


def norm_W1p(field, space: Space, p: int, gradient: Callable | None = None, quad: Quadrature | None = None) -> float:
    """``(|f|_p^p + |grad f|_p^p)^(1/p)``; pointwise functions need their ``gradient``."""

    _check_exponent(p)
    if callable(field) and gradient is None:
        raise ValueError("A gradient function is required to measure a pointwise field in W^1_p.")
    tables = element_tables(space.mesh, quad or element_quadrature(), degrees=(space.degree,))
    values, grads = _field_values(field, space, tables, gradient)
    total = tables.weights * (_pointwise_magnitude(values, 2) ** p + _pointwise_magnitude(grads, 2) ** p)
    return float(np.sum(total) ** (1.0 / p))


@dataclass(slots=True)
class SampledReference:
    """A converged fine-mesh state exposed as pointwise fields."""

    disc: Discretization
    state: FieldState

    def _eval(self, space: Space, coeffs: np.ndarray, x: np.ndarray, y: np.ndarray):
        shape = np.shape(x)
        values, grads = evaluate_at(space, coeffs, np.column_stack([np.ravel(x), np.ravel(y)]))
        return values.reshape(shape + values.shape[1:]), grads.reshape(shape + grads.shape[1:])

    def phi(self, x, y):
        return self._eval(self.disc.phi_space, self.state.phi, x, y)[0]

    def grad_phi(self, x, y):
        g = self._eval(self.disc.phi_space, self.state.phi, x, y)[1]
        return g[..., 0], g[..., 1]

    def T(self, x, y):
        return self._eval(self.disc.T_space, self.state.T, x, y)[0]

    def grad_T(self, x, y):
        g = self._eval(self.disc.T_space, self.state.T, x, y)[1]
        return g[..., 0], g[..., 1]

    def u(self, x, y):
        v = self._eval(self.disc.flow.velocity, self.state.u, x, y)[0]
        return v[..., 0], v[..., 1]

    def grad_u(self, x, y):
        g = self._eval(self.disc.flow.velocity, self.state.u, x, y)[1]
        return (g[..., 0, 0], g[..., 0, 1]), (g[..., 1, 0], g[..., 1, 1])

    def p(self, x, y):
        return self._eval(self.disc.flow.pressure, self.state.p, x, y)[0]


def error_norms(disc: Discretization, state: FieldState, reference: ReferenceFields) -> dict[str, float]:
    """All study norms of the difference between ``state`` and ``reference``."""

    sums: dict[str, float] = defaultdict(float)
    for chunk in range(disc.n_chunks):
        tables = disc.tables(chunk)
        x, y = tables.points[..., 0], tables.points[..., 1]
        w = tables.weights
        shape = w.shape

        for name, space, coeffs, exact, exact_grad in (
            ("phi", disc.phi_space, state.phi, reference.phi, reference.grad_phi),
            ("T", disc.T_space, state.T, reference.T, reference.grad_T),
        ):
            value, grad = evaluate(space, coeffs, tables)
            err = np.abs(value - _as_array(exact(x, y), shape))
            gerr = _pointwise_magnitude(grad - _as_array(exact_grad(x, y), shape), 2)
            sums[f"{name}_6"] += float(np.sum(w * err**6))
            sums[f"{name}_grad6"] += float(np.sum(w * gerr**6))

        value, grad = evaluate(disc.flow.velocity, state.u, tables)
        sums["u_2"] += float(np.sum(w * np.sum((value - _as_array(reference.u(x, y), shape)) ** 2, axis=-1)))
        sums["u_grad2"] += float(np.sum(w * np.sum((grad - _as_array(reference.grad_u(x, y), shape)) ** 2, axis=(-2, -1))))

        value, _ = evaluate(disc.flow.pressure, state.p, tables)
        sums["p_2"] += float(np.sum(w * (value - _as_array(reference.p(x, y), shape)) ** 2))

    return {
        "phi_L6": sums["phi_6"] ** (1 / 6),
        "T_L6": sums["T_6"] ** (1 / 6),
        "u_L2": math.sqrt(sums["u_2"]),
        "phi_W16": (sums["phi_6"] + sums["phi_grad6"]) ** (1 / 6),
        "T_W16": (sums["T_6"] + sums["T_grad6"]) ** (1 / 6),
        "u_H1": math.sqrt(sums["u_2"] + sums["u_grad2"]),
        "p_L2": math.sqrt(sums["p_2"]),
    }


@dataclass(slots=True)
class ErrorRecord:
    nt: int
    h: float
    errors: dict[str, float]
    eoc: dict[str, float] = field(default_factory=dict)
    iterations: int = 0


def compute_eoc(records: list[ErrorRecord]) -> list[ErrorRecord]:
    """Fill ``eoc`` with ``log(e_coarse / e_fine) / log(h_coarse / h_fine)``; first row stays empty."""

    for coarse, fine in zip(records, records[1:]):
        ratio_h = math.log(coarse.h / fine.h)
        fine.eoc = {
            key: math.log(coarse.errors[key] / fine.errors[key]) / ratio_h
            for key in fine.errors
            if coarse.errors[key] > 0 and fine.errors[key] > 0
        }
    return records


def eoc_table(records: list[ErrorRecord], keys: tuple[str, ...] = EOC_COLUMNS) -> pd.DataFrame:
    """One row per level: ``nt`` then each error column followed by its EOC."""

    rows = []
    for record in records:
        row: dict[str, object] = {"nt": record.nt}
        for key in keys:
            row[key] = record.errors[key]
            row[f"{key.split('_')[0]}_eoc"] = record.eoc.get(key, np.nan)
        rows.append(row)
    columns = ["nt"] + [c for key in keys for c in (key, f"{key.split('_')[0]}_eoc")]
    return pd.DataFrame(rows, columns=columns)


@dataclass(slots=True)
class LevelSolution:
    disc: Discretization
    state: FieldState
    report: SolveReport


def solve_levels(
    base: Mesh,
    case: CaseSetup,
    params: ModelParams,
    laws: CoefficientLaws,
    levels: int,
    config: NewtonConfig | None = None,
    scalar_degree: int = 2,
    workers: int = 1,
    desc: str = "Levels",
) -> list[LevelSolution]:
    """
    Solve on ``levels`` successive uniform refinements of ``base``, each level started
    from the prolongated solution of the previous one. Stops at the first failure; the
    failing level is included with its report.
    """

    config = config or NewtonConfig()
    solutions: list[LevelSolution] = []
    for level in tqdm(range(levels), desc=desc, unit="level"):
        disc = discretize(refine(base, level), case, scalar_degree=scalar_degree, workers=workers)
        if solutions:
            previous = solutions[-1]
            state, report = newton_solve(prolongate(previous.state, previous.disc, disc), disc, params, laws, config)
        else:
            state, report = continuation_solve(params, disc, laws, config)
        solutions.append(LevelSolution(disc, state, report))
        marker = "✔" if report.converged else "✖"
        tqdm.write(f"{marker} nt={disc.mesh.n_triangles}: {report.message}")
        if not report.converged:
            break
    return solutions


def check_study(levels: int, reference: str, exact: ReferenceFields | None, reference_gap: int) -> int:
    """Validate study arguments; returns the number of levels to solve."""

    if levels < 2:
        raise ValueError("levels ≥ 2 required")
    if reference not in ("exact", "fine-grid"):
        raise ValueError(f"Unknown reference '{reference}'; choose 'exact' or 'fine-grid'.")
    if reference == "exact":
        if exact is None:
            raise ValueError("An exact solution is required for reference='exact'.")
        return levels
    if reference_gap < 1:
        raise ValueError(f"The reference mesh must be finer than the study meshes, got gap {reference_gap}.")
    if reference_gap < 2:
        warnings.warn("Reference mesh is only one level finer than the finest study mesh.", stacklevel=3)
    return levels + reference_gap


def measure_errors(
    solutions: list[LevelSolution],
    levels: int,
    exact: ReferenceFields | None = None,
) -> list[ErrorRecord]:
    """
    Error records of the first ``levels`` converged solutions. Without ``exact`` the last
    entry of ``solutions`` is the reference and must lie beyond the study levels.
    """

    if exact is None:
        if len(solutions) <= levels or not solutions[-1].report.converged:
            tqdm.write("✖ Reference solution not available; no errors measured.")
            return []
        exact = SampledReference(solutions[-1].disc, solutions[-1].state)

    records = []
    for solution in solutions[:levels]:
        if not solution.report.converged:
            break
        records.append(
            ErrorRecord(
                nt=solution.disc.mesh.n_triangles,
                h=mesh_size(solution.disc.mesh),
                errors=error_norms(solution.disc, solution.state, exact),
                iterations=solution.report.iterations,
            )
        )
    return compute_eoc(records)


def eoc_study(
    base: Mesh,
    case: CaseSetup,
    params: ModelParams,
    laws: CoefficientLaws,
    levels: int,
    reference: Literal["exact", "fine-grid"] = "exact",
    exact: ReferenceFields | None = None,
    config: NewtonConfig | None = None,
    scalar_degree: int = 2,
    reference_gap: int = 2,
    workers: int = 1,
) -> list[ErrorRecord]:
    """
    Errors and EOCs over ``levels`` uniform refinements of ``base``.

    ``reference="exact"`` measures against ``exact``; ``"fine-grid"`` solves
    ``reference_gap`` further levels and measures against that solution by point
    evaluation at the quadrature points of each study mesh. A non-converged level ends
    the study: exact mode returns the rows computed so far, fine-grid mode returns no
    rows when the reference is out of reach.
    """

    total = check_study(levels, reference, exact, reference_gap)
    solutions = solve_levels(base, case, params, laws, total, config, scalar_degree, workers, desc="EOC study")
    return measure_errors(solutions, levels, exact if reference == "exact" else None)


def _pressure_tests(disc: Discretization, state: FieldState) -> np.ndarray:
    tested = np.zeros(disc.layout.n_pressure)
    for chunk in range(disc.n_chunks):
        tables = disc.tables(chunk)
        _, grad = evaluate(disc.flow.velocity, state.u, tables)
        div = grad[..., 0, 0] + grad[..., 1, 1]
        local = np.einsum("cq,qb->cb", tables.weights * div, tables.values[1])
        tested += np.bincount(
            disc.flow.pressure.cell_dofs[tables.cells].ravel(), local.ravel(), minlength=disc.layout.n_pressure
        )
    return tested


def _integral(disc: Discretization, space: Space, coeffs: np.ndarray) -> float:
    total = 0.0
    for chunk in range(disc.n_chunks):
        tables = disc.tables(chunk)
        values, _ = evaluate(space, coeffs, tables)
        total += float(np.sum(tables.weights * values))
    return total


def constraint_defects(disc: Discretization, state: FieldState, params: ModelParams) -> dict[str, float]:
    """Mean-pressure, mean-concentration and discrete divergence defects of a state."""

    defects = {
        "pressure_mean": abs(float(disc.flow.mean_constraint @ state.p)),
        "divergence": float(np.abs(_pressure_tests(disc, state)).max()),
        "velocity_H1": norm_W1p(state.u, disc.flow.velocity, 2, quad=disc.quad),
    }
    if disc.case.mean_concentration:
        mean = _integral(disc, disc.phi_space, state.phi) / disc.mesh.area
        defects["concentration_mean"] = abs(mean - params.phi_m)
    return defects


def mesh_quality(mesh: Mesh) -> dict[str, float]:
    return {
        "triangles": mesh.n_triangles,
        "h": mesh_size(mesh),
        "shape_ratio_max": float(mesh.shape_ratios().max()),
        "quasi_uniformity": mesh.quasi_uniformity(),
    }


def thermophoresis_diagnostics(disc: Discretization, state: FieldState, strip: float = 0.1) -> dict[str, object]:
    """
    Top-wall speed and concentration extremes of a cavity state. The minimum is expected
    near the hot left wall or the lid and the maximum near the cold right wall.
    """

    velocity = disc.flow.velocity
    n_v = velocity.n_scalar
    top = velocity.boundary_dofs("top")
    speed = np.hypot(state.u[top], state.u[n_v + top])

    coords = disc.phi_space.dof_coords
    i_min = int(np.argmin(state.phi))
    i_max = int(np.argmax(state.phi))
    x_min, y_min = coords[i_min]
    x_max, _ = coords[i_max]
    width, height = disc.mesh.width, disc.mesh.height
    return {
        "top_max_speed": float(speed.max()),
        "max_speed": float(np.hypot(state.u[:n_v], state.u[n_v:]).max()),
        "phi_min": float(state.phi[i_min]),
        "phi_min_at": (float(x_min), float(y_min)),
        "phi_max": float(state.phi[i_max]),
        "phi_max_at": (float(x_max), float(coords[i_max][1])),
        "min_near_left_or_top": bool(x_min <= strip or y_min >= height - strip),
        "max_near_right": bool(x_max >= width - strip),
    }
