from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import norm as sparse_norm, splu
from tqdm import tqdm

from .assembly import (
    Discretization,
    FieldState,
    SparseSystem,
    apply_constraints,
    assemble_jacobian,
    assemble_residual,
    lifted_state,
)
from .config import NewtonConfig
from .fespace import evaluate_at
from .model import CoefficientLaws, ModelParams

BACKWARD_ERROR_TOL = 1e-10
ARMIJO = 1e-4


class SingularSystemError(RuntimeError):
    """Raised when a linear system cannot be factorized; ``blocks`` names the suspect blocks."""

    def __init__(self, message: str, blocks: list[str]) -> None:
        super().__init__(message)
        self.blocks = blocks


@dataclass(slots=True)
class SolveReport:
    iterations: int = 0
    residual_history: list[float] = field(default_factory=list)
    converged: bool = False
    phi_range: tuple[float, float] = (float("nan"), float("nan"))
    backward_errors: list[float] = field(default_factory=list)
    pivot_ratios: list[float] = field(default_factory=list)
    step_lengths: list[float] = field(default_factory=list)
    message: str = ""
    stage: int | None = None
    stages_completed: int = 0

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else float("nan")

    def merge(self, other: "SolveReport") -> None:
        """Append a later stage's history to this report."""

        self.iterations += other.iterations
        self.residual_history.extend(other.residual_history)
        self.backward_errors.extend(other.backward_errors)
        self.pivot_ratios.extend(other.pivot_ratios)
        self.step_lengths.extend(other.step_lengths)
        self.converged = other.converged
        self.phi_range = other.phi_range
        self.message = other.message


def diagnose(system: SparseSystem) -> list[str]:
    """Blocks holding empty rows, empty columns or non-finite entries."""

    matrix = system.matrix.tocsr()
    row_nnz = np.diff(matrix.indptr)
    col_nnz = np.bincount(matrix.indices[matrix.data != 0], minlength=matrix.shape[1])
    row_abs = np.asarray(abs(matrix).sum(axis=1)).ravel()
    finite = np.isfinite(matrix.data)
    bad_rows = set(np.flatnonzero((row_nnz == 0) | (row_abs == 0)))
    bad_rows |= set(np.flatnonzero(col_nnz == 0))
    if not finite.all():
        bad_rows |= set(np.repeat(np.arange(matrix.shape[0]), row_nnz)[~finite])
    blocks = []
    for name, block in system.layout.blocks():
        if any(block.start <= i < block.stop for i in bad_rows):
            blocks.append(name)
    return blocks


def backward_error(matrix: sparse.spmatrix, x: np.ndarray, rhs: np.ndarray) -> float:
    """``|A x - b| / (|A| |x| + |b|)`` in the max norm."""

    norm_a = sparse_norm(matrix, np.inf)
    scale = norm_a * np.abs(x).max(initial=0.0) + np.abs(rhs).max(initial=0.0)
    defect = np.abs(matrix @ x - rhs).max(initial=0.0)
    return float(defect / scale) if scale > 0 else float(defect)


def _factorize(system: SparseSystem):
    if not np.isfinite(system.matrix.data).all() or not np.isfinite(system.rhs).all():
        blocks = diagnose(system) or [system.layout.block_of(int(i)) for i in np.flatnonzero(~np.isfinite(system.rhs))[:1]]
        raise SingularSystemError(f"Non-finite entries in blocks: {', '.join(blocks)}.", blocks)
    try:
        return splu(system.matrix.tocsc())
    except RuntimeError as exc:
        blocks = diagnose(system)
        where = ", ".join(blocks) if blocks else "unknown block"
        raise SingularSystemError(f"Singular system ({exc}); suspect blocks: {where}.", blocks) from exc


def linear_solve(system: SparseSystem, check: bool = False, report: SolveReport | None = None) -> np.ndarray:
    """
    Solve ``A x = rhs`` by sparse LU. With ``check`` the backward error contract
    ``|Ax - b| <= 1e-10 (|A| |x| + |b|)`` is enforced.
    """

    if system.matrix.shape[0] != system.matrix.shape[1]:
        raise ValueError(f"Linear systems must be square, got shape {system.matrix.shape}.")
    lu = _factorize(system)
    x = lu.solve(system.rhs)
    if not np.isfinite(x).all():
        blocks = diagnose(system)
        raise SingularSystemError(f"Numerically singular system; suspect blocks: {', '.join(blocks) or 'unknown'}.", blocks)

    if report is not None or check:
        error = backward_error(system.matrix, x, system.rhs)
        pivots = np.abs(lu.U.diagonal())
        if report is not None:
            report.backward_errors.append(error)
            report.pivot_ratios.append(float(pivots.min() / pivots.max()))
        if check and error > BACKWARD_ERROR_TOL:
            raise RuntimeError(f"Backward error {error:.3e} exceeds {BACKWARD_ERROR_TOL:.0e}.")
    return x


def residual_norm(residual: np.ndarray, disc: Discretization) -> float:
    return float(np.linalg.norm(residual[~disc.constrained]))


def _phi_range(vec: np.ndarray, disc: Discretization) -> tuple[float, float]:
    phi = vec[disc.layout.phi]
    return float(phi.min()), float(phi.max())


def newton_solve(
    initial: FieldState,
    disc: Discretization,
    params: ModelParams,
    laws: CoefficientLaws,
    config: NewtonConfig | None = None,
) -> tuple[FieldState, SolveReport]:
    """
    Damped Newton iteration on the constrained residual.

    Each step solves the exact Jacobian system and backtracks the step length by
    ``config.backtrack`` until the Armijo condition holds or ``config.min_step`` is
    reached. Exceeding ``max_iters`` yields a report with ``converged=False``.
    """

    config = config or NewtonConfig()
    layout = disc.layout
    vec = initial.to_vector(layout)
    vec[disc.constrained] = disc.boundary_values[disc.constrained]

    report = SolveReport()
    residual = assemble_residual(disc, FieldState.from_vector(vec, layout), params, laws)
    norm = residual_norm(residual, disc)
    report.residual_history.append(norm)
    tol = max(config.abs_tol, config.rel_tol * norm)

    while True:
        if not np.isfinite(norm):
            report.message = "residual is not finite"
            break
        if norm <= tol:
            report.converged = True
            report.message = f"converged in {report.iterations} iterations"
            break
        if report.iterations >= config.max_iters:
            report.message = f"no convergence after {config.max_iters} iterations"
            break

        state = FieldState.from_vector(vec, layout)
        system = apply_constraints(assemble_jacobian(disc, state, params, laws, residual=residual))
        step = linear_solve(system, check=config.check_backward_error, report=report)

        alpha = 1.0
        while True:
            trial = vec - alpha * step
            trial_residual = assemble_residual(disc, FieldState.from_vector(trial, layout), params, laws)
            trial_norm = residual_norm(trial_residual, disc)
            if trial_norm <= (1.0 - ARMIJO * alpha) * norm or alpha * config.backtrack < config.min_step:
                break
            alpha *= config.backtrack

        vec, residual, norm = trial, trial_residual, trial_norm
        report.iterations += 1
        report.step_lengths.append(alpha)
        report.residual_history.append(norm)
        if config.verbose:
            tqdm.write(f"  newton {report.iterations:2d}  |R| = {norm:.3e}  step = {alpha:g}")

    report.phi_range = _phi_range(vec, disc)
    lo, hi = report.phi_range
    if lo < 0.0 or hi > 1.0:
        warnings.warn(f"Concentration leaves [0, 1]: range [{lo:.4g}, {hi:.4g}].", stacklevel=2)
    return FieldState.from_vector(vec, layout), report


def _block_step(
    disc: Discretization,
    vec: np.ndarray,
    params: ModelParams,
    laws: CoefficientLaws,
    blocks: tuple[str, ...],
) -> np.ndarray:
    layout = disc.layout
    system = apply_constraints(assemble_jacobian(disc, FieldState.from_vector(vec, layout), params, laws))
    index = np.concatenate([np.arange(s.start, s.stop) for name, s in layout.blocks() if name in blocks])
    sub = SparseSystem(
        matrix=system.matrix[index][:, index].tocsr(),
        rhs=system.rhs[index],
        layout=layout,
        constrained=system.constrained[index],
    )
    try:
        step = linear_solve(sub)
    except SingularSystemError as exc:
        raise SingularSystemError(f"Decoupled {'/'.join(blocks)} solve failed: {exc}", exc.blocks) from exc
    vec = vec.copy()
    vec[index] -= step
    return vec


def initial_guess(disc: Discretization, params: ModelParams, laws: CoefficientLaws) -> FieldState:
    """
    Boundary data on zero fields with ``phi = phi_m``, followed by one heat solve and one
    Stokes solve with the other fields frozen.
    """

    vec = lifted_state(disc, phi_fill=params.phi_m).to_vector(disc.layout)
    vec = _block_step(disc, vec, params, laws, ("T",))
    vec = _block_step(disc, vec, params, laws, ("u", "p", "lambda_p"))
    return FieldState.from_vector(vec, disc.layout)


def prolongate(state: FieldState, coarse: Discretization, fine: Discretization) -> FieldState:
    """Transfer a state to a nested finer discretization by point evaluation at the fine nodes."""

    def _at(space_c, space_f, coeffs):
        values, _ = evaluate_at(space_c, coeffs, space_f.dof_coords)
        if space_f.kind == "vector":
            return np.concatenate([values[:, 0], values[:, 1]])
        return values

    result = FieldState(
        phi=_at(coarse.phi_space, fine.phi_space, state.phi),
        T=_at(coarse.T_space, fine.T_space, state.T),
        u=_at(coarse.flow.velocity, fine.flow.velocity, state.u),
        p=_at(coarse.flow.pressure, fine.flow.pressure, state.p),
        lambda_p=state.lambda_p,
        lambda_phi=state.lambda_phi,
    )
    vec = result.to_vector(fine.layout)
    vec[fine.constrained] = fine.boundary_values[fine.constrained]
    return FieldState.from_vector(vec, fine.layout)


def ramp_schedule(targets: ModelParams, steps: int, start_Re: float = 100.0) -> list[ModelParams]:
    """
    Parameter stages ending at ``targets``: Re grows linearly from ``min(start_Re, Re)``
    while beta and the thermophoretic strength 1/N_BT grow linearly from zero.
    """

    if steps < 1:
        raise ValueError(f"A ramp needs at least one stage, got {steps}.")
    Re0 = min(start_Re, targets.Re)
    stages = []
    for s in range(1, steps + 1):
        t = s / steps
        stages.append(
            targets.updated(
                Re=Re0 + t * (targets.Re - Re0),
                beta=t * targets.beta,
                N_BT=targets.N_BT / t,
            )
        )
    stages[-1] = targets
    return stages


def continuation_solve(
    targets: ModelParams,
    disc: Discretization,
    laws: CoefficientLaws,
    config: NewtonConfig | None = None,
    initial: FieldState | None = None,
) -> tuple[FieldState, SolveReport]:
    """
    Newton solves along :func:`ramp_schedule`, each warm-started from the previous stage.
    On failure the last converged state is returned with ``report.stage`` set to the
    failing stage.
    """

    config = config or NewtonConfig()
    schedule = ramp_schedule(targets, config.ramp_steps)
    state = initial if initial is not None else initial_guess(disc, schedule[0], laws)

    report = SolveReport()
    stages = tqdm(schedule, desc="Continuation", unit="stage", disable=len(schedule) == 1)
    for index, params in enumerate(stages):
        solved, stage_report = newton_solve(state, disc, params, laws, config)
        report.merge(stage_report)
        if not stage_report.converged:
            report.stage = index
            report.message = f"stage {index + 1}/{len(schedule)} (Re={params.Re:g}): {stage_report.message}"
            tqdm.write(f"✖ {report.message}")
            return state, report
        state = solved
        report.stages_completed = index + 1
    return state, report
