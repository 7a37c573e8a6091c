from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .constants import ENV_PREFIX, FIGURE_PARAMS, PARAMETER_KEYS, TABLE_PARAMS
from .model import ModelParams

CASES = ("cavity", "mms", "eoc")


@dataclass(slots=True)
class MeshSpec:
    """Coarse structured grid plus the number of uniform refinements applied to it."""

    nx: int = 16
    ny: int = 8
    refine: int = 0

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"Mesh subdivisions must be at least 1, got nx={self.nx}, ny={self.ny}.")
        if self.refine < 0:
            raise ValueError(f"Refinement levels must be nonnegative, got {self.refine}.")


@dataclass(slots=True)
class NewtonConfig:
    """Newton iteration controls and the optional continuation ramp."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-12
    max_iters: int = 25
    backtrack: float = 0.5
    min_step: float = 2.0**-10
    ramp_steps: int = 1
    verbose: bool = False
    check_backward_error: bool = False

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError(f"Tolerances must be positive, got abs_tol={self.abs_tol}, rel_tol={self.rel_tol}.")
        if not 0 < self.backtrack < 1:
            raise ValueError(f"Backtracking factor must lie in (0, 1), got {self.backtrack}.")
        if not 0 < self.min_step <= 1:
            raise ValueError(f"Minimum step must lie in (0, 1], got {self.min_step}.")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be nonnegative, got {self.max_iters}.")
        if self.ramp_steps < 1:
            raise ValueError(f"ramp_steps must be at least 1, got {self.ramp_steps}.")


@dataclass(slots=True)
class RunConfig:
    """Everything one ``solve`` invocation needs."""

    case: str = "cavity"
    mesh: MeshSpec = field(default_factory=MeshSpec)
    params: ModelParams = field(default_factory=lambda: ModelParams(**TABLE_PARAMS))
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    out_dir: Path = Path("out")
    scalar_degree: int = 2
    levels: int = 4
    reference_gap: int = 2
    mms_flavor: str = "trigonometric"
    compare_thermophoresis: bool = False
    sequential: bool = False
    workers: int = 4
    emit_vtk: bool = True
    emit_csv: bool = True
    emit_png: bool = False

    def __post_init__(self) -> None:
        if self.case not in CASES:
            raise ValueError(f"Unknown case '{self.case}'; choose one of {', '.join(CASES)}.")
        if self.scalar_degree not in (1, 2):
            raise ValueError(f"Scalar degree must be 1 or 2, got {self.scalar_degree}.")
        self.out_dir = Path(self.out_dir)

    @property
    def n_workers(self) -> int:
        return 1 if self.sequential else max(1, self.workers)


def preset_params(case: str) -> dict[str, float]:
    """Parameter preset of a case: the figure set for the cavity, the table set otherwise."""

    return dict(FIGURE_PARAMS if case == "cavity" else TABLE_PARAMS)


def _coerce(field_name: str, raw: str) -> object:
    raw = raw.strip()
    if field_name == "case":
        return raw.lower()
    if field_name == "cutoff_radius" and raw.lower() in ("", "none", "off"):
        return None
    try:
        return float(raw)
    except ValueError as exc:
        raise ValueError(f"Parameter '{field_name}' expects a number, got '{raw}'.") from exc


def parse_parameters(text: str, source: str = "<string>") -> dict[str, object]:
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys are case-insensitive."""

    values: dict[str, object] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{number}: expected 'key = value', got '{line}'.")
        key, raw = (part.strip() for part in line.split("=", 1))
        name = PARAMETER_KEYS.get(key.lower())
        if name is None:
            raise ValueError(f"{source}:{number}: unknown parameter '{key}'.")
        values[name] = _coerce(name, raw)
    return values


def load_parameter_file(path: Path) -> dict[str, object]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Parameter file not found: {path}")
    return parse_parameters(path.read_text(encoding="utf-8"), source=str(path))


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, object]:
    """Collect ``NANOFLOW_<KEY>`` variables, e.g. ``NANOFLOW_RE=300``."""

    environ = os.environ if environ is None else environ
    values: dict[str, object] = {}
    for var, raw in environ.items():
        if not var.startswith(ENV_PREFIX):
            continue
        name = PARAMETER_KEYS.get(var[len(ENV_PREFIX):].lower())
        if name is not None:
            values[name] = _coerce(name, raw)
    return values


def resolve_params(
    case: str,
    param_file: Path | None = None,
    cli: Mapping[str, object] | None = None,
    environ: Mapping[str, str] | None = None,
    thermophoresis: bool = True,
) -> tuple[str, ModelParams]:
    """
    Merge preset, parameter file, environment and command line, in increasing priority.
    Returns the (possibly file-selected) case and the model parameters.
    """

    merged: dict[str, object] = {}
    if param_file is not None:
        merged.update(load_parameter_file(param_file))
    merged.update(env_overrides(environ))
    merged.update({k: v for k, v in (cli or {}).items() if v is not None})

    case = str(merged.pop("case", case))
    if case not in CASES:
        raise ValueError(f"Unknown case '{case}'; choose one of {', '.join(CASES)}.")
    values: dict[str, object] = preset_params(case)
    values.update(merged)
    if case == "mms":
        values["constants_one"] = True
    return case, ModelParams(**values, thermophoresis=thermophoresis)
