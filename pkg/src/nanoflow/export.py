from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .analysis import ErrorRecord, eoc_table
from .assembly import Discretization, FieldState
from .constants import EOC_COLUMNS, ERROR_KEYS
from .fespace import Space
from .mesh import Mesh, refine_uniform

VTK_TRIANGLE = 5


def _nodal(space: Space, coeffs: np.ndarray, refined: bool) -> np.ndarray:
    """Scalar values at mesh vertices, or at all P2 nodes (vertices then edge midpoints)."""

    mesh = space.mesh
    nv = mesh.n_vertices
    if not refined:
        return coeffs[:nv]
    if space.degree == 2:
        return coeffs
    return np.concatenate([coeffs, 0.5 * (coeffs[mesh.edges[:, 0]] + coeffs[mesh.edges[:, 1]])])


def point_fields(disc: Discretization, state: FieldState, refined: bool = False) -> dict[str, np.ndarray]:
    velocity = disc.flow.velocity
    n_v = velocity.n_scalar
    u1 = _nodal(velocity, state.u[:n_v], refined)
    u2 = _nodal(velocity, state.u[n_v:], refined)
    return {
        "phi": _nodal(disc.phi_space, state.phi, refined),
        "T": _nodal(disc.T_space, state.T, refined),
        "p": _nodal(disc.flow.pressure, state.p, refined),
        "speed": np.hypot(u1, u2),
        "velocity": np.column_stack([u1, u2]),
    }


def write_vtk(
    path: Path,
    disc: Discretization,
    state: FieldState,
    refined: bool = False,
    title: str = "nanoflow fields",
) -> Path:
    """
    Legacy ASCII VTK file with phi, T, p, |u| and the velocity vector as point data.
    With ``refined`` the output mesh is the once-refined mesh, whose vertices are the
    P2 nodes, so quadratic fields are written without loss.
    """

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mesh = refine_uniform(disc.mesh) if refined else disc.mesh
    fields = point_fields(disc, state, refined)
    n_points = mesh.n_vertices
    n_cells = mesh.n_triangles

    with path.open("w", encoding="utf-8") as handle:
        handle.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        handle.write(f"POINTS {n_points} double\n")
        np.savetxt(handle, np.column_stack([mesh.vertices, np.zeros(n_points)]), fmt="%.17g")
        handle.write(f"CELLS {n_cells} {4 * n_cells}\n")
        np.savetxt(handle, np.column_stack([np.full(n_cells, 3), mesh.triangles]), fmt="%d")
        handle.write(f"CELL_TYPES {n_cells}\n")
        np.savetxt(handle, np.full(n_cells, VTK_TRIANGLE), fmt="%d")
        handle.write(f"POINT_DATA {n_points}\n")
        for name in ("phi", "T", "p", "speed"):
            handle.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            np.savetxt(handle, fields[name], fmt="%.17g")
        handle.write("VECTORS velocity double\n")
        np.savetxt(handle, np.column_stack([fields["velocity"], np.zeros(n_points)]), fmt="%.17g")
    return path


@dataclass(slots=True)
class VtkData:
    points: np.ndarray
    cells: np.ndarray
    point_data: dict[str, np.ndarray]


def read_vtk(path: Path) -> VtkData:
    """Parse files written by :func:`write_vtk`."""

    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"VTK file not found: {path}")
    tokens = path.read_text(encoding="utf-8").split("\n")
    lines = iter(tokens)
    points = cells = None
    point_data: dict[str, np.ndarray] = {}
    n_points = 0

    def _take(count: int) -> np.ndarray:
        return np.array([[float(v) for v in next(lines).split()] for _ in range(count)])

    for line in lines:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "POINTS":
            n_points = int(parts[1])
            points = _take(n_points)[:, :2]
        elif parts[0] == "CELLS":
            cells = _take(int(parts[1]))[:, 1:].astype(int)
        elif parts[0] == "SCALARS":
            next(lines)  # lookup table
            point_data[parts[1]] = _take(n_points)[:, 0]
        elif parts[0] == "VECTORS":
            point_data[parts[1]] = _take(n_points)[:, :2]
    if points is None or cells is None:
        raise ValueError(f"{path} is not an unstructured-grid VTK file.")
    return VtkData(points=points, cells=cells, point_data=point_data)


def write_mesh_dump(mesh: Mesh, path: Path) -> Path:
    """
    Plain-text mesh: ``n_triangles n_vertices``, one ``x y`` line per vertex, one
    ``v0 v1 v2`` line per triangle, then ``v0 v1 tag`` per boundary edge.
    """

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        handle.write(f"{mesh.n_triangles} {mesh.n_vertices}\n")
        np.savetxt(handle, mesh.vertices, fmt="%.17g")
        np.savetxt(handle, mesh.triangles, fmt="%d")
        for edge, tag in zip(mesh.edges[mesh.boundary_edges], mesh.boundary_tags):
            handle.write(f"{edge[0]} {edge[1]} {tag}\n")
    return path


def _format_table(frame: pd.DataFrame) -> pd.DataFrame:
    formatted = frame.copy()
    for column in frame.columns:
        if column == "nt":
            continue
        if column.endswith("_eoc"):
            formatted[column] = frame[column].map(lambda v: "" if pd.isna(v) else f"{v:.2f}")
        else:
            formatted[column] = frame[column].map(lambda v: f"{v:.4e}")
    return formatted


def write_eoc_csv(records: list[ErrorRecord], path: Path, keys: tuple[str, ...] = EOC_COLUMNS) -> Path:
    """Table with header ``nt,phi_L6,phi_eoc,T_L6,T_eoc,u_L2,u_eoc``; errors in 5 significant digits."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _format_table(eoc_table(records, keys)).to_csv(path, index=False)
    return path


def write_error_csv(records: list[ErrorRecord], path: Path) -> Path:
    """Every measured norm with its EOC, one row per level."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    for record in records:
        row: dict[str, object] = {"nt": record.nt, "h": record.h, "newton_iterations": record.iterations}
        for key in ERROR_KEYS:
            row[key] = record.errors.get(key, np.nan)
            row[f"{key}_eoc"] = record.eoc.get(key, np.nan)
        rows.append(row)
    pd.DataFrame(rows).to_csv(path, index=False, float_format="%.6e")
    return path


def file_hash(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _jsonable(value: object) -> object:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def write_report(path: Path, entries: dict[str, object], files: list[Path] | None = None) -> Path:
    """``key = <json value>`` lines, followed by the sha256 of every output file."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{key} = {json.dumps(_jsonable(value))}" for key, value in entries.items()]
    for output in files or []:
        lines.append(f"sha256.{Path(output).name} = {json.dumps(file_hash(output))}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_report(path: Path) -> dict[str, object]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Report not found: {path}")
    entries = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if " = " in line:
            key, raw = line.split(" = ", 1)
            entries[key] = json.loads(raw)
    return entries
