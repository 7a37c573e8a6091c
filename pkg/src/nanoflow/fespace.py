from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import permutations
from typing import Callable

import numpy as np
from scipy import sparse

from .mesh import LOCAL_EDGES, Mesh, locate_points

# Gradients of the barycentric coordinates on the reference triangle (0,0), (1,0), (0,1).
REFERENCE_GRAD_LAMBDA = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])

SUPPORTED_DEGREES = (1, 2)


@dataclass(frozen=True, slots=True)
class Quadrature:
    """Symmetric triangle rule; weights sum to the reference area 1/2."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def size(self) -> int:
        return len(self.weights)


def _orbit(weight: float, bary: tuple[float, float, float]) -> list[tuple[float, tuple[float, ...]]]:
    return [(weight, perm) for perm in sorted(set(permutations(bary)))]


# (weight for a unit-area triangle, barycentric orbit generator)
_RULES: dict[int, list[tuple[float, tuple[float, float, float]]]] = {
    2: [(1.0 / 3.0, (2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0))],
    4: [
        (0.223381589678011, (0.108103018168070, 0.445948490915965, 0.445948490915965)),
        (0.109951743655322, (0.816847572980459, 0.091576213509771, 0.091576213509771)),
    ],
    6: [
        (0.116786275726379, (0.501426509658179, 0.249286745170910, 0.249286745170910)),
        (0.050844906370207, (0.873821971016996, 0.063089014491502, 0.063089014491502)),
        (0.082851075618374, (0.053145049844817, 0.310352451033784, 0.636502499121399)),
    ],
}


def element_quadrature(order: int = 6) -> Quadrature:
    """
    Dunavant rule on the reference triangle, exact for polynomials of degree ``order``.
    """

    if order not in _RULES:
        raise ValueError(f"Unsupported quadrature order {order}; choose one of {sorted(_RULES)}.")

    entries = [entry for weight, bary in _RULES[order] for entry in _orbit(weight, bary)]
    points = np.array([bary for _, bary in entries])
    points /= points.sum(axis=1, keepdims=True)
    weights = np.array([weight for weight, _ in entries])
    weights *= 0.5 / weights.sum()
    return Quadrature(points=points, weights=weights, degree=order)


def basis_tables(degree: int, bary: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Nodal Lagrange basis at barycentric points ``bary`` of shape (n, 3).

    Returns values (n, nb) and reference-frame gradients (n, nb, 2). Local order: the
    three vertices, then (P2 only) the edges 01, 12, 20.
    """

    lam = np.atleast_2d(np.asarray(bary, dtype=float))
    grad_lam = REFERENCE_GRAD_LAMBDA

    if degree == 1:
        values = lam.copy()
        grads = np.broadcast_to(grad_lam, (len(lam), 3, 2)).copy()
        return values, grads
    if degree != 2:
        raise ValueError(f"Unsupported polynomial degree {degree}; choose 1 or 2.")

    a, b = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
    values = np.hstack([lam * (2.0 * lam - 1.0), 4.0 * lam[:, a] * lam[:, b]])
    vertex_grads = (4.0 * lam - 1.0)[:, :, None] * grad_lam[None, :, :]
    edge_grads = 4.0 * (
        lam[:, b, None] * grad_lam[None, a, :] + lam[:, a, None] * grad_lam[None, b, :]
    )
    return values, np.concatenate([vertex_grads, edge_grads], axis=1)


def eval_basis(degree: int, point: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    point = np.asarray(point, dtype=float)
    if point.shape != (3,) or np.any(point < -1e-14) or abs(point.sum() - 1.0) > 1e-12:
        raise ValueError(f"Invalid barycentric point {point!r}.")
    values, grads = basis_tables(degree, point[None, :])
    return values[0], grads[0]


@dataclass(frozen=True, slots=True)
class Space:
    """
    Continuous Lagrange space on a mesh. Vector spaces store the two components
    block-wise: dof ``c * n_scalar + i`` is component ``c`` of scalar node ``i``.
    """

    mesh: Mesh
    degree: int
    kind: str
    cell_dofs: np.ndarray
    dof_coords: np.ndarray
    constrained: np.ndarray
    boundary_values: np.ndarray

    @property
    def n_scalar(self) -> int:
        return len(self.dof_coords)

    @property
    def components(self) -> int:
        return 2 if self.kind == "vector" else 1

    @property
    def dof_count(self) -> int:
        return self.components * self.n_scalar

    @property
    def n_local(self) -> int:
        return self.cell_dofs.shape[1]

    def boundary_dofs(self, *tags: str) -> np.ndarray:
        """Scalar node indices lying on the boundary edges carrying ``tags``."""

        edges = self.mesh.edges_with_tag(*tags)
        nodes = np.unique(self.mesh.edges[edges])
        if self.degree == 2:
            nodes = np.concatenate([nodes, self.mesh.n_vertices + edges])
        return np.sort(nodes)

    def with_constraints(self, dofs: np.ndarray, values: np.ndarray | float) -> "Space":
        """Return a copy with ``dofs`` fixed to ``values``; later calls override earlier ones."""

        constrained = self.constrained.copy()
        boundary_values = self.boundary_values.copy()
        constrained[dofs] = True
        boundary_values[dofs] = values
        return replace(self, constrained=constrained, boundary_values=boundary_values)


@dataclass(frozen=True, slots=True)
class TaylorHoodPair:
    """P2 velocity and P1 pressure; ``mean_constraint . p`` is the integral of the pressure."""

    velocity: Space
    pressure: Space
    mean_constraint: np.ndarray


def build_dofmap(mesh: Mesh, degree: int, kind: str = "scalar") -> Space:
    if degree not in SUPPORTED_DEGREES:
        raise ValueError(f"Unsupported polynomial degree {degree}; choose 1 or 2.")
    if kind not in ("scalar", "vector"):
        raise ValueError(f"Unknown space kind '{kind}'.")

    if degree == 1:
        cell_dofs = mesh.triangles.copy()
        coords = mesh.vertices.copy()
    else:
        cell_dofs = np.hstack([mesh.triangles, mesh.n_vertices + mesh.triangle_edges])
        midpoints = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
        coords = np.vstack([mesh.vertices, midpoints])

    count = len(coords) * (2 if kind == "vector" else 1)
    return Space(
        mesh=mesh,
        degree=degree,
        kind=kind,
        cell_dofs=cell_dofs,
        dof_coords=coords,
        constrained=np.zeros(count, dtype=bool),
        boundary_values=np.zeros(count),
    )


def taylor_hood(mesh: Mesh) -> TaylorHoodPair:
    # each P1 hat integrates to a third of every triangle it lives on
    thirds = np.repeat(mesh.signed_areas() / 3.0, 3)
    return TaylorHoodPair(
        velocity=build_dofmap(mesh, 2, "vector"),
        pressure=build_dofmap(mesh, 1, "scalar"),
        mean_constraint=np.bincount(mesh.triangles.ravel(), thirds, minlength=mesh.n_vertices),
    )


def _as_nodal(value: object, n: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()


def interpolate(space: Space, f: Callable[..., object]) -> np.ndarray:
    """
    Nodal interpolant of ``f(x, y)``. Vector spaces expect ``f`` to return the pair of
    component values.
    """

    x, y = space.dof_coords.T
    n = space.n_scalar
    result = f(x, y)
    if space.kind == "vector":
        return np.concatenate([_as_nodal(result[0], n), _as_nodal(result[1], n)])
    return _as_nodal(result, n)


@dataclass(frozen=True, slots=True)
class ElementTables:
    """Quadrature data for a set of cells: physical points, weights and basis gradients."""

    cells: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    values: dict[int, np.ndarray] = field(default_factory=dict)
    gradients: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def n_cells(self) -> int:
        return len(self.cells)


def _affine_maps(mesh: Mesh, cells: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    tri = mesh.triangles[cells]
    p0 = mesh.vertices[tri[:, 0]]
    jac = np.stack([mesh.vertices[tri[:, 1]] - p0, mesh.vertices[tri[:, 2]] - p0], axis=2)
    return p0, jac, np.linalg.inv(jac).transpose(0, 2, 1)


def element_tables(
    mesh: Mesh,
    quad: Quadrature,
    cells: np.ndarray | None = None,
    degrees: tuple[int, ...] = SUPPORTED_DEGREES,
) -> ElementTables:
    cells = np.arange(mesh.n_triangles) if cells is None else np.asarray(cells)
    p0, jac, inv_t = _affine_maps(mesh, cells)
    det = np.abs(np.linalg.det(jac))

    points = p0[:, None, :] + np.einsum("cij,qj->cqi", jac, quad.points[:, 1:])
    weights = det[:, None] * quad.weights[None, :]

    values: dict[int, np.ndarray] = {}
    gradients: dict[int, np.ndarray] = {}
    for degree in degrees:
        ref_values, ref_grads = basis_tables(degree, quad.points)
        values[degree] = ref_values
        gradients[degree] = np.einsum("cij,qbj->cqbi", inv_t, ref_grads)
    return ElementTables(cells=cells, points=points, weights=weights, values=values, gradients=gradients)


def evaluate(space: Space, coeffs: np.ndarray, tables: ElementTables) -> tuple[np.ndarray, np.ndarray]:
    """
    Values and gradients of a discrete field at the quadrature points of ``tables``.

    Scalar fields give shapes (nc, nq) and (nc, nq, 2); vector fields (nc, nq, 2) and
    (nc, nq, 2, 2) with ``grad[..., i, k] = d u_i / d x_k``.
    """

    dofs = space.cell_dofs[tables.cells]
    basis = tables.values[space.degree]
    grads = tables.gradients[space.degree]
    if space.kind == "scalar":
        local = coeffs[dofs]
        return np.einsum("cb,qb->cq", local, basis), np.einsum("cb,cqbd->cqd", local, grads)

    n = space.n_scalar
    local = np.stack([coeffs[dofs], coeffs[n + dofs]], axis=1)
    return np.einsum("cib,qb->cqi", local, basis), np.einsum("cib,cqbd->cqid", local, grads)


def evaluate_at(space: Space, coeffs: np.ndarray, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Point evaluation of a discrete field and its gradient at arbitrary points of the domain."""

    cells, bary = locate_points(space.mesh, points)
    values, ref_grads = basis_tables(space.degree, bary)
    _, _, inv_t = _affine_maps(space.mesh, cells)
    grads = np.einsum("pij,pbj->pbi", inv_t, ref_grads)
    dofs = space.cell_dofs[cells]

    if space.kind == "scalar":
        local = coeffs[dofs]
        return np.einsum("pb,pb->p", local, values), np.einsum("pb,pbd->pd", local, grads)

    n = space.n_scalar
    local = np.stack([coeffs[dofs], coeffs[n + dofs]], axis=1)
    return np.einsum("pib,pb->pi", local, values), np.einsum("pib,pbd->pid", local, grads)


def element_stiffness(tables: ElementTables, degree: int, coefficient: np.ndarray | None = None) -> np.ndarray:
    """Local matrices of ``int a grad(chi) . grad(psi)`` with ``a`` given at quadrature points."""

    grads = tables.gradients[degree]
    weights = tables.weights if coefficient is None else tables.weights * coefficient
    return np.einsum("cq,cqid,cqjd->cij", weights, grads, grads)


def scatter(
    row_dofs: np.ndarray,
    col_dofs: np.ndarray,
    local: np.ndarray,
    row_offset: int = 0,
    col_offset: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """COO triplets of local matrices (nc, a, b) placed at the given global dofs."""

    rows = np.broadcast_to((row_offset + row_dofs)[:, :, None], local.shape)
    cols = np.broadcast_to((col_offset + col_dofs)[:, None, :], local.shape)
    return rows.ravel(), cols.ravel(), local.ravel()


def stiffness_matrix(space: Space, quad: Quadrature | None = None) -> sparse.csr_matrix:
    if space.kind != "scalar":
        raise ValueError("Stiffness matrices are assembled for scalar spaces only.")
    tables = element_tables(space.mesh, quad or element_quadrature(), degrees=(space.degree,))
    dofs = space.cell_dofs[tables.cells]
    rows, cols, vals = scatter(dofs, dofs, element_stiffness(tables, space.degree))
    n = space.n_scalar
    return sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
