from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import BOUNDARY_TAGS

# Local edge k of a triangle joins these local vertices; P2 edge dofs follow the same order.
LOCAL_EDGES = np.array([[0, 1], [1, 2], [2, 0]])


@dataclass(frozen=True, slots=True)
class Mesh:
    """
    Conforming triangulation of the rectangle ``[0, width] x [0, height]``.

    The domain is a polygon, so straight boundary edges represent it exactly and no
    curved boundary elements are needed. ``nx``/``ny`` describe the structured cell grid
    the triangles are cut from; every triangle is one half of a grid cell, split along the
    cell diagonal from its lower-left to its upper-right corner.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    triangle_edges: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    width: float
    height: float
    nx: int
    ny: int
    level: int = 0

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def area(self) -> float:
        return self.width * self.height

    def signed_areas(self) -> np.ndarray:
        p0, p1, p2 = (self.vertices[self.triangles[:, k]] for k in range(3))
        d1 = p1 - p0
        d2 = p2 - p0
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]], axis=1)

    def diameters(self) -> np.ndarray:
        return self.edge_lengths()[self.triangle_edges].max(axis=1)

    def shape_ratios(self) -> np.ndarray:
        """Circumradius over inradius for every triangle (2 for equilateral ones)."""

        sides = self.edge_lengths()[self.triangle_edges]
        area = self.signed_areas()
        circumradius = sides.prod(axis=1) / (4.0 * area)
        inradius = area / (0.5 * sides.sum(axis=1))
        return circumradius / inradius

    def quasi_uniformity(self) -> float:
        diam = self.diameters()
        return float(diam.max() / diam.min())

    def edges_with_tag(self, *tags: str) -> np.ndarray:
        for tag in tags:
            if tag not in BOUNDARY_TAGS:
                raise ValueError(f"Unknown boundary tag '{tag}'.")
        return self.boundary_edges[np.isin(self.boundary_tags, tags)]

    def vertices_with_tag(self, *tags: str) -> np.ndarray:
        return np.unique(self.edges[self.edges_with_tag(*tags)])


def _edge_structure(triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pairs = np.sort(triangles[:, LOCAL_EDGES].reshape(-1, 2), axis=1)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    triangle_edges = inverse.reshape(-1, 3)
    counts = np.bincount(triangle_edges.ravel(), minlength=len(edges))
    if counts.max() > 2:
        raise ValueError("Non-conforming triangulation: an edge is shared by more than two triangles.")
    boundary = np.flatnonzero(counts == 1)
    return edges, triangle_edges, boundary


def _tag_by_side(vertices: np.ndarray, edges: np.ndarray, width: float, height: float) -> np.ndarray:
    mid = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
    tol = 1e-12 * max(width, height)
    tags = np.full(len(edges), "", dtype=object)
    tags[np.abs(mid[:, 1] - height) <= tol] = "top"
    tags[np.abs(mid[:, 1]) <= tol] = "bottom"
    tags[np.abs(mid[:, 0]) <= tol] = "left"
    tags[np.abs(mid[:, 0] - width) <= tol] = "right"
    if np.any(tags == ""):
        raise ValueError("Boundary edge found off the rectangle sides.")
    return tags.astype(str)


def build_rectangle(width: float, height: float, nx: int, ny: int) -> Mesh:
    """
    Structured triangulation of ``[0, width] x [0, height]`` with ``2 * nx * ny`` triangles.
    """

    if width <= 0 or height <= 0:
        raise ValueError(f"Rectangle dimensions must be positive, got {width} x {height}.")
    if nx < 1 or ny < 1:
        raise ValueError(f"Subdivisions must be at least 1, got nx={nx}, ny={ny}.")

    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    gx, gy = np.meshgrid(xs, ys)
    vertices = np.column_stack([gx.ravel(), gy.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    a = (j * (nx + 1) + i).ravel()
    b = a + 1
    c = a + nx + 2
    d = a + nx + 1
    triangles = np.stack(
        [np.column_stack([a, b, c]), np.column_stack([a, c, d])], axis=1
    ).reshape(-1, 3)

    edges, triangle_edges, boundary = _edge_structure(triangles)
    tags = _tag_by_side(vertices, edges[boundary], width, height)
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        triangle_edges=triangle_edges,
        boundary_edges=boundary,
        boundary_tags=tags,
        width=float(width),
        height=float(height),
        nx=nx,
        ny=ny,
        level=0,
    )


def refine_uniform(mesh: Mesh) -> Mesh:
    """
    Red refinement: every triangle is cut into four congruent children through its edge
    midpoints. Edge ``e`` of the parent mesh becomes vertex ``n_vertices + e``, so the
    refined vertex list coincides with the parent's P2 node list.
    """

    nv = mesh.n_vertices
    midpoints = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = np.vstack([mesh.vertices, midpoints])

    v0, v1, v2 = mesh.triangles.T
    m01, m12, m20 = (nv + mesh.triangle_edges).T
    triangles = np.stack(
        [
            np.column_stack([v0, m01, m20]),
            np.column_stack([m01, v1, m12]),
            np.column_stack([m20, m12, v2]),
            np.column_stack([m01, m12, m20]),
        ],
        axis=1,
    ).reshape(-1, 3)

    edges, triangle_edges, boundary = _edge_structure(triangles)

    parent_tags = np.full(mesh.n_edges, "", dtype=object)
    parent_tags[mesh.boundary_edges] = mesh.boundary_tags
    # each new boundary edge joins an old vertex to the midpoint of its parent edge
    parents = edges[boundary, 1] - nv
    tags = parent_tags[parents].astype(str)

    return Mesh(
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        triangle_edges=triangle_edges,
        boundary_edges=boundary,
        boundary_tags=tags,
        width=mesh.width,
        height=mesh.height,
        nx=2 * mesh.nx,
        ny=2 * mesh.ny,
        level=mesh.level + 1,
    )


def refine(mesh: Mesh, levels: int) -> Mesh:
    for _ in range(levels):
        mesh = refine_uniform(mesh)
    return mesh


def mesh_size(mesh: Mesh) -> float:
    return float(mesh.diameters().max())


def locate_points(mesh: Mesh, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Find the triangle containing every point and its barycentric coordinates there.

    Uses the structured cell grid, so the cost is linear in the number of points.
    Points on shared edges are assigned to one of the neighbours.
    """

    points = np.asarray(points, dtype=float).reshape(-1, 2)
    hx = mesh.width / mesh.nx
    hy = mesh.height / mesh.ny

    def _cells(xy: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        s = xy[:, 0] / hx
        t = xy[:, 1] / hy
        i = np.clip(np.floor(s).astype(int), 0, mesh.nx - 1)
        j = np.clip(np.floor(t).astype(int), 0, mesh.ny - 1)
        upper = (t - j) > (s - i)
        return i, j, upper.astype(int)

    lookup = np.empty((mesh.ny, mesh.nx, 2), dtype=int)
    ci, cj, cu = _cells(mesh.vertices[mesh.triangles].mean(axis=1))
    lookup[cj, ci, cu] = np.arange(mesh.n_triangles)

    i, j, upper = _cells(points)
    cells = lookup[j, i, upper]

    p0 = mesh.vertices[mesh.triangles[cells, 0]]
    jac = np.stack(
        [
            mesh.vertices[mesh.triangles[cells, 1]] - p0,
            mesh.vertices[mesh.triangles[cells, 2]] - p0,
        ],
        axis=2,
    )
    xi = np.linalg.solve(jac, (points - p0)[:, :, None])[:, :, 0]
    bary = np.column_stack([1.0 - xi.sum(axis=1), xi])
    return cells, bary
