from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from types import SimpleNamespace
from typing import Callable

import numpy as np
from scipy import sparse

from .fespace import (
    ElementTables,
    Quadrature,
    Space,
    TaylorHoodPair,
    build_dofmap,
    element_quadrature,
    element_tables,
    evaluate,
    interpolate,
    scatter,
    taylor_hood,
)
from .mesh import Mesh
from .model import CaseSetup, CoefficientLaws, ModelParams, cutoff, cutoff_jacobian, normal_component

FIELDS = ("phi", "T", "u", "p")


@dataclass(frozen=True, slots=True)
class BlockLayout:
    """Unknown ordering: phi, T, u_1, u_2, p, lambda_p and (cavity) lambda_phi."""

    n_scalar: int
    n_velocity: int
    n_pressure: int
    mean_concentration: bool

    @property
    def phi(self) -> slice:
        return slice(0, self.n_scalar)

    @property
    def T(self) -> slice:
        return slice(self.n_scalar, 2 * self.n_scalar)

    @property
    def u(self) -> slice:
        start = 2 * self.n_scalar
        return slice(start, start + 2 * self.n_velocity)

    @property
    def p(self) -> slice:
        start = 2 * self.n_scalar + 2 * self.n_velocity
        return slice(start, start + self.n_pressure)

    @property
    def lambda_p(self) -> int:
        return self.p.stop

    @property
    def lambda_phi(self) -> int | None:
        return self.p.stop + 1 if self.mean_concentration else None

    @property
    def size(self) -> int:
        return self.p.stop + 1 + int(self.mean_concentration)

    def blocks(self) -> list[tuple[str, slice]]:
        blocks = [
            ("phi", self.phi),
            ("T", self.T),
            ("u", self.u),
            ("p", self.p),
            ("lambda_p", slice(self.lambda_p, self.lambda_p + 1)),
        ]
        if self.mean_concentration:
            blocks.append(("lambda_phi", slice(self.lambda_phi, self.lambda_phi + 1)))
        return blocks

    def block_of(self, index: int) -> str:
        for name, block in self.blocks():
            if block.start <= index < block.stop:
                return name
        raise IndexError(index)


@dataclass(slots=True)
class FieldState:
    """
    Coefficient vectors of a discrete state. ``phi`` holds the full concentration,
    boundary values included.
    """

    phi: np.ndarray
    T: np.ndarray
    u: np.ndarray
    p: np.ndarray
    lambda_p: float = 0.0
    lambda_phi: float = 0.0

    def to_vector(self, layout: BlockLayout) -> np.ndarray:
        vec = np.zeros(layout.size)
        vec[layout.phi] = self.phi
        vec[layout.T] = self.T
        vec[layout.u] = self.u
        vec[layout.p] = self.p
        vec[layout.lambda_p] = self.lambda_p
        if layout.mean_concentration:
            vec[layout.lambda_phi] = self.lambda_phi
        return vec

    @classmethod
    def from_vector(cls, vec: np.ndarray, layout: BlockLayout) -> "FieldState":
        if len(vec) != layout.size:
            raise ValueError(f"State vector has length {len(vec)}, layout expects {layout.size}.")
        return cls(
            phi=vec[layout.phi].copy(),
            T=vec[layout.T].copy(),
            u=vec[layout.u].copy(),
            p=vec[layout.p].copy(),
            lambda_p=float(vec[layout.lambda_p]),
            lambda_phi=float(vec[layout.lambda_phi]) if layout.mean_concentration else 0.0,
        )

    def copy(self) -> "FieldState":
        return FieldState(self.phi.copy(), self.T.copy(), self.u.copy(), self.p.copy(), self.lambda_p, self.lambda_phi)


@dataclass(frozen=True, slots=True)
class SparseSystem:
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    layout: BlockLayout
    constrained: np.ndarray


@dataclass(slots=True)
class Discretization:
    """Spaces, quadrature and essential-condition data of one mesh and case."""

    mesh: Mesh
    case: CaseSetup
    phi_space: Space
    T_space: Space
    flow: TaylorHoodPair
    quad: Quadrature
    layout: BlockLayout
    constrained: np.ndarray
    boundary_values: np.ndarray
    chunk_size: int = 4096
    workers: int = 1
    _tables: dict[int, ElementTables] = field(default_factory=dict, repr=False)

    @property
    def scalar_degree(self) -> int:
        return self.phi_space.degree

    @property
    def n_chunks(self) -> int:
        return -(-self.mesh.n_triangles // self.chunk_size)

    def tables(self, chunk: int) -> ElementTables:
        if chunk not in self._tables:
            cells = np.arange(chunk * self.chunk_size, min((chunk + 1) * self.chunk_size, self.mesh.n_triangles))
            self._tables[chunk] = element_tables(self.mesh, self.quad, cells)
        return self._tables[chunk]

    def subset_tables(self, cells: np.ndarray) -> ElementTables:
        return element_tables(self.mesh, self.quad, np.asarray(cells))


def _condition_values(space: Space, nodes: np.ndarray, value: float | Callable[..., object]) -> np.ndarray | float:
    if callable(value):
        x, y = space.dof_coords[nodes].T
        return np.broadcast_to(np.asarray(value(x, y), dtype=float), (len(nodes),))
    return float(value)


def discretize(
    mesh: Mesh,
    case: CaseSetup,
    scalar_degree: int = 2,
    quad_order: int = 6,
    chunk_size: int = 4096,
    workers: int = 1,
) -> Discretization:
    """
    Build the spaces of a case on ``mesh``. Slip conditions are applied first and plain
    Dirichlet conditions afterwards, so Dirichlet values win on shared corner dofs.
    """

    if abs(mesh.width - case.width) > 1e-12 or abs(mesh.height - case.height) > 1e-12:
        raise ValueError(
            f"Mesh covers {mesh.width} x {mesh.height} but case '{case.case_id}' expects {case.width} x {case.height}."
        )

    spaces = {
        "phi": build_dofmap(mesh, scalar_degree),
        "T": build_dofmap(mesh, scalar_degree),
    }
    flow = taylor_hood(mesh)
    velocity = flow.velocity
    n_v = velocity.n_scalar

    for tag in case.slip:
        comp = normal_component(tag)
        velocity = velocity.with_constraints(comp * n_v + velocity.boundary_dofs(tag), 0.0)

    for cond in case.dirichlet:
        if cond.field == "u":
            nodes = velocity.boundary_dofs(*cond.tags)
            comps = (0, 1) if cond.component is None else (cond.component,)
            for comp in comps:
                velocity = velocity.with_constraints(comp * n_v + nodes, _condition_values(velocity, nodes, cond.value))
        else:
            space = spaces[cond.field]
            nodes = space.boundary_dofs(*cond.tags)
            spaces[cond.field] = space.with_constraints(nodes, _condition_values(space, nodes, cond.value))

    flow = TaylorHoodPair(velocity=velocity, pressure=flow.pressure, mean_constraint=flow.mean_constraint)
    layout = BlockLayout(
        n_scalar=spaces["phi"].n_scalar,
        n_velocity=n_v,
        n_pressure=flow.pressure.n_scalar,
        mean_concentration=case.mean_concentration,
    )
    n_mult = layout.size - layout.p.stop
    constrained = np.concatenate(
        [
            spaces["phi"].constrained,
            spaces["T"].constrained,
            velocity.constrained,
            flow.pressure.constrained,
            np.zeros(n_mult, dtype=bool),
        ]
    )
    values = np.concatenate(
        [
            spaces["phi"].boundary_values,
            spaces["T"].boundary_values,
            velocity.boundary_values,
            flow.pressure.boundary_values,
            np.zeros(n_mult),
        ]
    )
    return Discretization(
        mesh=mesh,
        case=case,
        phi_space=spaces["phi"],
        T_space=spaces["T"],
        flow=flow,
        quad=element_quadrature(quad_order),
        layout=layout,
        constrained=constrained,
        boundary_values=values,
        chunk_size=chunk_size,
        workers=workers,
    )


def lifted_state(disc: Discretization, phi_fill: float = 0.0) -> FieldState:
    """Zero fields (``phi`` set to ``phi_fill``) carrying the essential boundary values."""

    vec = np.zeros(disc.layout.size)
    vec[disc.layout.phi] = phi_fill
    vec[disc.constrained] = disc.boundary_values[disc.constrained]
    return FieldState.from_vector(vec, disc.layout)


def interpolate_state(
    disc: Discretization,
    phi: Callable[..., object],
    T: Callable[..., object],
    u: Callable[..., object],
    p: Callable[..., object],
) -> FieldState:
    return FieldState(
        phi=interpolate(disc.phi_space, phi),
        T=interpolate(disc.T_space, T),
        u=interpolate(disc.flow.velocity, u),
        p=interpolate(disc.flow.pressure, p),
    )


def _source(fn: Callable[..., object] | None, points: np.ndarray, vector: bool = False) -> np.ndarray | float:
    if fn is None:
        return 0.0
    values = fn(points[..., 0], points[..., 1])
    if vector:
        return np.stack([np.broadcast_to(np.asarray(v, dtype=float), points.shape[:-1]) for v in values], axis=-1)
    return np.broadcast_to(np.asarray(values, dtype=float), points.shape[:-1])


def _quadrature_fields(
    disc: Discretization,
    state: FieldState,
    tables: ElementTables,
    params: ModelParams,
    laws: CoefficientLaws,
) -> SimpleNamespace:
    phi, gphi = evaluate(disc.phi_space, state.phi, tables)
    T, gT = evaluate(disc.T_space, state.T, tables)
    u, gu = evaluate(disc.flow.velocity, state.u, tables)
    p, _ = evaluate(disc.flow.pressure, state.p, tables)
    pf = params.prefactors()

    h = laws.h(phi)
    thermo = h[..., None] * gT
    j = -(gphi + pf.thermophoresis * thermo)
    q = SimpleNamespace(
        phi=phi, gphi=gphi, T=T, gT=gT, u=u, gu=gu, p=p, pf=pf, j=j, thermo=thermo,
        h=h, dh=laws.dh(phi), k=laws.k(phi), dk=laws.dk(phi), mu=laws.mu(phi), dmu=laws.dmu(phi),
        eta=laws.eta(phi), deta=laws.deta(phi), rho=laws.rho(phi), drho=laws.drho(phi),
    )
    q.limited = thermo if params.cutoff_radius is None else cutoff(thermo, params.cutoff_radius)
    q.limiter = None if params.cutoff_radius is None else cutoff_jacobian(thermo, params.cutoff_radius)
    return q


def _chunk_residual(
    disc: Discretization,
    state: FieldState,
    tables: ElementTables,
    params: ModelParams,
    laws: CoefficientLaws,
) -> dict[str, np.ndarray]:
    q = _quadrature_fields(disc, state, tables, params, laws)
    pf = q.pf
    w = tables.weights
    ds = disc.scalar_degree
    Ns, Gs = tables.values[ds], tables.gradients[ds]
    Nv, Gv = tables.values[2], tables.gradients[2]
    Np = tables.values[1]
    case = disc.case
    e_g = np.asarray(params.e_g)

    s_phi = _source(case.s_phi, tables.points)
    f = _source(case.f, tables.points)
    g = _source(case.g, tables.points, vector=True)

    u_gphi = np.einsum("cqd,cqd->cq", q.u, q.gphi)

    # concentration: u.grad(phi) psi + c (grad phi + tau sigma(h grad T)) . grad psi
    flux_phi = pf.phi_diffusion * (q.gphi + pf.thermophoresis * q.limited)
    r_phi = np.einsum("cq,qb->cb", w * (u_gphi - s_phi), Ns)
    r_phi += np.einsum("cq,cqd,cqbd->cb", w, flux_phi, Gs)
    r_phi += state.lambda_phi * np.einsum("cq,qb->cb", w, Ns)

    # heat: kappa k grad T . grad theta + (a j + eta u) . grad T theta + c T (u . grad phi) theta
    r_T = np.einsum("cq,cqd,cqbd->cb", w * pf.conduction * q.k, q.gT, Gs)
    carrier = pf.heat_flux * q.j + q.eta[..., None] * q.u
    heat = np.einsum("cqd,cqd->cq", carrier, q.gT) + pf.heat_coupling * q.T * u_gphi
    r_T += np.einsum("cq,qb->cb", w * (heat - f), Ns)

    # momentum: nu (mu/2) D(u):D(v) + (b j + rho u) . grad u . v + c (u . grad phi) u . v
    #   - p div v + beta T e_g . v
    strain = q.gu + np.swapaxes(q.gu, -1, -2)
    advect = pf.momentum_flux * q.j + q.rho[..., None] * q.u
    body = np.einsum("cqk,cqik->cqi", advect, q.gu) + pf.momentum_coupling * u_gphi[..., None] * q.u
    body += pf.buoyancy * q.T[..., None] * e_g - g
    r_u = np.einsum("cq,cqik,cqbk->cib", w * pf.viscosity * q.mu, strain, Gv)
    r_u += np.einsum("cq,cqi,qb->cib", w, body, Nv)
    r_u -= np.einsum("cq,cqbi->cib", w * q.p, Gv)

    div_u = q.gu[..., 0, 0] + q.gu[..., 1, 1]
    r_p = np.einsum("cq,qb->cb", w * div_u, Np)
    r_p += state.lambda_p * np.einsum("cq,qb->cb", w, Np)

    return {
        "phi": r_phi,
        "T": r_T,
        "u": r_u,
        "p": r_p,
        "int_p": np.array([np.sum(w * q.p)]),
        "int_phi": np.array([np.sum(w * q.phi)]),
    }


def _map_chunks(disc: Discretization, kernel: Callable[[ElementTables], object], cells: np.ndarray | None) -> list:
    if cells is not None:
        return [kernel(disc.subset_tables(cells))]
    chunks = range(disc.n_chunks)
    if disc.workers > 1:
        with ThreadPoolExecutor(max_workers=disc.workers) as pool:
            return list(pool.map(lambda c: kernel(disc.tables(c)), chunks))
    return [kernel(disc.tables(c)) for c in chunks]


def assemble_residual(
    disc: Discretization,
    state: FieldState,
    params: ModelParams,
    laws: CoefficientLaws,
) -> np.ndarray:
    """
    Weak residual tested against every basis function, followed by the multiplier rows
    ``int p`` and (mean-concentration cases) ``int phi - phi_m |Omega|``. Essential rows
    are left as assembled; see :func:`apply_constraints`.
    """

    layout = disc.layout
    n_s, n_v = layout.n_scalar, layout.n_velocity
    residual = np.zeros(layout.size)

    for chunk in _map_chunks(disc, lambda t: (t, _chunk_residual(disc, state, t, params, laws)), None):
        tables, local = chunk
        s_dofs = disc.phi_space.cell_dofs[tables.cells]
        v_dofs = disc.flow.velocity.cell_dofs[tables.cells]
        p_dofs = disc.flow.pressure.cell_dofs[tables.cells]
        residual[layout.phi] += np.bincount(s_dofs.ravel(), local["phi"].ravel(), minlength=n_s)
        residual[layout.T] += np.bincount(s_dofs.ravel(), local["T"].ravel(), minlength=n_s)
        u_dofs = np.concatenate([v_dofs, n_v + v_dofs], axis=1)
        residual[layout.u] += np.bincount(u_dofs.ravel(), local["u"].reshape(len(v_dofs), -1).ravel(), minlength=2 * n_v)
        residual[layout.p] += np.bincount(p_dofs.ravel(), local["p"].ravel(), minlength=layout.n_pressure)
        residual[layout.lambda_p] += local["int_p"][0]
        if layout.mean_concentration:
            residual[layout.lambda_phi] += local["int_phi"][0]

    if layout.mean_concentration:
        residual[layout.lambda_phi] -= params.phi_m * disc.mesh.area
    return residual


def _chunk_jacobian(
    disc: Discretization,
    state: FieldState,
    tables: ElementTables,
    params: ModelParams,
    laws: CoefficientLaws,
) -> sparse.csr_matrix:
    q = _quadrature_fields(disc, state, tables, params, laws)
    pf = q.pf
    layout = disc.layout
    w = tables.weights
    ds = disc.scalar_degree
    Ns, Gs = tables.values[ds], tables.gradients[ds]
    Nv, Gv = tables.values[2], tables.gradients[2]
    Np = tables.values[1]
    e_g = params.e_g
    tau = pf.thermophoresis

    def mass(coef: np.ndarray | float, n_row: np.ndarray, n_col: np.ndarray) -> np.ndarray:
        return np.einsum("cq,qa,qb->cab", w * coef, n_row, n_col)

    def advect(vec: np.ndarray, n_row: np.ndarray, g_col: np.ndarray) -> np.ndarray:
        # int (vec . grad col) row
        return np.einsum("cq,qa,cqd,cqbd->cab", w, n_row, vec, g_col)

    def transport(vec: np.ndarray, g_row: np.ndarray, n_col: np.ndarray) -> np.ndarray:
        # int (vec . grad row) col
        return np.einsum("cq,cqad,cqd,qb->cab", w, g_row, vec, n_col)

    def diffusion(coef: np.ndarray | float, g_row: np.ndarray, g_col: np.ndarray) -> np.ndarray:
        return np.einsum("cq,cqad,cqbd->cab", w * coef, g_row, g_col)

    s_dofs = disc.phi_space.cell_dofs[tables.cells]
    v_dofs = disc.flow.velocity.cell_dofs[tables.cells]
    p_dofs = disc.flow.pressure.cell_dofs[tables.cells]
    n_v = layout.n_velocity
    off_phi, off_T, off_u, off_p = layout.phi.start, layout.T.start, layout.u.start, layout.p.start

    gT2 = np.einsum("cqd,cqd->cq", q.gT, q.gT)
    u_gT = np.einsum("cqd,cqd->cq", q.u, q.gT)
    u_gphi = np.einsum("cqd,cqd->cq", q.u, q.gphi)
    hp_gT = q.dh[..., None] * q.gT

    # concentration rows
    if q.limiter is None:
        phi_phi_thermo = transport(hp_gT, Gs, Ns)
        phi_T = diffusion(pf.phi_diffusion * tau * q.h, Gs, Gs)
    else:
        phi_phi_thermo = transport(np.einsum("cqde,cqe->cqd", q.limiter, hp_gT), Gs, Ns)
        phi_T = np.einsum("cq,cqad,cqde,cqbe->cab", w * pf.phi_diffusion * tau * q.h, Gs, q.limiter, Gs)
    phi_phi = pf.phi_diffusion * diffusion(1.0, Gs, Gs) + advect(q.u, Ns, Gs) + pf.phi_diffusion * tau * phi_phi_thermo

    blocks = [
        (s_dofs, s_dofs, phi_phi, off_phi, off_phi),
        (s_dofs, s_dofs, phi_T, off_phi, off_T),
    ]
    for l in range(2):
        blocks.append((s_dofs, v_dofs, mass(q.gphi[..., l], Ns, Nv), off_phi, off_u + l * n_v))

    # heat rows
    a_T = pf.heat_flux
    c_T = pf.heat_coupling
    T_phi = pf.conduction * transport(q.dk[..., None] * q.gT, Gs, Ns)
    T_phi += -a_T * advect(q.gT, Ns, Gs)
    T_phi += mass(-a_T * tau * q.dh * gT2 + q.deta * u_gT, Ns, Ns)
    T_phi += advect(c_T * q.T[..., None] * q.u, Ns, Gs)
    carrier = a_T * q.j + q.eta[..., None] * q.u - a_T * tau * q.h[..., None] * q.gT
    T_T = pf.conduction * diffusion(q.k, Gs, Gs) + advect(carrier, Ns, Gs) + mass(c_T * u_gphi, Ns, Ns)
    blocks += [
        (s_dofs, s_dofs, T_phi, off_T, off_phi),
        (s_dofs, s_dofs, T_T, off_T, off_T),
    ]
    for l in range(2):
        T_u = mass(q.eta * q.gT[..., l] + c_T * q.T * q.gphi[..., l], Ns, Nv)
        blocks.append((s_dofs, v_dofs, T_u, off_T, off_u + l * n_v))

    # momentum rows
    b_u = pf.momentum_flux
    c_u = pf.momentum_coupling
    strain = q.gu + np.swapaxes(q.gu, -1, -2)
    advect_u = b_u * q.j + q.rho[..., None] * q.u
    mu_w = w * pf.viscosity * q.mu
    for i in range(2):
        row_off = off_u + i * n_v
        grad_ui = q.gu[..., i, :]
        u_phi = transport(pf.viscosity * q.dmu[..., None] * strain[..., i, :], Gv, Ns)
        u_phi += -b_u * advect(grad_ui, Nv, Gs)
        u_phi += advect(c_u * q.u[..., i, None] * q.u, Nv, Gs)
        u_phi += mass(
            -b_u * tau * q.dh * np.einsum("cqd,cqd->cq", q.gT, grad_ui) + q.drho * np.einsum("cqd,cqd->cq", q.u, grad_ui),
            Nv,
            Ns,
        )
        u_T = -b_u * tau * advect(q.h[..., None] * grad_ui, Nv, Gs) + pf.buoyancy * e_g[i] * mass(1.0, Nv, Ns)
        blocks += [
            (v_dofs, s_dofs, u_phi, row_off, off_phi),
            (v_dofs, s_dofs, u_T, row_off, off_T),
        ]
        for l in range(2):
            u_u = np.einsum("cq,cqa,cqb->cab", mu_w, Gv[..., l], Gv[..., i])
            u_u += mass(q.rho * q.gu[..., i, l] + c_u * q.gphi[..., l] * q.u[..., i], Nv, Nv)
            if i == l:
                u_u += np.einsum("cq,cqad,cqbd->cab", mu_w, Gv, Gv) + advect(advect_u, Nv, Gv)
                u_u += mass(c_u * u_gphi, Nv, Nv)
            blocks.append((v_dofs, v_dofs, u_u, row_off, off_u + l * n_v))
        blocks.append((v_dofs, p_dofs, -np.einsum("cq,cqa,qb->cab", w, Gv[..., i], Np), row_off, off_p))
        blocks.append((p_dofs, v_dofs, np.einsum("cq,qa,cqb->cab", w, Np, Gv[..., i]), off_p, row_off))

    rows, cols, vals = [], [], []
    for row_dofs, col_dofs, local, row_off, col_off in blocks:
        r, c, v = scatter(row_dofs, col_dofs, local, row_off, col_off)
        rows.append(r)
        cols.append(c)
        vals.append(v)

    # multiplier rows and columns
    int_p = np.einsum("cq,qb->cb", w, Np)
    lam_p = np.full(int_p.size, layout.lambda_p)
    rows += [off_p + p_dofs.ravel(), lam_p]
    cols += [lam_p, off_p + p_dofs.ravel()]
    vals += [int_p.ravel(), int_p.ravel()]
    if layout.mean_concentration:
        int_s = np.einsum("cq,qb->cb", w, Ns)
        lam_phi = np.full(int_s.size, layout.lambda_phi)
        rows += [off_phi + s_dofs.ravel(), lam_phi]
        cols += [lam_phi, off_phi + s_dofs.ravel()]
        vals += [int_s.ravel(), int_s.ravel()]

    n = layout.size
    return sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()


def assemble_jacobian(
    disc: Discretization,
    state: FieldState,
    params: ModelParams,
    laws: CoefficientLaws,
    cells: np.ndarray | None = None,
    residual: np.ndarray | None = None,
) -> SparseSystem:
    """
    Exact derivative of :func:`assemble_residual` at ``state``, multiplier rows and
    columns included. ``cells`` restricts the element loop to a subset of triangles.
    """

    matrices = _map_chunks(disc, lambda t: _chunk_jacobian(disc, state, t, params, laws), cells)
    matrix = matrices[0]
    for chunk in matrices[1:]:
        matrix = matrix + chunk
    if cells is not None:
        rhs = np.zeros(disc.layout.size)
    elif residual is not None:
        rhs = residual
    else:
        rhs = assemble_residual(disc, state, params, laws)
    return SparseSystem(matrix=matrix.tocsr(), rhs=rhs, layout=disc.layout, constrained=disc.constrained)


def apply_constraints(system: SparseSystem) -> SparseSystem:
    """
    Turn essential rows into identity rows with zero residual. Columns of essential dofs
    are cleared as well: Newton updates vanish there.
    """

    free = (~system.constrained).astype(float)
    keep = sparse.diags(free)
    matrix = keep @ system.matrix @ keep + sparse.diags(system.constrained.astype(float))
    return SparseSystem(
        matrix=matrix.tocsr(),
        rhs=system.rhs * free,
        layout=system.layout,
        constrained=system.constrained,
    )


def stokes_block(system: SparseSystem) -> sparse.csr_matrix:
    """Velocity-velocity block of an assembled system."""

    block = system.layout.u
    return system.matrix[block, block]
