from __future__ import annotations

import numpy as np
import pytest

from nanoflow.assembly import (
    FieldState,
    apply_constraints,
    assemble_jacobian,
    assemble_residual,
    discretize,
    interpolate_state,
    lifted_state,
    stokes_block,
)
from nanoflow.constants import TABLE_PARAMS
from nanoflow.fespace import stiffness_matrix
from nanoflow.mesh import build_rectangle
from nanoflow.model import (
    CaseSetup,
    EssentialCondition,
    ModelParams,
    cavity_case,
    coefficients_alumina,
    coefficients_mild,
)


def _random_state(disc, rng) -> FieldState:
    """A smooth-ish state away from the cut-off sphere: phi in (0.2, 0.6), grad T close to (2, 0)."""

    state = lifted_state(disc)
    x, _ = disc.T_space.dof_coords.T
    n_s = disc.layout.n_scalar
    state.phi = 0.2 + 0.4 * rng.random(n_s)
    state.T = 2.0 * x + 0.02 * rng.standard_normal(n_s)
    state.u = 0.5 * rng.standard_normal(state.u.size)
    state.p = rng.standard_normal(state.p.size)
    state.lambda_p = 0.3
    state.lambda_phi = -0.2
    return state


def _fd_error(disc, state, params, laws, direction, eps):
    layout = disc.layout
    vec = state.to_vector(layout)
    exact = assemble_jacobian(disc, state, params, laws).matrix @ direction
    plus = assemble_residual(disc, FieldState.from_vector(vec + eps * direction, layout), params, laws)
    minus = assemble_residual(disc, FieldState.from_vector(vec - eps * direction, layout), params, laws)
    fd = (plus - minus) / (2 * eps)
    return np.linalg.norm(exact - fd) / np.linalg.norm(exact)


# phi diffusion 1/2 against unit heat and momentum flux: both coupling factors are -1
COUPLED_PARAMS = {"Re": 1.0, "Pr": 1.0, "Sc": 2.0, "Sc_f": 1.0, "Le": 1.0, "N_BT": 2.0, "beta": 0.5}

CASES = {
    "mms-unit": ("mms", {"constants_one": True}, 2),
    "mms-table": ("mms", TABLE_PARAMS, 2),
    "mms-coupled": ("mms", COUPLED_PARAMS, 2),
    "mms-cutoff": ("mms", {"constants_one": True, "cutoff_radius": 0.01}, 2),
    "mms-no-thermophoresis": ("mms", {"constants_one": True, "thermophoresis": False}, 2),
    "mms-p1": ("mms", {"constants_one": True}, 1),
    "cavity-table": ("cavity", TABLE_PARAMS, 2),
    "cavity-coupled": ("cavity", COUPLED_PARAMS, 2),
    "cavity-unit-p1": ("cavity", {"constants_one": True}, 1),
}


def _setup(kind, degree, mms_trig):
    if kind == "mms":
        return discretize(build_rectangle(1.0, 1.0, 3, 3), mms_trig.case(), scalar_degree=degree)
    return discretize(build_rectangle(2.0, 1.0, 4, 2), cavity_case(), scalar_degree=degree)


@pytest.mark.parametrize("name", list(CASES))
@pytest.mark.parametrize("factory", [coefficients_mild, coefficients_alumina])
def test_jacobian_matches_central_differences(name, factory, mms_trig, rng):
    kind, params, degree = CASES[name]
    disc = _setup(kind, degree, mms_trig)
    state = _random_state(disc, rng)
    direction = rng.standard_normal(disc.layout.size)
    assert _fd_error(disc, state, ModelParams(**params), factory(), direction, 1e-4) <= 1e-6


@pytest.mark.parametrize("name", ["mms-unit", "mms-coupled", "cavity-table"])
def test_jacobian_difference_error_is_second_order(name, mms_trig, rng):
    kind, params, degree = CASES[name]
    disc = _setup(kind, degree, mms_trig)
    state = _random_state(disc, rng)
    direction = rng.standard_normal(disc.layout.size)
    params = ModelParams(**params)
    laws = coefficients_mild()
    coarse = _fd_error(disc, state, params, laws, direction, 1e-2)
    fine = _fd_error(disc, state, params, laws, direction, 1e-3)
    assert np.log10(coarse / fine) >= 1.9


def test_jacobian_on_twenty_random_states(mms_trig, rng):
    disc = discretize(build_rectangle(1.0, 1.0, 8, 8), mms_trig.case())
    assert disc.mesh.n_triangles == 128
    laws = coefficients_alumina()
    errors = []
    for k in range(20):
        params = ModelParams(**(TABLE_PARAMS if k % 2 else COUPLED_PARAMS))
        direction = rng.standard_normal(disc.layout.size)
        errors.append(_fd_error(disc, _random_state(disc, rng), params, laws, direction, 1e-4))
    assert max(errors) <= 1e-6


@pytest.fixture
def stokes_disc():
    """Unit square with u = (x^2, -2xy), p = x - 1/2, T = 0 and constant phi on the boundary."""

    case = CaseSetup(
        case_id="stokes",
        width=1.0,
        height=1.0,
        dirichlet=(
            EssentialCondition("phi", ("left", "right", "top", "bottom"), 0.3),
            EssentialCondition("T", ("left", "right", "top", "bottom"), 0.0),
            EssentialCondition("u", ("left", "right", "top", "bottom"), lambda x, y: x * x, component=0),
            EssentialCondition("u", ("left", "right", "top", "bottom"), lambda x, y: -2.0 * x * y, component=1),
        ),
        g=lambda x, y: (-1.0 + 0 * x, 0 * x),
    )
    return discretize(build_rectangle(1.0, 1.0, 4, 4), case)


def test_polynomial_stokes_solution_has_zero_residual(stokes_disc, stokes_laws):
    state = interpolate_state(
        stokes_disc,
        phi=lambda x, y: 0.3,
        T=lambda x, y: 0.0,
        u=lambda x, y: (x * x, -2.0 * x * y),
        p=lambda x, y: x - 0.5,
    )
    residual = assemble_residual(stokes_disc, state, ModelParams(constants_one=True), stokes_laws)
    assert np.abs(residual[~stokes_disc.constrained]).max() <= 1e-10


def test_quiescent_cavity_state_has_zero_residual(cavity_disc):
    """Without buoyancy and thermophoresis, phi = phi_m, u = 0 and linear T solve the cavity."""

    params = ModelParams(**{**TABLE_PARAMS, "beta": 0.0, "thermophoresis": False})
    state = interpolate_state(
        cavity_disc,
        phi=lambda x, y: params.phi_m,
        T=lambda x, y: 1.0 - 0.5 * x,
        u=lambda x, y: (0.0, 0.0),
        p=lambda x, y: 0.0,
    )
    residual = assemble_residual(cavity_disc, state, params, coefficients_alumina())
    assert np.abs(residual[~cavity_disc.constrained]).max() <= 1e-12


def test_concentration_block_is_laplacian_at_zero_state(mms_disc, mild_laws):
    state = FieldState.from_vector(np.zeros(mms_disc.layout.size), mms_disc.layout)
    system = assemble_jacobian(mms_disc, state, ModelParams(constants_one=True), mild_laws)
    block = system.matrix[mms_disc.layout.phi, mms_disc.layout.phi]
    reference = stiffness_matrix(mms_disc.phi_space, mms_disc.quad)
    assert abs(block - reference).max() <= 1e-12


def test_stokes_block_symmetric_at_rest(cavity_disc, mild_laws):
    state = lifted_state(cavity_disc, phi_fill=0.1)
    state.T[:] = 0.0
    system = assemble_jacobian(cavity_disc, state, ModelParams(constants_one=True), mild_laws)
    block = stokes_block(system)
    assert abs(block - block.T).max() <= 1e-12


def test_jacobian_additive_over_cells(cavity_disc, rng, mild_laws):
    state = _random_state(cavity_disc, rng)
    params = ModelParams(**TABLE_PARAMS)
    cells = rng.permutation(cavity_disc.mesh.n_triangles)
    part_a = assemble_jacobian(cavity_disc, state, params, mild_laws, cells=cells[:20])
    part_b = assemble_jacobian(cavity_disc, state, params, mild_laws, cells=cells[20:])
    full = assemble_jacobian(cavity_disc, state, params, mild_laws)
    assert abs(part_a.matrix + part_b.matrix - full.matrix).max() <= 1e-12
    assert not part_a.rhs.any()
    np.testing.assert_allclose(full.rhs, assemble_residual(cavity_disc, state, params, mild_laws))


def test_chunked_and_threaded_assembly_agree(cavity_mesh, rng, mild_laws):
    serial = discretize(cavity_mesh, cavity_case())
    chunked = discretize(cavity_mesh, cavity_case(), chunk_size=7, workers=3)
    assert chunked.n_chunks == -(-cavity_mesh.n_triangles // 7)
    state = _random_state(serial, rng)
    params = ModelParams(**TABLE_PARAMS)
    np.testing.assert_allclose(
        assemble_residual(chunked, state, params, mild_laws),
        assemble_residual(serial, state, params, mild_laws),
        atol=1e-12,
    )
    diff = assemble_jacobian(chunked, state, params, mild_laws).matrix - assemble_jacobian(serial, state, params, mild_laws).matrix
    assert abs(diff).max() <= 1e-12


def test_constrained_rows_become_identity(cavity_disc, rng, mild_laws):
    state = _random_state(cavity_disc, rng)
    system = apply_constraints(assemble_jacobian(cavity_disc, state, ModelParams(**TABLE_PARAMS), mild_laws))
    fixed = np.flatnonzero(cavity_disc.constrained)
    rows = system.matrix[fixed].toarray()
    expected = np.zeros_like(rows)
    expected[np.arange(len(fixed)), fixed] = 1.0
    np.testing.assert_array_equal(rows, expected)
    assert not system.rhs[fixed].any()


def test_cavity_essential_conditions(cavity_disc):
    layout = cavity_disc.layout
    velocity = cavity_disc.flow.velocity
    n_v = velocity.n_scalar
    constrained_u = cavity_disc.constrained[layout.u]

    top = velocity.boundary_dofs("top")
    corners = np.isin(top, velocity.boundary_dofs("left", "right"))
    assert constrained_u[n_v + top].all()
    assert not constrained_u[top[~corners]].any()
    assert constrained_u[velocity.boundary_dofs("left", "right", "bottom")].all()

    T_values = cavity_disc.boundary_values[layout.T]
    np.testing.assert_array_equal(T_values[cavity_disc.T_space.boundary_dofs("left")], 1.0)
    np.testing.assert_array_equal(T_values[cavity_disc.T_space.boundary_dofs("right")], 0.0)
    assert not cavity_disc.constrained[layout.phi].any()
    assert not cavity_disc.constrained[layout.p].any()
    assert layout.lambda_phi == layout.size - 1


def test_mean_concentration_row(cavity_disc, mild_laws):
    params = ModelParams(**TABLE_PARAMS)
    state = lifted_state(cavity_disc, phi_fill=params.phi_m)
    residual = assemble_residual(cavity_disc, state, params, mild_laws)
    assert abs(residual[cavity_disc.layout.lambda_phi]) <= 1e-13
    state.phi += 0.05
    residual = assemble_residual(cavity_disc, state, params, mild_laws)
    assert residual[cavity_disc.layout.lambda_phi] == pytest.approx(0.05 * cavity_disc.mesh.area)


def test_domain_mismatch_rejected(mms_trig):
    with pytest.raises(ValueError, match="expects"):
        discretize(build_rectangle(2.0, 1.0, 2, 2), mms_trig.case())


def test_state_vector_length_checked(cavity_disc):
    with pytest.raises(ValueError):
        FieldState.from_vector(np.zeros(cavity_disc.layout.size + 1), cavity_disc.layout)
