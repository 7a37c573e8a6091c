from __future__ import annotations

import math

import numpy as np
import pytest

from nanoflow.analysis import (
    ErrorRecord,
    SampledReference,
    check_study,
    compute_eoc,
    constraint_defects,
    eoc_study,
    eoc_table,
    error_norms,
    measure_errors,
    mesh_quality,
    norm_Lp,
    norm_W1p,
    thermophoresis_diagnostics,
)
from nanoflow.assembly import interpolate_state, lifted_state
from nanoflow.config import NewtonConfig
from nanoflow.constants import ERROR_KEYS, TABLE_PARAMS
from nanoflow.fespace import build_dofmap, interpolate
from nanoflow.mesh import build_rectangle
from nanoflow.model import ModelParams, coefficients_mild
from nanoflow.solver import continuation_solve


@pytest.fixture
def p2_unit(unit_square):
    return build_dofmap(unit_square, 2)


def test_norms_of_constant(p2_unit):
    ones = np.ones(p2_unit.dof_count)
    assert norm_Lp(ones, p2_unit, 2) == pytest.approx(1.0)
    assert norm_Lp(ones, p2_unit, 6) == pytest.approx(1.0)
    assert norm_W1p(ones, p2_unit, 6) == pytest.approx(1.0)


def test_norms_of_linear_function(p2_unit):
    coeffs = interpolate(p2_unit, lambda x, y: x)
    assert norm_Lp(coeffs, p2_unit, 2) == pytest.approx(math.sqrt(1.0 / 3.0), rel=1e-12)
    assert norm_Lp(coeffs, p2_unit, 6) == pytest.approx((1.0 / 7.0) ** (1.0 / 6.0), rel=1e-12)
    # |x|_6^6 + |grad x|_6^6 = 1/7 + 1
    assert norm_W1p(coeffs, p2_unit, 6) == pytest.approx((8.0 / 7.0) ** (1.0 / 6.0), rel=1e-12)


def test_pointwise_and_discrete_norms_agree(p2_unit):
    coeffs = interpolate(p2_unit, lambda x, y: x * y)
    assert norm_Lp(lambda x, y: x * y, p2_unit, 6) == pytest.approx(norm_Lp(coeffs, p2_unit, 6), rel=1e-12)
    pointwise = norm_W1p(lambda x, y: x * y, p2_unit, 2, gradient=lambda x, y: (y, x))
    assert pointwise == pytest.approx(norm_W1p(coeffs, p2_unit, 2), rel=1e-12)


def test_vector_norm_uses_euclidean_magnitude(unit_square):
    space = build_dofmap(unit_square, 2, "vector")
    coeffs = interpolate(space, lambda x, y: (3.0 + 0 * x, 4.0 + 0 * x))
    assert norm_Lp(coeffs, space, 2) == pytest.approx(5.0)


@pytest.mark.parametrize("scale", [0.5, 3.0])
def test_norms_are_homogeneous(p2_unit, rng, scale):
    coeffs = rng.standard_normal(p2_unit.dof_count)
    for p in (2, 6):
        assert norm_Lp(scale * coeffs, p2_unit, p) == pytest.approx(scale * norm_Lp(coeffs, p2_unit, p))
        assert norm_W1p(scale * coeffs, p2_unit, p) == pytest.approx(scale * norm_W1p(coeffs, p2_unit, p))


@pytest.mark.parametrize("kind", ["scalar", "vector"])
def test_norms_satisfy_triangle_inequality(unit_square, rng, kind):
    space = build_dofmap(unit_square, 2, kind)
    for _ in range(5):
        a, b = rng.standard_normal((2, space.dof_count))
        for p in (2, 6):
            assert norm_Lp(a + b, space, p) <= norm_Lp(a, space, p) + norm_Lp(b, space, p) + 1e-12
            assert norm_W1p(a + b, space, p) <= norm_W1p(a, space, p) + norm_W1p(b, space, p) + 1e-12


def test_norm_argument_errors(p2_unit):
    with pytest.raises(ValueError, match="gradient"):
        norm_W1p(lambda x, y: x, p2_unit, 2)
    with pytest.raises(ValueError, match="exponent"):
        norm_Lp(np.ones(p2_unit.dof_count), p2_unit, 3)


def test_compute_eoc_on_synthetic_rates():
    records = [
        ErrorRecord(nt=nt, h=h, errors={"phi_L6": 2.0 * h**3, "u_L2": h**2})
        for nt, h in [(256, 0.2), (1024, 0.1), (4096, 0.05)]
    ]
    compute_eoc(records)
    assert records[0].eoc == {}
    for record in records[1:]:
        assert record.eoc["phi_L6"] == pytest.approx(3.0)
        assert record.eoc["u_L2"] == pytest.approx(2.0)


def test_compute_eoc_skips_vanishing_errors():
    records = compute_eoc([ErrorRecord(2, 1.0, {"p_L2": 0.0}), ErrorRecord(8, 0.5, {"p_L2": 0.0})])
    assert records[1].eoc == {}


def test_eoc_table_columns():
    records = compute_eoc(
        [
            ErrorRecord(nt, h, {"phi_L6": h**3, "T_L6": h**3, "u_L2": h**3})
            for nt, h in [(256, 0.2), (1024, 0.1)]
        ]
    )
    table = eoc_table(records)
    assert list(table.columns) == ["nt", "phi_L6", "phi_eoc", "T_L6", "T_eoc", "u_L2", "u_eoc"]
    assert math.isnan(table.loc[0, "phi_eoc"])
    assert table.loc[1, "u_eoc"] == pytest.approx(3.0)


def test_check_study_arguments(mms_trig):
    with pytest.raises(ValueError, match="levels ≥ 2 required"):
        check_study(1, "exact", mms_trig, 2)
    with pytest.raises(ValueError):
        check_study(3, "exact", None, 2)
    with pytest.raises(ValueError):
        check_study(3, "coarse", mms_trig, 2)
    with pytest.raises(ValueError):
        check_study(3, "fine-grid", None, 0)
    assert check_study(3, "exact", mms_trig, 2) == 3
    assert check_study(3, "fine-grid", None, 2) == 5
    with pytest.warns(UserWarning):
        assert check_study(3, "fine-grid", None, 1) == 4


def test_eoc_study_rejects_single_level(mms_trig):
    with pytest.raises(ValueError, match="levels"):
        eoc_study(
            build_rectangle(1.0, 1.0, 2, 2), mms_trig.case(), ModelParams(constants_one=True), coefficients_mild(), 1,
            exact=mms_trig,
        )


def test_interpolant_error_against_exact_fields(mms_disc, mms_trig):
    state = interpolate_state(mms_disc, mms_trig.phi, mms_trig.T, mms_trig.u, mms_trig.p)
    errors = error_norms(mms_disc, state, mms_trig)
    assert set(errors) == set(ERROR_KEYS)
    assert all(0.0 < value < 1.0 for value in errors.values())


def test_sampled_reference_of_itself_has_zero_error(mms_disc, mms_trig):
    state = interpolate_state(mms_disc, mms_trig.phi, mms_trig.T, mms_trig.u, mms_trig.p)
    errors = error_norms(mms_disc, state, SampledReference(mms_disc, state))
    assert max(errors.values()) <= 1e-12


def test_measure_errors_without_reference_returns_nothing():
    assert measure_errors([], 2) == []


def test_exact_study_on_small_meshes(mms_trig):
    params = ModelParams(constants_one=True)
    records = eoc_study(
        build_rectangle(1.0, 1.0, 4, 4), mms_trig.case(), params, coefficients_mild(), 2, exact=mms_trig
    )
    assert [r.nt for r in records] == [32, 128]
    assert records[1].errors["u_L2"] < records[0].errors["u_L2"]
    assert records[1].eoc["u_L2"] > 2.0
    assert records[1].eoc["phi_L6"] > 2.0
    assert all(r.iterations >= 0 for r in records)


def test_constraint_defects_of_cavity_solution(cavity_disc):
    params = ModelParams(**TABLE_PARAMS)
    state, report = continuation_solve(params, cavity_disc, coefficients_mild(), NewtonConfig())
    assert report.converged
    defects = constraint_defects(cavity_disc, state, params)
    assert defects["pressure_mean"] <= 1e-10
    assert defects["concentration_mean"] <= 1e-10
    assert defects["divergence"] <= 1e-9
    assert defects["velocity_H1"] > 0.0


def test_mesh_quality(cavity_mesh):
    quality = mesh_quality(cavity_mesh)
    assert quality["triangles"] == 64
    assert quality["h"] == pytest.approx(math.hypot(0.25, 0.25))
    assert quality["quasi_uniformity"] == pytest.approx(1.0)
    assert quality["shape_ratio_max"] == pytest.approx(1.0 + math.sqrt(2.0))


def test_thermophoresis_diagnostics_on_synthetic_state(cavity_disc):
    state = lifted_state(cavity_disc, phi_fill=0.1)
    coords = cavity_disc.phi_space.dof_coords
    state.phi = 0.1 + 0.01 * coords[:, 0] - 0.001 * coords[:, 1]
    n_v = cavity_disc.flow.velocity.n_scalar
    top = cavity_disc.flow.velocity.boundary_dofs("top")
    state.u[top] = 0.5
    diagnostics = thermophoresis_diagnostics(cavity_disc, state)
    assert diagnostics["top_max_speed"] == pytest.approx(0.5)
    assert diagnostics["max_speed"] == pytest.approx(0.5)
    assert diagnostics["phi_min_at"] == (0.0, 1.0)
    assert diagnostics["phi_max"] == pytest.approx(0.12)
    assert diagnostics["min_near_left_or_top"]
    assert diagnostics["max_near_right"]
    assert not state.u[n_v:].any()
