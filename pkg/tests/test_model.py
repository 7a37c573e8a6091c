from __future__ import annotations

import numpy as np
import pytest

from nanoflow.model import (
    CaseSetup,
    EssentialCondition,
    ModelParams,
    cavity_case,
    coefficients_alumina,
    coefficients_mild,
    cutoff,
    cutoff_jacobian,
    flux_j,
    normal_component,
)

LAW_PAIRS = [("k", "dk"), ("mu", "dmu"), ("h", "dh"), ("eta", "deta"), ("rho", "drho")]


@pytest.fixture
def samples(rng):
    return rng.normal(scale=2.0, size=(1000, 2))


@pytest.mark.parametrize("R", [0.01, 0.5, 1.0, 3.0])
def test_cutoff_maps_into_ball(samples, R):
    clipped = cutoff(samples, R)
    norms = np.linalg.norm(samples, axis=1)
    assert (np.linalg.norm(clipped, axis=1) <= R * (1 + 1e-14)).all()
    inside = norms <= R
    np.testing.assert_array_equal(clipped[inside], samples[inside])
    # direction is kept
    cross = samples[:, 0] * clipped[:, 1] - samples[:, 1] * clipped[:, 0]
    np.testing.assert_allclose(cross, 0.0, atol=1e-12)
    assert (np.einsum("pi,pi->p", samples, clipped) >= 0).all()


@pytest.mark.parametrize("R", [0.5, 1.0, 3.0])
def test_cutoff_is_idempotent_and_lipschitz(samples, R):
    clipped = cutoff(samples, R)
    np.testing.assert_allclose(cutoff(clipped, R), clipped, rtol=1e-14)
    a, b = samples[:500], samples[500:]
    lhs = np.linalg.norm(cutoff(a, R) - cutoff(b, R), axis=1)
    assert (lhs <= np.linalg.norm(a - b, axis=1) + 1e-12).all()


@pytest.mark.parametrize("R", [0.5, 1.0, 3.0])
def test_cutoff_jacobian_matches_differences(samples, R):
    keep = np.abs(np.linalg.norm(samples, axis=1) - R) > 1e-4
    y = samples[keep]
    eps = 1e-5
    jac = cutoff_jacobian(y, R)
    for d in range(2):
        shift = np.zeros(2)
        shift[d] = eps
        fd = (cutoff(y + shift, R) - cutoff(y - shift, R)) / (2 * eps)
        np.testing.assert_allclose(jac[:, :, d], fd, rtol=1e-7, atol=1e-9)


@pytest.mark.parametrize("R", [0.5, 1.0])
def test_cutoff_jacobian_outside_kills_radial_direction(samples, R):
    outside = samples[np.linalg.norm(samples, axis=1) > R]
    radial = np.einsum("pij,pj->pi", cutoff_jacobian(outside, R), outside)
    np.testing.assert_allclose(radial, 0.0, atol=1e-13)
    inside = samples[np.linalg.norm(samples, axis=1) < R]
    np.testing.assert_array_equal(cutoff_jacobian(inside, R), np.broadcast_to(np.eye(2), (len(inside), 2, 2)))


def test_cutoff_rejects_nonpositive_radius():
    with pytest.raises(ValueError):
        cutoff(np.zeros((1, 2)), 0.0)
    with pytest.raises(ValueError):
        cutoff_jacobian(np.zeros((1, 2)), -1.0)


def test_flux_example():
    params = ModelParams(N_BT=0.5)
    j = flux_j(np.array([1.0, 0.0]), 0.5, np.array([0.0, 2.0]), params)
    np.testing.assert_allclose(j, [-1.0, -1.0])


def test_flux_without_thermophoresis_is_pure_diffusion():
    params = ModelParams(thermophoresis=False)
    j = flux_j(np.array([[0.3, -0.2]]), np.array([0.4]), np.array([[5.0, 5.0]]), params, coefficients_mild())
    np.testing.assert_allclose(j, [[-0.3, 0.2]])


@pytest.mark.parametrize(
    "changes",
    [
        {"Re": 0.0},
        {"Pr": -1.0},
        {"N_BT": 0.0},
        {"T0": -2.0},
        {"Le": 0.0},
        {"beta": -0.1},
        {"e_g": (1.0, 1.0)},
        {"phi_m": 1.5},
        {"cutoff_radius": 0.0},
    ],
)
def test_invalid_parameters(changes):
    with pytest.raises(ValueError):
        ModelParams(**changes)


def test_negative_lewis_number_warns():
    with pytest.warns(UserWarning, match="Lewis"):
        params = ModelParams(Le=-1.0)
    assert params.prefactors().heat_flux < 0


def test_prefactors():
    params = ModelParams(Re=2.0, Pr=3.0, Sc=5.0, Sc_f=7.0, Le=11.0, N_BT=0.5, T0=2.0, beta=4.0)
    pf = params.prefactors()
    assert pf.phi_diffusion == pytest.approx(0.1)
    assert pf.thermophoresis == pytest.approx(1.0)
    assert pf.heat_flux == pytest.approx(1.0 / 66.0)
    assert pf.conduction == pytest.approx(1.0 / 6.0)
    assert pf.momentum_flux == pytest.approx(1.0 / 14.0)
    assert pf.viscosity == pytest.approx(0.5)
    assert pf.buoyancy == 4.0
    assert pf.heat_coupling == pytest.approx(1.0 - 10.0 / 66.0)
    assert pf.momentum_coupling == pytest.approx(1.0 - 10.0 / 14.0)
    assert params.updated(thermophoresis=False).prefactors().thermophoresis == 0.0


def test_constants_one_prefactors():
    params = ModelParams(Re=500.0, beta=3.0, constants_one=True)
    pf = params.prefactors()
    assert (pf.phi_diffusion, pf.thermophoresis, pf.conduction, pf.viscosity, pf.buoyancy) == (1, 1, 1, 1, 1)
    assert pf.heat_coupling == pf.momentum_coupling == 0.0
    assert params.updated(thermophoresis=False).prefactors().thermophoresis == 0.0


def test_alumina_values():
    laws = coefficients_alumina()
    assert laws.mu(0.1) == pytest.approx(1.0 + 3.911 + 5.339)
    assert laws.k(0.1) == pytest.approx(1.45503)
    assert laws.h(0.5) == pytest.approx(0.25)
    assert laws.eta(0.2) == laws.rho(0.2) == pytest.approx(1.2)


@pytest.mark.parametrize("factory", [coefficients_alumina, coefficients_mild])
@pytest.mark.parametrize("law, derivative", LAW_PAIRS)
def test_law_derivatives(factory, law, derivative):
    laws = factory()
    s = np.linspace(0.0, 0.6, 13)
    eps = 1e-6
    fd = (getattr(laws, law)(s + eps) - getattr(laws, law)(s - eps)) / (2 * eps)
    np.testing.assert_allclose(getattr(laws, derivative)(s), fd, rtol=1e-7, atol=1e-7)


def test_cavity_case_boundary_conditions():
    case = cavity_case()
    assert (case.width, case.height) == (2.0, 1.0)
    assert case.slip == ("top",)
    assert case.mean_concentration
    temperatures = {c.tags: c.value for c in case.dirichlet if c.field == "T"}
    assert temperatures == {("left",): 1.0, ("right",): 0.0}
    assert normal_component("top") == 1 and normal_component("left") == 0


def test_case_setup_rejects_unknown_tags():
    with pytest.raises(ValueError):
        CaseSetup("x", 1.0, 1.0, dirichlet=(EssentialCondition("T", ("front",), 0.0),))
    with pytest.raises(ValueError):
        CaseSetup("x", 1.0, 1.0, dirichlet=(EssentialCondition("c", ("left",), 0.0),))
    with pytest.raises(ValueError):
        CaseSetup("x", 1.0, 1.0, dirichlet=(), slip=("lid",))
