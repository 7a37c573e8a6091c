from __future__ import annotations

import matplotlib
import numpy as np
import pytest

from nanoflow.assembly import discretize
from nanoflow.manufactured import make_mms
from nanoflow.mesh import build_rectangle
from nanoflow.model import CoefficientLaws, ModelParams, cavity_case, coefficients_mild

matplotlib.use("Agg")


def _constant(value: float):
    return lambda s: value + 0 * s


@pytest.fixture
def stokes_laws() -> CoefficientLaws:
    """mu = 1 and no particle coupling: the momentum equation reduces to Stokes."""

    zero, one = _constant(0.0), _constant(1.0)
    return CoefficientLaws(k=one, dk=zero, mu=one, dmu=zero, h=zero, dh=zero, eta=zero, deta=zero, rho=zero, drho=zero)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_square():
    return build_rectangle(1.0, 1.0, 4, 4)


@pytest.fixture
def cavity_mesh():
    return build_rectangle(2.0, 1.0, 8, 4)


@pytest.fixture
def mild_laws() -> CoefficientLaws:
    return coefficients_mild()


@pytest.fixture
def unit_params() -> ModelParams:
    return ModelParams(constants_one=True)


@pytest.fixture(scope="session")
def mms_trig():
    return make_mms("trigonometric")


@pytest.fixture
def mms_disc(unit_square, mms_trig):
    return discretize(unit_square, mms_trig.case(), workers=1)


@pytest.fixture
def cavity_disc(cavity_mesh):
    return discretize(cavity_mesh, cavity_case(), workers=1)
