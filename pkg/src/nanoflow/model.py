from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .constants import (
    ALUMINA_CONDUCTIVITY,
    ALUMINA_VISCOSITY,
    BOUNDARY_TAGS,
    CAVITY_HEIGHT,
    CAVITY_WIDTH,
)

Law = Callable[[object], object]


@dataclass(frozen=True, slots=True)
class Prefactors:
    """Constant factors multiplying each group of terms in the weak operator."""

    phi_diffusion: float
    thermophoresis: float
    heat_flux: float
    conduction: float
    momentum_flux: float
    viscosity: float
    buoyancy: float

    @property
    def heat_coupling(self) -> float:
        """Factor of ``T u . grad(phi)`` left in the heat rows once ``div j`` is eliminated."""
        return 1.0 - self.heat_flux / self.phi_diffusion

    @property
    def momentum_coupling(self) -> float:
        """Factor of ``(u . grad(phi)) u`` left in the momentum rows."""
        return 1.0 - self.momentum_flux / self.phi_diffusion


@dataclass(frozen=True, slots=True)
class ModelParams:
    """Nondimensional groups of the nanofluid model."""

    Re: float = 1.0
    Pr: float = 1.0
    Sc: float = 1.0
    Sc_f: float = 1.0
    Le: float = 1.0
    N_BT: float = 1.0
    T0: float = 1.0
    beta: float = 1.0
    e_g: tuple[float, float] = (0.0, -1.0)
    phi_m: float = 0.1
    cutoff_radius: float | None = None
    constants_one: bool = False
    thermophoresis: bool = True

    def __post_init__(self) -> None:
        for name in ("Re", "Pr", "Sc", "Sc_f", "N_BT", "T0"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}.")
        if self.Le == 0:
            raise ValueError("Le must be nonzero.")
        if self.beta < 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}.")
        if abs(math.hypot(*self.e_g) - 1.0) > 1e-12:
            raise ValueError(f"Gravity direction must be a unit vector, got {self.e_g}.")
        if not 0.0 <= self.phi_m <= 1.0:
            raise ValueError(f"phi_m must lie in [0, 1], got {self.phi_m}.")
        if self.cutoff_radius is not None and not self.cutoff_radius > 0:
            raise ValueError(f"cutoff_radius must be positive, got {self.cutoff_radius}.")
        if self.Le < 0:
            warnings.warn(f"Negative Lewis number Le={self.Le} accepted as given.", stacklevel=2)

    def prefactors(self) -> Prefactors:
        tau = 1.0 if self.constants_one else 1.0 / (self.N_BT * self.T0)
        if not self.thermophoresis:
            tau = 0.0
        if self.constants_one:
            return Prefactors(1.0, tau, 1.0, 1.0, 1.0, 1.0, 1.0)
        return Prefactors(
            phi_diffusion=1.0 / (self.Re * self.Sc),
            thermophoresis=tau,
            heat_flux=1.0 / (self.Re * self.Pr * self.Le),
            conduction=1.0 / (self.Re * self.Pr),
            momentum_flux=1.0 / (self.Re * self.Sc_f),
            viscosity=1.0 / self.Re,
            buoyancy=self.beta,
        )

    def updated(self, **changes: object) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True, slots=True)
class CoefficientLaws:
    """
    Material laws and their first derivatives. The laws are written with plain
    arithmetic so they accept numpy arrays and sympy expressions alike.
    """

    k: Law
    dk: Law
    mu: Law
    dmu: Law
    h: Law
    dh: Law
    eta: Law
    deta: Law
    rho: Law
    drho: Law


def _polynomial(coeffs: Sequence[float]) -> tuple[Law, Law]:
    coeffs = tuple(float(c) for c in coeffs)
    deriv = tuple(i * c for i, c in enumerate(coeffs))[1:] or (0.0,)

    def _horner(values: Sequence[float], s: object) -> object:
        result = values[-1] + 0 * s
        for c in reversed(values[:-1]):
            result = result * s + c
        return result

    return (lambda s: _horner(coeffs, s)), (lambda s: _horner(deriv, s))


def polynomial_laws(conductivity: Sequence[float], viscosity: Sequence[float]) -> CoefficientLaws:
    """Polynomial k and mu (coefficients in increasing powers) with h = s(1-s), eta = rho = 1+s."""

    k, dk = _polynomial(conductivity)
    mu, dmu = _polynomial(viscosity)
    h, dh = _polynomial((0.0, 1.0, -1.0))
    eta, deta = _polynomial((1.0, 1.0))
    return CoefficientLaws(k=k, dk=dk, mu=mu, dmu=dmu, h=h, dh=dh, eta=eta, deta=deta, rho=eta, drho=deta)


def coefficients_alumina() -> CoefficientLaws:
    return polynomial_laws(ALUMINA_CONDUCTIVITY, ALUMINA_VISCOSITY)


def coefficients_mild() -> CoefficientLaws:
    return polynomial_laws((1.0, 0.5), (1.0, 1.0, 0.5))


def flux_j(
    grad_phi: np.ndarray,
    phi: np.ndarray,
    grad_T: np.ndarray,
    params: ModelParams,
    laws: CoefficientLaws | None = None,
) -> np.ndarray:
    """Particle flux -(grad phi + h(phi) / (N_BT T0) grad T); vectors along the last axis."""

    phi = np.asarray(phi, dtype=float)
    h = laws.h(phi) if laws is not None else phi * (1.0 - phi)
    tau = params.prefactors().thermophoresis
    return -(np.asarray(grad_phi, dtype=float) + (tau * h)[..., None] * np.asarray(grad_T, dtype=float))


def cutoff(y: np.ndarray, R: float) -> np.ndarray:
    """Radial truncation of vectors (last axis) onto the closed ball of radius ``R``."""

    if not R > 0:
        raise ValueError(f"Cut-off radius must be positive, got {R}.")
    y = np.asarray(y, dtype=float)
    norm = np.linalg.norm(y, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > R, R / norm, 1.0)
    return y * scale


def cutoff_jacobian(y: np.ndarray, R: float) -> np.ndarray:
    """
    Derivative of :func:`cutoff`. On the sphere ``|y| = R`` the inner branch (identity)
    is returned.
    """

    if not R > 0:
        raise ValueError(f"Cut-off radius must be positive, got {R}.")
    y = np.asarray(y, dtype=float)
    norm = np.linalg.norm(y, axis=-1)
    eye = np.broadcast_to(np.eye(2), y.shape[:-1] + (2, 2))
    outer = norm > R
    safe = np.where(outer, norm, 1.0)
    radial = np.einsum("...i,...j->...ij", y, y) / (safe**2)[..., None, None]
    scaled = (R / safe)[..., None, None] * (eye - radial)
    return np.where(outer[..., None, None], scaled, eye)


@dataclass(frozen=True, slots=True)
class EssentialCondition:
    """Fixed values on tagged boundary edges. ``component`` selects one velocity component."""

    field: str
    tags: tuple[str, ...]
    value: float | Callable[..., object]
    component: int | None = None


@dataclass(frozen=True, slots=True)
class CaseSetup:
    case_id: str
    width: float
    height: float
    dirichlet: tuple[EssentialCondition, ...]
    slip: tuple[str, ...] = ()
    mean_concentration: bool = False
    f: Callable[..., object] | None = None
    g: Callable[..., object] | None = None
    s_phi: Callable[..., object] | None = None

    def __post_init__(self) -> None:
        for cond in self.dirichlet:
            if cond.field not in ("phi", "T", "u"):
                raise ValueError(f"Unknown field '{cond.field}' in boundary condition.")
            for tag in cond.tags:
                if tag not in BOUNDARY_TAGS:
                    raise ValueError(f"Unknown boundary tag '{tag}'.")
        for tag in self.slip:
            if tag not in BOUNDARY_TAGS:
                raise ValueError(f"Unknown boundary tag '{tag}'.")


def normal_component(tag: str) -> int:
    """Velocity component normal to an axis-aligned side."""

    return 0 if tag in ("left", "right") else 1


def cavity_case(width: float = CAVITY_WIDTH, height: float = CAVITY_HEIGHT) -> CaseSetup:
    """
    Differentially heated cavity: T = 1 on the left wall and 0 on the right one,
    insulated top and bottom, zero particle flux everywhere with prescribed mean
    concentration, no-slip walls and a slip lid (u_2 = 0, no tangential stress).
    """

    return CaseSetup(
        case_id="cavity",
        width=width,
        height=height,
        dirichlet=(
            EssentialCondition("T", ("left",), 1.0),
            EssentialCondition("T", ("right",), 0.0),
            EssentialCondition("u", ("left", "right", "bottom"), 0.0),
        ),
        slip=("top",),
        mean_concentration=True,
    )
