from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy as sp

from .constants import BOUNDARY_TAGS
from .model import CaseSetup, CoefficientLaws, EssentialCondition, ModelParams, coefficients_mild

x, y = sp.symbols("x y", real=True)

ScalarFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
VectorFn = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


def _scalar(expr: sp.Expr) -> ScalarFn:
    fn = sp.lambdify((x, y), expr, "numpy")

    def _eval(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        shape = np.broadcast(xs, ys).shape
        return np.broadcast_to(np.asarray(fn(xs, ys), dtype=float), shape).copy()

    return _eval


def _vector(exprs: list[sp.Expr]) -> VectorFn:
    parts = [_scalar(e) for e in exprs]
    return lambda xs, ys: tuple(part(xs, ys) for part in parts)


def _grad(expr: sp.Expr) -> list[sp.Expr]:
    return [sp.diff(expr, x), sp.diff(expr, y)]


def _div(vec: list[sp.Expr]) -> sp.Expr:
    return sp.diff(vec[0], x) + sp.diff(vec[1], y)


@dataclass(frozen=True, slots=True)
class MMSCase:
    """Closed-form exact fields on the unit square with the sources that make them exact."""

    flavor: str
    phi: ScalarFn
    grad_phi: VectorFn
    T: ScalarFn
    grad_T: VectorFn
    u: VectorFn
    grad_u: Callable[[np.ndarray, np.ndarray], tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]]
    p: ScalarFn
    f: ScalarFn
    g: VectorFn
    s_phi: ScalarFn
    expressions: dict[str, sp.Expr]

    def case(self) -> CaseSetup:
        tags = BOUNDARY_TAGS
        return CaseSetup(
            case_id="mms",
            width=1.0,
            height=1.0,
            dirichlet=(
                EssentialCondition("phi", tags, self.phi),
                EssentialCondition("T", tags, self.T),
                EssentialCondition("u", tags, lambda xs, ys: self.u(xs, ys)[0], component=0),
                EssentialCondition("u", tags, lambda xs, ys: self.u(xs, ys)[1], component=1),
            ),
            f=self.f,
            g=self.g,
            s_phi=self.s_phi,
        )


def _exact_fields(flavor: str) -> tuple[sp.Expr, sp.Expr, sp.Expr, sp.Expr]:
    pi = sp.pi
    if flavor == "trigonometric":
        stream = sp.sin(pi * x) ** 2 * sp.sin(pi * y) ** 2 / (2 * pi)
        phi = sp.Rational(1, 2) + sp.sin(pi * x) * sp.cos(pi * y) / 4
        T = x + sp.cos(pi * x) * sp.sin(pi * y) / 2
        p = sp.cos(pi * x) * sp.cos(pi * y)
    elif flavor == "polynomial":
        stream = 16 * x**2 * (1 - x) ** 2 * y**2 * (1 - y) ** 2
        phi = sp.Rational(1, 4) + x * y * (2 - x - y) / 2
        T = x + x * (1 - x) * y**2
        p = x**2 * y - sp.Rational(1, 6)
    else:
        raise ValueError(f"Unknown manufactured solution flavor '{flavor}'.")
    return stream, phi, T, p


def make_mms(
    flavor: str = "trigonometric",
    laws: CoefficientLaws | None = None,
    params: ModelParams | None = None,
) -> MMSCase:
    """
    Build exact fields and the matching sources for the weak operator.

    The velocity is the curl of a stream function, hence exactly divergence free, and
    the pressure has zero mean. Sources follow the weak form as assembled: the
    particle-flux divergence in the concentration equation, the convective form
    (j + eta u) . grad T + c T u . grad phi in the heat equation and
    (j + rho u) . grad u + c (u . grad phi) u in the momentum equation. ``laws`` must
    be polynomial (plain arithmetic) so they can act on sympy expressions.
    """

    laws = laws or coefficients_mild()
    params = params or ModelParams(constants_one=True)
    pf = params.prefactors()
    e_g = params.e_g

    stream, phi, T, p = _exact_fields(flavor)
    u = [sp.diff(stream, y), -sp.diff(stream, x)]
    grad_u = [_grad(u[0]), _grad(u[1])]
    grad_phi = _grad(phi)
    grad_T = _grad(T)

    h = laws.h(phi)
    j = [-(grad_phi[d] + pf.thermophoresis * h * grad_T[d]) for d in range(2)]
    eta = laws.eta(phi)
    rho = laws.rho(phi)
    mu = laws.mu(phi)

    u_gphi = u[0] * grad_phi[0] + u[1] * grad_phi[1]
    s_phi = u_gphi + pf.phi_diffusion * _div(j)
    f = -pf.conduction * _div([laws.k(phi) * grad_T[d] for d in range(2)]) + sum(
        (pf.heat_flux * j[d] + eta * u[d]) * grad_T[d] for d in range(2)
    )
    f += pf.heat_coupling * T * u_gphi

    strain = [[grad_u[i][k] + grad_u[k][i] for k in range(2)] for i in range(2)]
    g = []
    for i in range(2):
        viscous = -pf.viscosity * _div([mu * strain[i][0], mu * strain[i][1]])
        convective = sum((pf.momentum_flux * j[k] + rho * u[k]) * grad_u[i][k] for k in range(2))
        coupling = pf.momentum_coupling * u_gphi * u[i]
        g.append(viscous + convective + coupling + sp.diff(p, (x, y)[i]) + pf.buoyancy * T * e_g[i])

    grad_u_fns = [_vector(row) for row in grad_u]
    return MMSCase(
        flavor=flavor,
        phi=_scalar(phi),
        grad_phi=_vector(grad_phi),
        T=_scalar(T),
        grad_T=_vector(grad_T),
        u=_vector(u),
        grad_u=lambda xs, ys: (grad_u_fns[0](xs, ys), grad_u_fns[1](xs, ys)),
        p=_scalar(p),
        f=_scalar(f),
        g=_vector(g),
        s_phi=_scalar(s_phi),
        expressions={
            "stream": stream, "phi": phi, "T": T, "p": p, "u1": u[0], "u2": u[1],
            "s_phi": s_phi, "f": f, "g1": g[0], "g2": g[1],
        },
    )
