"""Closed-form solutions of the focusing cubic wave equation.

Provides the explicit two-parameter attractor family and its conformally
rescaled form on hyperboloidal slices, the globally regular conformal
solution, the singular (blowup) surface of the family, and the leading
eigenmode profiles of perturbations around the critical member.

All evaluators return non-finite values (inf/nan) at poles instead of
raising, so fitting code can probe near-singular parameter regions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import DEFAULT_K, conformal_factor, to_standard

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class AttractorParams:
    """Member (a, b) of the attractor family, with overall sign kappa.

    a shifts time, b is the conformal-inversion parameter: b > 0 decaying,
    b < 0 blowing up, b = 0 the critical member sqrt(2)/(t+a).
    """

    a: float
    b: float
    kappa: int = 1

    def __post_init__(self):
        if self.kappa not in (-1, 1):
            raise ValueError("kappa must be +1 or -1")

    def reflected(self) -> "AttractorParams":
        return AttractorParams(self.a, self.b, -self.kappa)


def ode_solution(t, b):
    """Spatially homogeneous solution sqrt(2)/(b - t); pole at t = b."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = SQRT2 / (b - t)
    return out if out.ndim else float(out)


def attractor_standard(t, r, params: AttractorParams):
    """kappa sqrt(2) / (t + a + b((t+a)^2 - r^2)) in standard coordinates.

    Singular on the two-sheeted hyperboloid t = -a - 1/(2b) +- sqrt(1/(4b^2)+r^2).
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    ta = t + params.a
    den = ta + params.b * (ta * ta - r * r)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = params.kappa * SQRT2 / den
    return out if out.ndim else float(out)


def _sigma(rho: np.ndarray, K: float):
    """sqrt(q^2 beta^2 + 4 rho^2) with q = 3/K; reduces to 1 + rho^2 for K=3."""
    q = 3.0 / K
    beta = 1.0 - rho * rho
    return np.sqrt(q * q * beta * beta + 4.0 * rho * rho), q, beta


def _attractor_denominator(tau, rho, params: AttractorParams, K: float):
    """Denominator D with Phi = 2 sqrt(2) kappa / D; regular at rho = 1."""
    sig, q, beta = _sigma(rho, K)
    tt = tau + params.a
    return params.b * (beta * tt * tt + 2.0 * sig * tt + q * q * beta) + beta * tt + sig


def attractor_hyperboloidal(tau, rho, params: AttractorParams, K: float = DEFAULT_K):
    """Rescaled attractor Phi = phi/Omega on the hyperboloidal chart.

    For K=3 this is 2 sqrt(2) kappa / [(tt+1)(b(tt+1)+1) - rho^2 (tt-1)(b(tt-1)+1)]
    with tt = tau + a; at rho = 1 it reduces to sqrt(2) kappa / (2 b tt + 1).
    """
    tau = np.asarray(tau, dtype=float)
    rho = np.asarray(rho, dtype=float)
    den = _attractor_denominator(tau, rho, params, K)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = params.kappa * 2.0 * SQRT2 / den
    return out if out.ndim else float(out)


def attractor_hyperboloidal_dtau(tau, rho, params: AttractorParams, K: float = DEFAULT_K):
    """Analytic d Phi / d tau of the rescaled attractor."""
    tau = np.asarray(tau, dtype=float)
    rho = np.asarray(rho, dtype=float)
    sig, q, beta = _sigma(rho, K)
    tt = tau + params.a
    den = params.b * (beta * tt * tt + 2.0 * sig * tt + q * q * beta) + beta * tt + sig
    dden = params.b * (2.0 * beta * tt + 2.0 * sig) + beta
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -params.kappa * 2.0 * SQRT2 * dden / (den * den)
    return out if out.ndim else float(out)


def attractor_hyperboloidal_drho(tau, rho, params: AttractorParams, K: float = DEFAULT_K):
    """Analytic d Phi / d rho of the rescaled attractor."""
    tau = np.asarray(tau, dtype=float)
    rho = np.asarray(rho, dtype=float)
    sig, q, beta = _sigma(rho, K)
    tt = tau + params.a
    den = params.b * (beta * tt * tt + 2.0 * sig * tt + q * q * beta) + beta * tt + sig
    dsig = 2.0 * rho * (2.0 - q * q * beta) / sig
    dden = (
        params.b * (-2.0 * rho * tt * tt + 2.0 * dsig * tt - 2.0 * rho * q * q)
        - 2.0 * rho * tt
        + dsig
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -params.kappa * 2.0 * SQRT2 * dden / (den * den)
    return out if out.ndim else float(out)


def conformal_solution_standard(t, r):
    """Globally regular solution 2/sqrt((1+(t-r)^2)(1+(t+r)^2))."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    out = 2.0 / np.sqrt((1.0 + (t - r) ** 2) * (1.0 + (t + r) ** 2))
    return out if out.ndim else float(out)


def _conformal_m(tau, rho):
    """Factors M+- with Phi_conf = 4/sqrt(M+ M-); both strictly positive."""
    beta = 1.0 - rho * rho
    mp = (tau * (1.0 + rho)) ** 2 + 2.0 * tau * beta + 2.0 * (1.0 + rho * rho)
    mm = (tau * (1.0 - rho)) ** 2 + 2.0 * tau * beta + 2.0 * (1.0 + rho * rho)
    return mp, mm


def conformal_solution_hyperboloidal(tau, rho):
    """Rescaled conformal solution Phi = phi_conf/Omega on the K=3 chart.

    Closed form 4/sqrt(M+ M-) regular on the whole grid including rho = 1,
    where it equals 1/sqrt(1 + tau^2).
    """
    tau = np.asarray(tau, dtype=float)
    rho = np.asarray(rho, dtype=float)
    mp, mm = _conformal_m(tau, rho)
    out = 4.0 / np.sqrt(mp * mm)
    return out if out.ndim else float(out)


def conformal_solution_hyperboloidal_dtau(tau, rho):
    tau = np.asarray(tau, dtype=float)
    rho = np.asarray(rho, dtype=float)
    beta = 1.0 - rho * rho
    mp, mm = _conformal_m(tau, rho)
    dmp = 2.0 * tau * (1.0 + rho) ** 2 + 2.0 * beta
    dmm = 2.0 * tau * (1.0 - rho) ** 2 + 2.0 * beta
    phi = 4.0 / np.sqrt(mp * mm)
    out = -0.5 * phi * (dmp / mp + dmm / mm)
    return out if out.ndim else float(out)


def conformal_solution_hyperboloidal_drho(tau, rho):
    tau = np.asarray(tau, dtype=float)
    rho = np.asarray(rho, dtype=float)
    mp, mm = _conformal_m(tau, rho)
    dmp = 2.0 * tau * tau * (1.0 + rho) - 4.0 * tau * rho + 4.0 * rho
    dmm = -2.0 * tau * tau * (1.0 - rho) - 4.0 * tau * rho + 4.0 * rho
    phi = 4.0 / np.sqrt(mp * mm)
    out = -0.5 * phi * (dmp / mp + dmm / mm)
    return out if out.ndim else float(out)


CONFORMAL_OPTIMAL = AttractorParams(a=-1.0 / SQRT2, b=1.0 / SQRT2)


def blowup_surface(r, params: AttractorParams):
    """Future singular sheet t(r) = -a - 1/(2b) + sqrt(1/(4b^2) + r^2) for b < 0.

    The surface is a CMC hyperboloid of mean extrinsic curvature -6b.
    """
    if params.b >= 0:
        raise ValueError("blowup surface requires b < 0")
    r = np.asarray(r, dtype=float)
    inv2b = 1.0 / (2.0 * params.b)
    out = -params.a - inv2b + np.sqrt(inv2b * inv2b + r * r)
    return out if out.ndim else float(out)


def blowup_tau_origin(params: AttractorParams, K: float = DEFAULT_K) -> float:
    """tau at which the b < 0 attractor diverges at the origin."""
    t0 = blowup_surface(0.0, params)
    return t0 - 3.0 / K


def blowup_tau_scri(params: AttractorParams) -> float:
    """tau at which the b < 0 attractor diverges at null infinity (the pole
    of Phi(tau, 1) = kappa sqrt(2)/(2 b (tau + a) + 1))."""
    if params.b >= 0:
        raise ValueError("null-infinity blowup requires b < 0")
    return -params.a - 1.0 / (2.0 * params.b)


def conformal_inversion(field: Callable) -> Callable:
    """Apply the conformal inversion to a field phi(t, r).

    (I phi)(t, r) = phi(t/(r^2 - t^2), r/(t^2 - r^2)) / (t^2 - r^2).
    The map is an involution; applied to the homogeneous solution it
    generates the b-branch of the attractor family.
    """

    def inverted(t, r):
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        w = t * t - r * r
        with np.errstate(divide="ignore", invalid="ignore"):
            out = field(-t / w, r / w) / w
        return out if np.ndim(out) else float(out)

    return inverted


@dataclass(frozen=True)
class EigenmodeProfile:
    """Linear perturbation mode around the critical solution, t -> infinity chart.

    delta phi ~ t^exponent * profile(y) with similarity variable y = r/t,
    known up to overall normalization.
    """

    index: int
    exponent: float
    profile: Callable

    def __call__(self, y):
        return self.profile(y)


def _mode0(y):
    y = np.asarray(y, dtype=float)
    out = 1.0 - y * y
    return out if out.ndim else float(out)


def _mode1(y):
    y = np.asarray(y, dtype=float)
    out = np.ones_like(y)
    return out if out.ndim else float(out)


def make_mode2(eps: float = 1e-3) -> Callable:
    """Third eigenmode profile (1 - 2y^2/3 + y^4/5)/(1 - y^2)^3.

    Only defined strictly inside the light cone; samples with |y| > 1 - eps
    are rejected because of the (1-y^2)^3 denominator.
    """

    def mode2(y):
        y = np.asarray(y, dtype=float)
        if np.any(np.abs(y) > 1.0 - eps):
            raise ValueError(f"n=2 profile requires |y| <= {1.0 - eps}")
        y2 = y * y
        out = (1.0 - 2.0 * y2 / 3.0 + y2 * y2 / 5.0) / (1.0 - y2) ** 3
        return out if out.ndim else float(out)

    return mode2


def eigenmode_profiles(eps: float = 1e-3) -> list[EigenmodeProfile]:
    """First three perturbation modes: exponents 0, -2, -4.

    The first two are the symmetry modes (d/db and d/da of the family);
    the third sets the t^-4 convergence rate to the attractor.
    """
    return [
        EigenmodeProfile(0, 0.0, _mode0),
        EigenmodeProfile(1, -2.0, _mode1),
        EigenmodeProfile(2, -4.0, make_mode2(eps)),
    ]


class AttractorSolution:
    """Evaluator bundle (Phi, dPhi/dtau, dPhi/drho) for one attractor member."""

    def __init__(self, params: AttractorParams, K: float = DEFAULT_K):
        self.params = params
        self.K = K

    def phi(self, tau, rho):
        return attractor_hyperboloidal(tau, rho, self.params, self.K)

    def d_tau(self, tau, rho):
        return attractor_hyperboloidal_dtau(tau, rho, self.params, self.K)

    def d_rho(self, tau, rho):
        return attractor_hyperboloidal_drho(tau, rho, self.params, self.K)

    def standard(self, t, r):
        return attractor_standard(t, r, self.params)


class ConformalSolution:
    """Evaluator bundle for the conformal solution on the K=3 chart."""

    K = DEFAULT_K

    def phi(self, tau, rho):
        return conformal_solution_hyperboloidal(tau, rho)

    def d_tau(self, tau, rho):
        return conformal_solution_hyperboloidal_dtau(tau, rho)

    def d_rho(self, tau, rho):
        return conformal_solution_hyperboloidal_drho(tau, rho)

    def standard(self, t, r):
        return conformal_solution_standard(t, r)


def check_chart_consistency(tau, rho, params: AttractorParams, K: float = DEFAULT_K):
    """Omega * Phi_(a,b)(tau, rho) - phi_(a,b)(to_standard(tau, rho)); ~0 off scri."""
    t, r = to_standard(tau, rho, K)
    return conformal_factor(rho) * attractor_hyperboloidal(tau, rho, params, K) - attractor_standard(
        t, r, params
    )
