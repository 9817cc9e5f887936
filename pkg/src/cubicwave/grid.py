"""Compactified radial grid, hyperboloidal foliation and conformal geometry.

The radial coordinate rho in [0, 1] compactifies r = rho / Omega with
conformal factor Omega = (1 - rho^2)/2, so rho = 1 is future null infinity.
Time slices are constant-mean-curvature hyperboloids tau = t - sqrt(9/K^2 + r^2);
the evolution system elsewhere in the package fixes K = 3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_K = 3.0


def conformal_factor(rho):
    """Omega(rho) = (1 - rho^2)/2; vanishes exactly at null infinity rho = 1."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0) or np.any(rho > 1):
        raise ValueError("rho must lie in [0, 1]")
    out = 0.5 * (1.0 - rho * rho)
    return out if out.ndim else float(out)


def physical_radius(rho):
    """Area radius r = rho / Omega = 2 rho / (1 - rho^2); diverges at rho = 1."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0) or np.any(rho >= 1):
        raise ValueError("rho must lie in [0, 1); rho = 1 has infinite radius")
    out = 2.0 * rho / (1.0 - rho * rho)
    return out if out.ndim else float(out)


def ricci_scalar(rho):
    """Ricci scalar of the conformal metric: 12(1-rho^2)(3+rho^2)/(1+rho^2)^3."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0) or np.any(rho > 1):
        raise ValueError("rho must lie in [0, 1]")
    r2 = rho * rho
    out = 12.0 * (1.0 - r2) * (3.0 + r2) / (1.0 + r2) ** 3
    return out if out.ndim else float(out)


def compactify_radius(r):
    """Inverse of physical_radius: rho solving r = 2 rho/(1 - rho^2).

    Uses the cancellation-free branch rho = r / (1 + sqrt(1 + r^2)).
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be nonnegative")
    out = r / (1.0 + np.sqrt(1.0 + r * r))
    return out if out.ndim else float(out)


def to_hyperboloidal(t, r, K: float = DEFAULT_K):
    """Map standard coordinates (t, r) to hyperboloidal (tau, rho)."""
    _check_K(K)
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    tau = t - np.sqrt((3.0 / K) ** 2 + r * r)
    rho = compactify_radius(r)
    if tau.ndim or np.ndim(rho):
        return tau, rho
    return float(tau), float(rho)


def to_standard(tau, rho, K: float = DEFAULT_K):
    """Map hyperboloidal coordinates (tau, rho) to standard (t, r)."""
    _check_K(K)
    tau = np.asarray(tau, dtype=float)
    r = np.asarray(physical_radius(rho), dtype=float)
    t = tau + np.sqrt((3.0 / K) ** 2 + r * r)
    if t.ndim or r.ndim:
        return t, r
    return float(t), float(r)


def _check_K(K: float) -> None:
    if not K > 0:
        raise ValueError("mean curvature K must be positive")


@dataclass(frozen=True)
class FoliationParams:
    """Constant mean curvature K of the hyperboloidal slices (default 3)."""

    K: float = DEFAULT_K

    def __post_init__(self):
        _check_K(self.K)

    @property
    def time_shift(self) -> float:
        """Shift 3/K appearing in tau = t - sqrt((3/K)^2 + r^2)."""
        return 3.0 / self.K


@dataclass(frozen=True)
class RadialGrid:
    """Vertex-centered uniform grid on rho in [0, 1].

    n_cells intervals, n_cells + 1 points; both the origin and null infinity
    are grid points so boundary values are sampled, never extrapolated.
    """

    n_cells: int
    rho: np.ndarray = field(repr=False)
    h: float

    @classmethod
    def make(cls, n_cells: int) -> "RadialGrid":
        if n_cells < 6:
            raise ValueError("n_cells must be at least 6 for the 6th-order stencils")
        rho = np.linspace(0.0, 1.0, n_cells + 1)
        return cls(n_cells=n_cells, rho=rho, h=1.0 / n_cells)

    @property
    def n_points(self) -> int:
        return self.n_cells + 1

    def index_of_radius(self, r: float) -> int:
        """Grid index closest to the sphere of physical radius r (inf -> scri)."""
        if np.isinf(r):
            return self.n_cells
        return int(round(compactify_radius(r) / self.h))


@dataclass(frozen=True)
class ChartPoint:
    """One event in both charts: standard (t, r) and hyperboloidal (tau, rho)."""

    t: float
    r: float
    tau: float
    rho: float
    K: float = DEFAULT_K

    @classmethod
    def from_standard(cls, t: float, r: float, K: float = DEFAULT_K) -> "ChartPoint":
        tau, rho = to_hyperboloidal(t, r, K)
        return cls(t=float(t), r=float(r), tau=tau, rho=rho, K=K)

    @classmethod
    def from_hyperboloidal(cls, tau: float, rho: float, K: float = DEFAULT_K) -> "ChartPoint":
        t, r = to_standard(tau, rho, K)
        return cls(t=t, r=r, tau=float(tau), rho=float(rho), K=K)

    @property
    def standard(self) -> tuple:
        return (self.t, self.r)

    @property
    def hyperboloidal(self) -> tuple:
        return (self.tau, self.rho)
