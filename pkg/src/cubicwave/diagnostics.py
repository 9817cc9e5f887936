"""Quantitative observables: norms, convergence factors, power indices, slopes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import RadialGrid
from .stencils import fd_weights


@dataclass(frozen=True)
class TimeSeries:
    """Scalar observable sampled on strictly increasing times."""

    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    def window(self, t_min: float = -np.inf, t_max: float = np.inf) -> "TimeSeries":
        sel = (self.times >= t_min) & (self.times <= t_max)
        return TimeSeries(self.times[sel], self.values[sel], self.label)


def l2_norm(profile: np.ndarray, grid: RadialGrid) -> float:
    """Discrete L2 norm sqrt(h * sum w_i f_i^2) with trapezoid end-weights."""
    profile = np.asarray(profile, dtype=float)
    if profile.shape[-1] != grid.n_points:
        raise ValueError("profile length does not match grid")
    w = np.ones(grid.n_points)
    w[0] = w[-1] = 0.5
    return float(np.sqrt(grid.h * np.sum(w * profile * profile)))


def convergence_factor(snap_low, snap_med, snap_high) -> TimeSeries:
    """Three-level convergence factor Q = log2(||low-med|| / ||med-high||).

    Inputs are snapshot bundles (attributes taus, phi, grid) at resolutions
    N, 2N, 4N sharing sample times. Finer solutions are restricted to the
    coarse grid points by injection (the grids nest), and norms are taken
    on the coarse grid. Samples where the denominator underflows are NaN.
    """
    snaps = [getattr(s, "snapshots", s) for s in (snap_low, snap_med, snap_high)]
    lo, med, hi = snaps
    n = lo.grid.n_cells
    if med.grid.n_cells != 2 * n or hi.grid.n_cells != 4 * n:
        raise ValueError("resolutions must be N, 2N, 4N cells")
    n_times = min(len(s.times) for s in snaps)
    taus = lo.times[:n_times]
    for s in (med, hi):
        if not np.allclose(s.times[:n_times], taus, rtol=0, atol=1e-9):
            raise ValueError("snapshot times do not match across resolutions")
    d_lm = lo.phi[:n_times] - med.phi[:n_times, ::2]
    d_mh = med.phi[:n_times, ::2] - hi.phi[:n_times, ::4]
    norm_lm = np.array([l2_norm(d, lo.grid) for d in d_lm])
    norm_mh = np.array([l2_norm(d, lo.grid) for d in d_mh])
    tiny = 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where((norm_lm > tiny) & (norm_mh > tiny), np.log2(norm_lm / norm_mh), np.nan)
    return TimeSeries(taus, q, "convergence factor Q")


def local_power_index(series: TimeSeries, width: int = 5) -> TimeSeries:
    """Local power index p(t) = d ln|v| / d ln t.

    Differentiates on the (nonuniform in ln t) sample nodes with a sliding
    `width`-point stencil; one-sided at the ends. Samples whose stencil
    window contains a zero or a sign change are masked with NaN. Only the
    t > 0 part of the series is used.
    """
    pos = series.times > 0
    t = series.times[pos]
    v = series.values[pos]
    n = len(t)
    if n < width:
        raise ValueError(f"need at least {width} samples at positive times")
    x = np.log(t)
    half = width // 2
    out = np.full(n, np.nan)
    for i in range(n):
        lo = min(max(i - half, 0), n - width)
        w_vals = v[lo : lo + width]
        if np.any(w_vals == 0.0) or not np.all(np.isfinite(w_vals)):
            continue
        signs = np.sign(w_vals)
        if np.any(signs != signs[0]):
            continue
        wts = fd_weights(x[i], x[lo : lo + width], 1)
        out[i] = wts @ np.log(np.abs(w_vals))
    return TimeSeries(t, out, f"p[{series.label}]")


def loglog_slope(series: TimeSeries, window: tuple | None = None, abscissa: np.ndarray | None = None):
    """Least-squares slope of ln|value| vs ln(abscissa) over a window.

    `window` is an (xmin, xmax) range on the abscissa (defaults to all of it);
    `abscissa` replaces the series times (e.g. T - t for blowup rates).
    Returns (slope, stderr).
    """
    x = series.times if abscissa is None else np.asarray(abscissa, dtype=float)
    v = series.values
    if window is not None:
        sel = (x >= window[0]) & (x <= window[1])
        x, v = x[sel], v[sel]
    good = (x > 0) & np.isfinite(v) & (v != 0)
    x, v = x[good], v[good]
    if len(x) < 3:
        raise ValueError("need at least 3 usable points for a slope fit")
    lx, lv = np.log(x), np.log(np.abs(v))
    slope, intercept = np.polyfit(lx, lv, 1)
    resid = lv - (slope * lx + intercept)
    dof = max(len(x) - 2, 1)
    denom = np.sum((lx - lx.mean()) ** 2)
    stderr = float(np.sqrt(np.sum(resid**2) / dof / denom))
    return float(slope), stderr


def loglog_fit(series: TimeSeries, window: tuple | None = None, abscissa: np.ndarray | None = None):
    """Power-law fit |v| = C * x^s; returns (slope s, amplitude C)."""
    x = series.times if abscissa is None else np.asarray(abscissa, dtype=float)
    v = series.values
    if window is not None:
        sel = (x >= window[0]) & (x <= window[1])
        x, v = x[sel], v[sel]
    good = (x > 0) & np.isfinite(v) & (v != 0)
    x, v = x[good], v[good]
    if len(x) < 3:
        raise ValueError("need at least 3 usable points for a power-law fit")
    slope, intercept = np.polyfit(np.log(x), np.log(np.abs(v)), 1)
    return float(slope), float(np.exp(intercept))


def linear_slope(series: TimeSeries, window: tuple | None = None) -> float:
    """Least-squares d value / d time over a time window (no logs)."""
    t, v = series.times, series.values
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, v = t[sel], v[sel]
    good = np.isfinite(v)
    t, v = t[good], v[good]
    if len(t) < 2:
        raise ValueError("need at least 2 points for a linear slope")
    return float(np.polyfit(t, v, 1)[0])
