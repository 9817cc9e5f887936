"""Auxiliary solver in standard Minkowski coordinates.

Evolves phi_tt = phi_rr + (2/r) phi_r + phi^3 on a uniform r-grid over
[0, R] with RK4 and 6th-order differencing: parity ghosts at the regular
origin (phi even), an approximate Sommerfeld condition d_t(r phi) +
d_r(r phi) = 0 at r = R, and the same geometric time-step shrinking near
blowup as the hyperboloidal solver. The outer condition is not exact, so
quantitative claims are restricted to the domain-of-dependence mask
r < R - (t - t0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import TimeSeries
from .evolution import estimate_blowup_time, BlowupInfo
from .records import RunRecord, Snapshots, Stopwatch
from .stencils import diff1, diff2


@dataclass(frozen=True)
class StandardGrid:
    """Uniform grid on r in [0, r_max]."""

    n_cells: int
    r_max: float
    r: np.ndarray = field(repr=False)
    h: float

    @classmethod
    def make(cls, n_cells: int, r_max: float) -> "StandardGrid":
        if n_cells < 16:
            raise ValueError("n_cells must be at least 16")
        if r_max <= 0:
            raise ValueError("r_max must be positive")
        r = np.linspace(0.0, r_max, n_cells + 1)
        return cls(n_cells=n_cells, r_max=r_max, r=r, h=r_max / n_cells)

    @property
    def n_points(self) -> int:
        return self.n_cells + 1


@dataclass(frozen=True)
class StandardState:
    """(phi, phidot) profiles at one Minkowski time t."""

    t: float
    u: np.ndarray = field(repr=False)  # shape (2, n_points)
    grid: StandardGrid
    blown_up: bool = False

    @property
    def phi(self) -> np.ndarray:
        return self.u[0]

    @property
    def phidot(self) -> np.ndarray:
        return self.u[1]


@dataclass(frozen=True)
class StandardConfig:
    n_cells: int
    r_max: float
    max_t: float
    courant: float = 0.8
    blowup_threshold: float = 1e8
    dt_shrink: float = 0.5
    adapt_start_sup: float | None = None
    sample_dt: float = 0.01
    max_steps: int = 5_000_000

    def __post_init__(self):
        if not 0 < self.courant <= 1:
            raise ValueError("courant must lie in (0, 1]")

    @property
    def adapt_start(self) -> float:
        return self.adapt_start_sup if self.adapt_start_sup is not None else self.blowup_threshold / 1e2

    def to_dict(self) -> dict:
        return {
            "n_cells": self.n_cells,
            "r_max": self.r_max,
            "max_t": self.max_t,
            "courant": self.courant,
            "blowup_threshold": self.blowup_threshold,
            "dt_shrink": self.dt_shrink,
            "adapt_start_sup": self.adapt_start if self.adapt_start_sup is not None else "",
            "sample_dt": self.sample_dt,
        }


def _even_ghost_d(arr: np.ndarray, h: float, second: bool) -> np.ndarray:
    """Derivative of an even-parity field: centered stencils through r=0."""
    ext = np.concatenate([arr[3:0:-1], arr])
    return (diff2(ext, h) if second else diff1(ext, h))[3:]


def rhs_standard(state: StandardState) -> np.ndarray:
    """(d_t phi, d_t phidot) with the origin limit 3 phi_rr for the radial
    Laplacian and the outgoing condition imposed at r = r_max."""
    grid = state.grid
    phi, phidot = state.u
    h = grid.h
    with np.errstate(over="ignore", invalid="ignore"):
        d1 = _even_ghost_d(phi, h, second=False)
        d2 = _even_ghost_d(phi, h, second=True)
        lap = np.empty_like(phi)
        lap[1:] = d2[1:] + 2.0 * d1[1:] / grid.r[1:]
        lap[0] = 3.0 * d2[0]
        out = np.empty_like(state.u)
        out[0] = phidot
        out[1] = lap + phi * phi * phi
        # Sommerfeld on u = r phi: phi_tt = -d_r(phidot) - phidot / r at r_max
        dphidot = _even_ghost_d(phidot, h, second=False)
        out[1][-1] = -dphidot[-1] - phidot[-1] / grid.r_max
    return out


def step_standard(state: StandardState, dt: float, config: StandardConfig | None = None) -> StandardState:
    u = state.u
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = rhs_standard(state)
        k2 = rhs_standard(replace(state, u=u + (0.5 * dt) * k1))
        k3 = rhs_standard(replace(state, u=u + (0.5 * dt) * k2))
        k4 = rhs_standard(replace(state, u=u + dt * k3))
        un = u + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    threshold = config.blowup_threshold if config is not None else math.inf
    finite = bool(np.isfinite(un).all())
    blown = (not finite) or (np.max(np.abs(un[0])) > threshold)
    return StandardState(t=state.t + dt, u=un, grid=state.grid, blown_up=blown)


def make_initial_standard(phi0: np.ndarray, phidot0: np.ndarray, grid: StandardGrid, t0: float = 0.0) -> StandardState:
    return StandardState(t=t0, u=np.array([np.asarray(phi0, float), np.asarray(phidot0, float)]), grid=grid)


def evolve_lightcone(initial: StandardState, config: StandardConfig, initial_data: dict | None = None) -> RunRecord:
    """Integrate to max_t or blowup; analyses should use validity_mask().

    Warns (in the record) if the estimated blowup point's past light cone
    is not contained in the domain of dependence of the initial slice.
    """
    grid = initial.grid
    if grid.n_cells != config.n_cells:
        raise ValueError("initial state grid does not match config.n_cells")
    dt_base = config.courant * grid.h
    next_shrink = config.adapt_start

    rows_t: list[float] = []
    rows: list[list[float]] = []
    snap_times: list[float] = []
    snap_u: list[np.ndarray] = []

    def observe(state: StandardState) -> float:
        a = np.abs(state.u[0])
        sup = float(a.max())
        rows_t.append(state.t)
        rows.append([sup, float(state.u[0, 0]), float(state.u[1, 0])])
        return sup

    with Stopwatch() as sw:
        state = initial
        t0 = state.t
        sup = observe(state)
        snap_times.append(state.t)
        snap_u.append(state.u.copy())
        blown = (not np.isfinite(state.u).all()) or sup > config.blowup_threshold
        failed = False
        n_steps = 0
        dt_cur = dt_base
        n_samples = int(math.floor((config.max_t - t0) / config.sample_dt + 1e-9))
        for k in range(1, n_samples + 1):
            t_next = t0 + k * config.sample_dt
            if blown:
                break
            while state.t < t_next - 1e-12:
                remaining = t_next - state.t
                m = max(1, math.ceil(remaining / dt_cur - 1e-9))
                state = step_standard(state, remaining / m, config)
                n_steps += 1
                sup = observe(state)
                if state.blown_up:
                    blown = True
                    break
                while sup >= next_shrink:
                    dt_cur *= config.dt_shrink
                    next_shrink *= 2.0
                if n_steps >= config.max_steps:
                    failed = True
                    break
            if blown or failed:
                break
            state = replace(state, t=t_next)
            rows_t[-1] = t_next
            snap_times.append(t_next)
            snap_u.append(state.u.copy())

    times = np.array(rows_t)
    table = np.array(rows)
    series = {
        name: TimeSeries(times, table[:, j], name)
        for j, name in enumerate(["sup_abs", "phi_origin", "phidot_origin"])
    }
    snap_arr = np.array(snap_u)
    snapshots = Snapshots(times=np.array(snap_times), grid=grid, phi=snap_arr[:, 0], psi=snap_arr[:, 1])

    if blown:
        with np.errstate(invalid="ignore"):
            loc = int(np.argmax(np.nan_to_num(np.abs(state.u[0]), nan=-1.0, posinf=np.inf)))
        t_est, confident = estimate_blowup_time(times, table[:, 0])
        blowup = BlowupInfo(
            detected=True,
            tau_estimate=t_est,
            location_index=loc,
            location=float(grid.r[loc]),
            confident=confident and (t_est - t0) <= grid.r_max,
        )
    else:
        blowup = BlowupInfo(detected=False)

    record = RunRecord(
        chart="standard",
        config=config.to_dict(),
        initial_data=dict(initial_data or {"kind": "custom"}),
        series=series,
        snapshots=snapshots,
        blowup=blowup,
        final_state=state,
        failed=failed,
    )
    record.stamp_provenance(sw.elapsed)
    return record


def validity_mask(record: RunRecord) -> np.ndarray:
    """Domain-of-dependence flags: valid[i, j] iff r_j < r_max - (t_i - t0)."""
    snaps = record.snapshots
    t0 = snaps.times[0]
    return snaps.grid.r[None, :] < snaps.grid.r_max - (snaps.times[:, None] - t0)


def run_gaussian_standard(amplitude: float, config: StandardConfig, sigma_r: float = 0.5) -> RunRecord:
    """Centered (even-parity) Gaussian phi(0, r) = A exp(-r^2/sigma_r^2), phidot = 0."""
    grid = StandardGrid.make(config.n_cells, config.r_max)
    phi0 = amplitude * np.exp(-(grid.r / sigma_r) ** 2)
    init = make_initial_standard(phi0, np.zeros_like(phi0), grid)
    return evolve_lightcone(init, config, {"kind": "gaussian-standard", "amplitude": amplitude, "sigma_r": sigma_r})


def hyperboloidal_to_standard_slice(record: RunRecord, t_slice: float, r: np.ndarray):
    """Sample (phi, phidot) on a constant-t slice from a hyperboloidal run.

    Uses phi = Omega Phi and phidot = Omega ((1+rho^2)/2 pi - rho psi)
    (the chart time directions coincide at fixed r), interpolating the
    stored snapshots in tau (cubic) and rho (cubic). The slice must lie
    inside the run's sampled tau range for every requested r.
    """
    from scipy.interpolate import CubicSpline

    from .grid import compactify_radius, conformal_factor

    snaps = record.snapshots
    if snaps is None or snaps.psi is None or snaps.pi is None:
        raise ValueError("record must carry full (phi, psi, pi) snapshots")
    r = np.asarray(r, dtype=float)
    rho = compactify_radius(r)
    tau_needed = t_slice - np.sqrt(1.0 + r * r)
    if tau_needed.min() < snaps.times[0] - 1e-12 or tau_needed.max() > snaps.times[-1] + 1e-12:
        raise ValueError("requested slice leaves the sampled tau range")
    grid_rho = snaps.grid.rho
    q = 0.5 * (1.0 + grid_rho * grid_rho)
    flux = q * snaps.pi - grid_rho * snaps.psi  # d_tau Phi on each snapshot
    phi_t = CubicSpline(snaps.times, snaps.phi, axis=0)
    flux_t = CubicSpline(snaps.times, flux, axis=0)
    omega = conformal_factor(rho)
    phi = np.empty_like(r)
    phidot = np.empty_like(r)
    for j in range(len(r)):
        prof = phi_t(tau_needed[j])
        dprof = flux_t(tau_needed[j])
        phi[j] = omega[j] * CubicSpline(grid_rho, prof)(rho[j])
        phidot[j] = omega[j] * CubicSpline(grid_rho, dprof)(rho[j])
    return phi, phidot
