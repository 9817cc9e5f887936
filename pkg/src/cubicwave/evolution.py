"""Method-of-lines evolution of the conformal cubic-wave system.

First-order symmetric hyperbolic system on the compactified grid
(Phi, psi, pi), with q = (1+rho^2)/2 and F = q psi - rho pi:

    d_tau Phi = q pi - rho psi
    d_tau psi = d_rho(q pi - rho psi)
    d_tau pi  = (1/rho^2) d_rho(rho^2 F) + q (Phi^3 - R/6 Phi)

Classical RK4 in time and 6th-order finite differences in space. The
origin is a regular center, not a boundary: stencils there are centered,
closed with parity ghost points (Phi, pi even; psi odd), the regularity
condition psi(tau, 0) = 0 is enforced on the right-hand side and after
every full step, and the 1/rho^2 divergence uses the analytic limit
3 dF/drho at rho = 0. Null infinity rho = 1 is a pure outflow boundary:
one-sided closures, no boundary condition. An 8th-order Kreiss-Oliger
dissipation term (O(h^7), invisible at 6th order) is required for linear
stability of the semi-discrete operator: without it the origin cluster
has eigenvalues with positive real part growing linearly in resolution,
driven by the 1/rho-singular lower-order coupling. The dissipation
strength is ramped down near null infinity, where the outgoing
characteristic speed degenerates to zero and solutions develop 1/tau-wide
boundary layers: full-strength dissipation there dominates the error
budget of convergence measurements. Time steps shrink geometrically as
the sup-norm grows so the blowup approach stays resolved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .diagnostics import TimeSeries
from .grid import DEFAULT_K, FoliationParams, RadialGrid, ricci_scalar
from .records import RunRecord, Snapshots, Stopwatch
from .stencils import diff1

DEFAULT_DISSIPATION = 0.5
DEFAULT_DISSIPATION_SCRI = 0.02
_RAMP_CENTER = 0.75
_RAMP_WIDTH = 0.08


@dataclass(frozen=True)
class FieldState:
    """Profiles (Phi, psi, pi) at one hyperboloidal time.

    Phi is the rescaled field phi/Omega, psi = d_rho Phi, and
    pi = (2/(1+rho^2)) (d_tau Phi + rho d_rho Phi).
    """

    tau: float
    u: np.ndarray = field(repr=False)  # shape (3, n_points)
    grid: RadialGrid
    blown_up: bool = False

    @property
    def phi(self) -> np.ndarray:
        return self.u[0]

    @property
    def psi(self) -> np.ndarray:
        return self.u[1]

    @property
    def pi(self) -> np.ndarray:
        return self.u[2]

    def sup_abs(self) -> float:
        return float(np.max(np.abs(self.u[0])))

    def negated(self) -> "FieldState":
        return replace(self, u=-self.u)


@dataclass(frozen=True)
class SolverConfig:
    """Grid resolution, stepping and blowup-handling settings."""

    n_cells: int
    max_tau: float
    courant: float = 0.8
    stencil_order: int = 6
    integrator: str = "rk4"
    blowup_threshold: float = 1e8
    dt_shrink: float = 0.5
    adapt_start_sup: float | None = None  # default: blowup_threshold / 100
    crossing_threshold: float | None = None  # default: blowup_threshold / 1e4
    sample_dtau: float = 0.5
    probe_radii: tuple = ()
    dissipation: float = DEFAULT_DISSIPATION
    dissipation_scri: float = DEFAULT_DISSIPATION_SCRI
    max_steps: int = 5_000_000

    def __post_init__(self):
        if not 0 < self.courant <= 1:
            raise ValueError("courant must lie in (0, 1]")
        if self.n_cells < 16:
            raise ValueError("n_cells must be at least 16")
        if self.stencil_order != 6:
            raise ValueError("only the 6th-order spatial scheme is implemented")
        if self.integrator != "rk4":
            raise ValueError("only classical RK4 is implemented")
        if self.sample_dtau <= 0 or self.max_tau <= 0:
            raise ValueError("sample_dtau and max_tau must be positive")

    @property
    def adapt_start(self) -> float:
        return self.adapt_start_sup if self.adapt_start_sup is not None else self.blowup_threshold / 1e2

    @property
    def crossing_level(self) -> float:
        return (
            self.crossing_threshold if self.crossing_threshold is not None else self.blowup_threshold / 1e4
        )

    def to_dict(self) -> dict:
        d = {
            "n_cells": self.n_cells,
            "max_tau": self.max_tau,
            "courant": self.courant,
            "stencil_order": self.stencil_order,
            "integrator": self.integrator,
            "blowup_threshold": self.blowup_threshold,
            "dt_shrink": self.dt_shrink,
            "sample_dtau": self.sample_dtau,
            "dissipation": self.dissipation,
            "dissipation_scri": self.dissipation_scri,
            "max_steps": self.max_steps,
        }
        if self.adapt_start_sup is not None:
            d["adapt_start_sup"] = self.adapt_start_sup
        if self.crossing_threshold is not None:
            d["crossing_threshold"] = self.crossing_threshold
        if self.probe_radii:
            d["probe_radii"] = ",".join(repr(float(r)) for r in self.probe_radii)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        kwargs = dict(d)
        probes = kwargs.pop("probe_radii", "")
        if isinstance(probes, str):
            kwargs["probe_radii"] = tuple(float(x) for x in probes.split(",") if x) if probes else ()
        else:
            kwargs["probe_radii"] = tuple(probes)
        return cls(**kwargs)


@dataclass(frozen=True)
class BlowupInfo:
    """Outcome of blowup detection for one run."""

    detected: bool
    tau_estimate: float = math.nan
    location_index: int = -1
    location: float = math.nan
    confident: bool = False


_BINOM8 = np.array([1.0, -8.0, 28.0, -56.0, 70.0, -56.0, 28.0, -8.0, 1.0])


class _Workspace:
    """Grid-derived arrays shared by all right-hand-side evaluations."""

    def __init__(self, grid: RadialGrid):
        rho = grid.rho
        self.h = grid.h
        self.rho = rho
        self.q = 0.5 * (1.0 + rho * rho)
        self.ricci6 = ricci_scalar(rho) / 6.0
        two_inv = np.zeros_like(rho)
        two_inv[1:] = 2.0 / rho[1:]
        self.two_inv_rho = two_inv


_WORKSPACES: dict[int, _Workspace] = {}


def _workspace(grid: RadialGrid) -> _Workspace:
    ws = _WORKSPACES.get(grid.n_cells)
    if ws is None:
        ws = _WORKSPACES[grid.n_cells] = _Workspace(grid)
    return ws


def _d1_center(arr: np.ndarray, parity: float, h: float) -> np.ndarray:
    """First derivative, centered through the regular center via 3 parity
    ghost points; one-sided closures only at the outer (scri) end."""
    ext = np.concatenate([parity * arr[3:0:-1], arr])
    return diff1(ext, h)[3:]


_KO_PROFILES: dict[tuple, np.ndarray] = {}


def _ko_profile(grid: RadialGrid, sigma: float, sigma_scri: float) -> np.ndarray | None:
    """Spatial dissipation mask -sigma(rho)/(256 h): full strength over the
    interior, tanh-ramped down approaching null infinity."""
    if sigma == 0.0 and sigma_scri == 0.0:
        return None
    key = (grid.n_cells, sigma, sigma_scri)
    prof = _KO_PROFILES.get(key)
    if prof is None:
        s = 0.5 * (1.0 + np.tanh((grid.rho - _RAMP_CENTER) / _RAMP_WIDTH))
        prof = -(sigma * (1.0 - s) + sigma_scri * s) / (256.0 * grid.h)
        _KO_PROFILES[key] = prof
    return prof


def _ko8(arr: np.ndarray, parity: float, profile: np.ndarray) -> np.ndarray:
    """8th-difference Kreiss-Oliger dissipation, applied through the origin
    with parity ghosts and tapered to zero on the 4 outermost points."""
    ext = np.concatenate([parity * arr[4:0:-1], arr])
    out = np.zeros_like(arr)
    conv = np.convolve(ext, _BINOM8, mode="valid")
    out[: len(arr) - 4] = conv[: len(arr) - 4]
    out *= profile
    return out


def _rhs_arrays(u: np.ndarray, ws: _Workspace, ko: np.ndarray | None) -> np.ndarray:
    phi, psi, pi = u
    flux = ws.q * pi - ws.rho * psi
    f_rad = ws.q * psi - ws.rho * pi
    f_rad[0] = 0.0  # regularity: psi(tau, 0) = 0
    df = _d1_center(f_rad, -1.0, ws.h)
    div = df + f_rad * ws.two_inv_rho
    # Origin limit of (1/rho^2) d_rho(rho^2 F) = 3 dF/drho, using F(0) = 0.
    div[0] = 3.0 * df[0]
    out = np.empty_like(u)
    out[0] = flux
    out[1] = _d1_center(flux, 1.0, ws.h)
    out[1][0] = 0.0
    out[2] = div + ws.q * (phi * phi * phi - ws.ricci6 * phi)
    if ko is not None:
        out[0] += _ko8(phi, 1.0, ko)
        out[1] += _ko8(psi, -1.0, ko)
        out[2] += _ko8(pi, 1.0, ko)
    return out


def rhs(
    state: FieldState,
    foliation: FoliationParams | None = None,
    dissipation: float = DEFAULT_DISSIPATION,
    dissipation_scri: float = DEFAULT_DISSIPATION_SCRI,
) -> np.ndarray:
    """Time derivative of (Phi, psi, pi); shape (3, n_points).

    Non-finite values propagate (blowup detection happens in step/evolve).
    """
    if foliation is not None and foliation.K != DEFAULT_K:
        raise ValueError("the evolution system is formulated on the K=3 foliation")
    ko = _ko_profile(state.grid, dissipation, dissipation_scri)
    with np.errstate(over="ignore", invalid="ignore"):
        return _rhs_arrays(state.u, _workspace(state.grid), ko)


def step(state: FieldState, dt: float, config: SolverConfig | None = None) -> FieldState:
    """One classical RK4 step; re-imposes psi(tau, 0) = 0 on the result.

    The returned state is flagged blown_up if it is non-finite or its
    sup-norm exceeds the configured threshold.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    ws = _workspace(state.grid)
    if config is not None:
        ko = _ko_profile(state.grid, config.dissipation, config.dissipation_scri)
    else:
        ko = _ko_profile(state.grid, DEFAULT_DISSIPATION, DEFAULT_DISSIPATION_SCRI)
    u = state.u
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = _rhs_arrays(u, ws, ko)
        k2 = _rhs_arrays(u + (0.5 * dt) * k1, ws, ko)
        k3 = _rhs_arrays(u + (0.5 * dt) * k2, ws, ko)
        k4 = _rhs_arrays(u + dt * k3, ws, ko)
        un = u + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    un[1, 0] = 0.0
    threshold = config.blowup_threshold if config is not None else math.inf
    finite = bool(np.isfinite(un).all())
    blown = (not finite) or (np.max(np.abs(un[0])) > threshold)
    return FieldState(tau=state.tau + dt, u=un, grid=state.grid, blown_up=blown)


def make_initial_gaussian(amplitude: float, rho_c: float, sigma: float, grid: RadialGrid) -> FieldState:
    """Time-symmetric Gaussian pulse Phi(0, rho) = A exp(-(rho-rho_c)^2/sigma^2).

    d_tau Phi = 0 is encoded through pi; psi is the analytic rho-derivative.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    rho = grid.rho
    phi = amplitude * np.exp(-((rho - rho_c) ** 2) / sigma**2)
    psi = -2.0 * (rho - rho_c) / sigma**2 * phi
    pi = 2.0 * rho * psi / (1.0 + rho * rho)
    return FieldState(tau=0.0, u=np.array([phi, psi, pi]), grid=grid)


def make_initial_from_solution(solution, tau0: float, grid: RadialGrid) -> FieldState:
    """Sample (Phi, psi, pi) from a closed-form evaluator at time tau0.

    The evaluator must provide phi/d_tau/d_rho on the K=3 chart; pole
    sentinels (non-finite values) are propagated into the state.
    """
    rho = grid.rho
    phi = np.asarray(solution.phi(tau0, rho), dtype=float)
    psi = np.asarray(solution.d_rho(tau0, rho), dtype=float)
    dtau = np.asarray(solution.d_tau(tau0, rho), dtype=float)
    pi = 2.0 / (1.0 + rho * rho) * (dtau + rho * psi)
    return FieldState(tau=float(tau0), u=np.array([phi, psi, pi]), grid=grid)


def estimate_blowup_time(times, values, n_tail: int = 20):
    """Blowup time from the reciprocal rate law: 1/sup|Phi| is asymptotically
    linear in tau, so fit a line through the last samples (within the final
    decade of growth) and return its zero crossing. Returns (T, confident).
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    good = np.isfinite(v) & (v > 0)
    t, v = t[good], v[good]
    if len(v) < 3:
        return math.nan, False
    sel = v >= np.max(v) / 10.0
    t, v = t[sel][-n_tail:], v[sel][-n_tail:]
    if len(v) < 3:
        return math.nan, False
    slope, intercept = np.polyfit(t, 1.0 / v, 1)
    if not np.isfinite(slope) or slope >= 0:
        return math.nan, False
    return float(-intercept / slope), True


def evolve(
    initial: FieldState,
    config: SolverConfig,
    observers: Sequence[Callable] = (),
    initial_data: dict | None = None,
) -> RunRecord:
    """Integrate to max_tau or blowup, recording observables.

    Scalar observables (sup-norm, field at origin/scri/probe radii) are
    recorded at every accepted step; full profiles are recorded at the
    uniform sample cadence, stepping exactly onto each sample time. On
    blowup the run stops, the blowup time is extrapolated from the
    reciprocal growth law, and per-point threshold-crossing times up to
    that point are kept.
    """
    grid = initial.grid
    if grid.n_cells != config.n_cells:
        raise ValueError("initial state grid does not match config.n_cells")
    probe_idx = [grid.index_of_radius(r) for r in config.probe_radii]
    dt_base = config.courant * grid.h
    next_shrink = config.adapt_start
    crossing = np.full(grid.n_points, np.nan)
    uncrossed = grid.n_points

    rows_tau: list[float] = []
    rows: list[list[float]] = []
    snap_times: list[float] = []
    snap_u: list[np.ndarray] = []

    def observe_step(state: FieldState) -> float:
        a = np.abs(state.u[0])
        idx = int(np.argmax(a))
        sup = float(a[idx])
        rows_tau.append(state.tau)
        rows.append([sup, float(state.u[0, 0]), float(state.u[0, -1])] + [float(state.u[0, j]) for j in probe_idx])
        nonlocal uncrossed
        if uncrossed and sup > config.crossing_level:
            mask = np.isnan(crossing) & (a > config.crossing_level)
            if mask.any():
                crossing[mask] = state.tau
                uncrossed -= int(mask.sum())
        return sup

    with Stopwatch() as sw:
        state = initial
        tau0 = state.tau
        sup = observe_step(state)
        snap_times.append(state.tau)
        snap_u.append(state.u.copy())
        blown = (not np.isfinite(state.u).all()) or sup > config.blowup_threshold
        failed = False
        n_steps = 0
        n_samples = int(math.floor((config.max_tau - tau0) / config.sample_dtau + 1e-9))
        dt_cur = dt_base
        for k in range(1, n_samples + 1):
            tau_next = tau0 + k * config.sample_dtau
            if blown:
                break
            while state.tau < tau_next - 1e-12:
                remaining = tau_next - state.tau
                m = max(1, math.ceil(remaining / dt_cur - 1e-9))
                state = step(state, remaining / m, config)
                n_steps += 1
                sup = observe_step(state)
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
            state = replace(state, tau=tau_next)
            rows_tau[-1] = tau_next
            snap_times.append(tau_next)
            snap_u.append(state.u.copy())
            for obs in observers:
                obs(state)

    taus = np.array(rows_tau)
    table = np.array(rows)
    labels = ["sup_abs", "phi_origin", "phi_scri"] + [f"phi_r{r:g}" for r in config.probe_radii]
    series = {name: TimeSeries(taus, table[:, j], name) for j, name in enumerate(labels)}

    snap_arr = np.array(snap_u)
    snapshots = Snapshots(
        times=np.array(snap_times),
        grid=grid,
        phi=snap_arr[:, 0],
        psi=snap_arr[:, 1],
        pi=snap_arr[:, 2],
    )

    if blown:
        with np.errstate(invalid="ignore"):
            loc = int(np.argmax(np.nan_to_num(np.abs(state.u[0]), nan=-1.0, posinf=np.inf)))
        t_est, confident = estimate_blowup_time(taus, table[:, 0])
        blowup = BlowupInfo(
            detected=True,
            tau_estimate=t_est,
            location_index=loc,
            location=float(grid.rho[loc]),
            confident=confident,
        )
    else:
        blowup = BlowupInfo(detected=False)

    record = RunRecord(
        chart="hyperboloidal",
        config=config.to_dict(),
        initial_data=dict(initial_data or {"kind": "custom"}),
        series=series,
        snapshots=snapshots,
        blowup=blowup,
        crossing_times=crossing,
        final_state=state,
        failed=failed,
    )
    record.stamp_provenance(sw.elapsed)
    return record


def run_gaussian(
    amplitude: float,
    config: SolverConfig,
    rho_c: float = 0.3,
    sigma: float = 0.07,
    observers: Sequence[Callable] = (),
) -> RunRecord:
    """Evolve the standard Gaussian pulse family."""
    grid = RadialGrid.make(config.n_cells)
    initial = make_initial_gaussian(amplitude, rho_c, sigma, grid)
    descriptor = {"kind": "gaussian", "amplitude": amplitude, "rho_c": rho_c, "sigma": sigma}
    return evolve(initial, config, observers, initial_data=descriptor)


def run_from_solution(solution, tau0: float, config: SolverConfig, descriptor: dict | None = None) -> RunRecord:
    """Evolve initial data sampled from a closed-form solution evaluator."""
    grid = RadialGrid.make(config.n_cells)
    initial = make_initial_from_solution(solution, tau0, grid)
    return evolve(initial, config, initial_data=descriptor or {"kind": "solution-seeded", "tau0": tau0})
