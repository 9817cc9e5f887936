"""Numerical laboratory for the spherically symmetric focusing cubic wave
equation on hyperboloidal slices compactified to null infinity.

Evolves the conformally rescaled field to (and through) finite-time blowup,
fits the explicit two-parameter attractor family to the data, and scripts
the threshold searches: critical amplitude, sign-flip amplitude, and
simultaneous blowup.
"""

__version__ = "0.1.0"

from .grid import (
    ChartPoint,
    FoliationParams,
    RadialGrid,
    compactify_radius,
    conformal_factor,
    physical_radius,
    ricci_scalar,
    to_hyperboloidal,
    to_standard,
)
from .solutions import (
    AttractorParams,
    AttractorSolution,
    ConformalSolution,
    CONFORMAL_OPTIMAL,
    attractor_hyperboloidal,
    attractor_standard,
    blowup_surface,
    blowup_tau_origin,
    blowup_tau_scri,
    conformal_inversion,
    conformal_solution_hyperboloidal,
    conformal_solution_standard,
    eigenmode_profiles,
    ode_solution,
)
from .diagnostics import TimeSeries, convergence_factor, l2_norm, local_power_index, loglog_slope
from .evolution import (
    BlowupInfo,
    FieldState,
    SolverConfig,
    estimate_blowup_time,
    evolve,
    make_initial_from_solution,
    make_initial_gaussian,
    rhs,
    run_from_solution,
    run_gaussian,
    step,
)
from .records import RunRecord, Snapshots, read_table, write_manifest, write_series, write_snapshot, write_table
