"""Run records and plain-text persistence.

Every evolution produces a RunRecord: config snapshot, initial-data
descriptor, per-step scalar series, profile snapshots at uniform cadence,
and blowup metadata. Files are CSV with `# key=value` metadata lines;
numbers are serialized as shortest round-trip decimals so identical configs
reproduce identical bytes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__
from .diagnostics import TimeSeries


@dataclass(frozen=True)
class Snapshots:
    """Field profiles at sampled times: arrays of shape (n_times, n_points)."""

    times: np.ndarray
    grid: Any
    phi: np.ndarray
    psi: np.ndarray | None = None
    pi: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.times)


@dataclass
class RunRecord:
    """Configuration, outputs and diagnostics of one evolution."""

    chart: str
    config: dict
    initial_data: dict
    series: dict = field(default_factory=dict)
    snapshots: Snapshots | None = None
    blowup: Any = None
    crossing_times: np.ndarray | None = None
    final_state: Any = None
    fits: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    failed: bool = False

    @property
    def grid(self):
        return self.snapshots.grid if self.snapshots is not None else None

    def time_base(self) -> np.ndarray:
        first = next(iter(self.series.values()))
        return first.times

    def stamp_provenance(self, wall_time_s: float) -> None:
        self.provenance = {"code_version": __version__, "wall_time_s": wall_time_s}


def format_value(v) -> str:
    """Shortest round-trip text for a scalar."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return repr(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def parse_value(s: str):
    low = s.strip()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(low)
    except ValueError:
        pass
    try:
        return float(low)
    except ValueError:
        return low


def format_kv(d: dict) -> str:
    return "".join(f"{k}={format_value(v)}\n" for k, v in d.items())


def parse_kv_text(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        if not _:
            raise ValueError(f"malformed key=value line: {line!r}")
        out[key.strip()] = parse_value(val)
    return out


def write_table(path, columns: dict, meta: dict | None = None) -> None:
    """CSV with `# key=value` metadata, a header line, then data rows."""
    names = list(columns)
    cols = [np.atleast_1d(np.asarray(columns[k])) for k in names]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("all columns must have equal length")
    with open(path, "w", encoding="utf-8") as f:
        for k, v in (meta or {}).items():
            f.write(f"# {k}={format_value(v)}\n")
        f.write(",".join(names) + "\n")
        for i in range(n):
            f.write(",".join(format_value(c[i]) for c in cols) + "\n")


def read_table(path):
    """Inverse of write_table: returns (meta, columns)."""
    meta: dict = {}
    names: list[str] | None = None
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = parse_value(val)
                continue
            if names is None:
                names = line.split(",")
                continue
            rows.append([float(x) for x in line.split(",")])
    if names is None:
        return meta, {}
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(names)))
    return meta, {name: data[:, j] for j, name in enumerate(names)}


def _record_meta(record: RunRecord) -> dict:
    meta = {"chart": record.chart, "failed": record.failed}
    meta.update({f"config.{k}": v for k, v in record.config.items()})
    meta.update({f"init.{k}": v for k, v in record.initial_data.items()})
    return meta


def write_series(record: RunRecord, path) -> None:
    """Per-step scalar observables as one CSV (shared time base)."""
    base = record.time_base()
    columns = {"tau" if record.chart == "hyperboloidal" else "t": base}
    for name, ts in record.series.items():
        if len(ts.times) != len(base) or not np.array_equal(ts.times, base):
            raise ValueError(f"series {name!r} is not on the shared time base")
        columns[name] = ts.values
    write_table(path, columns, _record_meta(record))


def write_snapshot(record: RunRecord, path) -> None:
    """Profile snapshots in long format: one row per (time, grid point)."""
    snaps = record.snapshots
    if snaps is None:
        write_table(path, {}, _record_meta(record))
        return
    k, n = snaps.phi.shape
    radial = getattr(snaps.grid, "rho", None)
    radial_name = "rho"
    if radial is None:
        radial = snaps.grid.r
        radial_name = "r"
    tcol = np.repeat(snaps.times, n)
    rcol = np.tile(radial, k)
    columns = {
        "tau" if record.chart == "hyperboloidal" else "t": tcol,
        radial_name: rcol,
        "phi": snaps.phi.ravel(),
    }
    if snaps.psi is not None:
        columns["psi"] = snaps.psi.ravel()
    if snaps.pi is not None:
        columns["pi"] = snaps.pi.ravel()
    write_table(path, columns, _record_meta(record))


def write_manifest(record: RunRecord, path) -> None:
    """Flat key=value manifest: config, initial data, outcome, provenance."""
    info = _record_meta(record)
    if record.blowup is not None:
        info["blowup.detected"] = record.blowup.detected
        if record.blowup.detected:
            info["blowup.tau_estimate"] = record.blowup.tau_estimate
            info["blowup.location_rho"] = record.blowup.location
            info["blowup.confident"] = record.blowup.confident
    for k, v in record.provenance.items():
        info[f"provenance.{k}"] = v
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_kv(info))


def make_synthetic_record(grid, times, phi, scri_values=None, origin_values=None, chart="hyperboloidal"):
    """Build a RunRecord from given snapshot profiles (for fitting/tests).

    phi has shape (n_times, n_points); origin/scri series default to the
    profile boundary columns.
    """
    times = np.asarray(times, dtype=float)
    phi = np.asarray(phi, dtype=float)
    snaps = Snapshots(times=times, grid=grid, phi=phi)
    origin = phi[:, 0] if origin_values is None else np.asarray(origin_values, float)
    scri = phi[:, -1] if scri_values is None else np.asarray(scri_values, float)
    series = {
        "phi_origin": TimeSeries(times, origin, "phi at origin"),
        "phi_scri": TimeSeries(times, scri, "phi at scri"),
        "sup_abs": TimeSeries(times, np.max(np.abs(phi), axis=1), "sup |phi|"),
    }
    return RunRecord(
        chart=chart,
        config={"synthetic": True},
        initial_data={"kind": "synthetic"},
        series=series,
        snapshots=snaps,
    )


class Stopwatch:
    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self._t0
        return False
