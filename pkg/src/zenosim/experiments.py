"""Parameter-sweep orchestration over the measurement protocol.

Runs (beta, phi2, phi1) grids of the piecewise protocol and/or the
coarse-grained master equation, collects per-point dissipation S_L,
escape P_Zbar and the non-Markovianity witness N_BLP, and persists the
results as versioned CSV files plus a structured run manifest. Grid
points are independent: an optional process pool evaluates them in
parallel with order-preserving assembly, so serial and parallel runs
produce byte-identical files.

Sweeps default to the dressed frame, where each pulse carrier tracks its
dressed pair and a grid point depends only on (beta, phi2, phi1).
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import isfinite, isnan, nan, sqrt

import numpy as np

from . import __version__
from .dynamics import ProtocolSpec, TruncationError, derive_schedule, run_piecewise
from .lindblad import LindbladParams, propagate_lindblad
from .measures import (
    BlochAngles, PAIR_CONVENTIONS, blp_measure, lindblad_blp, pair_from_angles,
    standard_pair,
)
from .model import FRAME_MODES
from .statespace import (
    DensityOperator, InvariantError, SpaceConfig, fock_state,
)

__all__ = [
    "CSV_FORMAT", "MANIFEST_FORMAT", "ENGINES",
    "SMOKE_BETA_GRID", "SMOKE_PHI2_GRID", "SMOKE_PHI1_GRID",
    "SMOKE_N_MAX", "SMOKE_SUB_SAMPLES",
    "FIGURE_BETA_GRID", "FIGURE_PHI2_GRID", "FIGURE_PHI1_GRID",
    "FIGURE_BETA_HIGHLIGHTS", "ADDRESSABILITY_WARN_BELOW",
    "SweepSpec", "SweepRow", "TurningPoint", "SweepResult",
    "ComparisonRow", "EngineComparison", "smoke_spec",
    "sweep_single_pulse", "sweep_two_pulse", "compare_engines",
    "addressability_margin", "write_results", "read_results",
    "write_manifest", "emit_plot_script",
]

CSV_FORMAT = "zenosim-sweep-csv/1"
MANIFEST_FORMAT = "zenosim-manifest/1"
ENGINES = ("piecewise", "lindblad", "both")

# Margins below this are flagged: the pulse window is too short to resolve
# the dressed splitting of the addressed level from its neighbours.
ADDRESSABILITY_WARN_BELOW = 10.0

# Coarse CI grids: small enough to sweep in minutes on one core, wide
# enough to bracket the figure ranges and hit the landmark corners.
SMOKE_BETA_GRID = (0.0126, 0.025, 0.05, 0.1)
SMOKE_PHI2_GRID = tuple(np.pi * f for f in (0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0))
SMOKE_PHI1_GRID = tuple(np.pi * f for f in (0.0, 0.1, 0.175, 0.25, 0.5))
SMOKE_N_MAX = 100
SMOKE_SUB_SAMPLES = 6

# Figure-grade grids (hours of compute; not exercised by the test suite).
FIGURE_BETA_GRID = tuple(float(b) for b in np.geomspace(0.0126, 0.251, 20))
FIGURE_PHI2_GRID = tuple(np.pi * (k / 10) for k in range(61))
FIGURE_PHI1_GRID = tuple(np.pi * (k / 40) for k in range(41))
FIGURE_BETA_HIGHLIGHTS = (0.0126, 0.0252, 0.0503)

_ROW_COLUMNS = ("beta", "phi2", "phi1", "S_L", "P_escape", "N_BLP",
                "engine", "error")
_COMPARISON_COLUMNS = ("beta", "phi2", "S_L_piecewise", "S_L_lindblad",
                       "delta_S_L", "P_escape_piecewise", "P_escape_lindblad",
                       "delta_P_escape", "error")


def _strictly_increasing(grid) -> bool:
    return all(b > a for a, b in zip(grid, grid[1:]))


@dataclass(frozen=True)
class SweepSpec:
    """Grid and engine selection for one sweep.

    Parameters
    ----------
    beta_grid, phi2_grid, phi1_grid : sequences of float
        Nonempty, strictly increasing. phi1_grid may be the singleton (0,)
        for single-pulse sweeps; nonzero phi1 entries enable the z=1 pulse
        alongside the z=2 pulse.
    pair_convention : str, BlochAngles, or None
        Pair preset for the witness ("ground" or "plus"), explicit Bloch
        angles, or None to take the sweep kind's default.
    engine : str
        "piecewise", "lindblad", or "both".
    output_path : str or None
        Destination recorded in the manifest; None leaves persistence to
        the caller.
    n_max, sub_samples, frame, drive_ratio, omega_rabi
        Resolution and frame knobs forwarded to the protocol builder.
    """

    beta_grid: tuple
    phi2_grid: tuple
    phi1_grid: tuple = (0.0,)
    pair_convention: object = None
    engine: str = "piecewise"
    output_path: str = None
    n_max: int = 130
    sub_samples: int = 20
    frame: str = "dressed"
    drive_ratio: float = 0.005
    omega_rabi: float = 1.0

    def __post_init__(self):
        for name in ("beta_grid", "phi2_grid", "phi1_grid"):
            grid = tuple(float(v) for v in getattr(self, name))
            if not grid:
                raise ValueError(f"{name} must be nonempty")
            if not all(isfinite(v) for v in grid):
                raise ValueError(f"{name} must be finite")
            if not _strictly_increasing(grid):
                raise ValueError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, grid)
        if self.beta_grid[0] <= 0:
            raise ValueError("beta_grid values must be > 0")
        if self.phi2_grid[0] < 0 or self.phi1_grid[0] < 0:
            raise ValueError("pulse angles must be >= 0")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.frame not in FRAME_MODES:
            raise ValueError(f"frame must be one of {FRAME_MODES}, got {self.frame!r}")
        if self.n_max < 8:
            raise ValueError(f"n_max too small: {self.n_max}")
        if self.sub_samples < 1:
            raise ValueError(f"sub_samples must be >= 1, got {self.sub_samples}")
        if not (isinstance(self.pair_convention, (str, BlochAngles))
                or self.pair_convention is None):
            raise ValueError("pair_convention must be a preset name, "
                             "BlochAngles, or None")
        if (isinstance(self.pair_convention, str)
                and self.pair_convention not in PAIR_CONVENTIONS):
            raise ValueError(f"unknown pair preset {self.pair_convention!r}; "
                             f"presets: {PAIR_CONVENTIONS}")

    @property
    def engines(self) -> tuple:
        return ("piecewise", "lindblad") if self.engine == "both" else (self.engine,)

    def grid_points(self):
        """Lexicographic (beta, phi2, phi1) iteration order of the rows."""
        for beta in self.beta_grid:
            for phi2 in self.phi2_grid:
                for phi1 in self.phi1_grid:
                    yield beta, phi2, phi1


@dataclass(frozen=True)
class SweepRow:
    """One grid point of one engine; wall_time never reaches the CSV."""

    beta: float
    phi2: float
    phi1: float
    entropy: float
    escape: float
    blp: float
    engine: str
    wall_time: float = 0.0
    error: str = ""

    def csv_fields(self) -> tuple:
        return (_fmt(self.beta), _fmt(self.phi2), _fmt(self.phi1),
                _fmt(self.entropy), _fmt(self.escape), _fmt(self.blp),
                self.engine, self.error)


@dataclass(frozen=True)
class TurningPoint:
    """phi1 maximizing S_L at fixed (beta, phi2), with the maximum value."""

    beta: float
    phi2: float
    phi1_opt: float
    entropy_max: float


@dataclass(frozen=True)
class SweepResult:
    """Rows in deterministic grid order, plus the resolved spec that made them."""

    kind: str
    spec: SweepSpec
    rows: tuple
    turning_points: tuple = ()

    @property
    def error_count(self) -> int:
        return sum(1 for row in self.rows if row.error)


@dataclass(frozen=True)
class ComparisonRow:
    beta: float
    phi2: float
    entropy_piecewise: float
    entropy_lindblad: float
    escape_piecewise: float
    escape_lindblad: float
    error: str = ""

    @property
    def delta_entropy(self) -> float:
        return self.entropy_piecewise - self.entropy_lindblad

    @property
    def delta_escape(self) -> float:
        return self.escape_piecewise - self.escape_lindblad

    def csv_fields(self) -> tuple:
        return (_fmt(self.beta), _fmt(self.phi2),
                _fmt(self.entropy_piecewise), _fmt(self.entropy_lindblad),
                _fmt(self.delta_entropy),
                _fmt(self.escape_piecewise), _fmt(self.escape_lindblad),
                _fmt(self.delta_escape), self.error)


@dataclass(frozen=True)
class EngineComparison:
    """Per-point engine differences and their trend against phi2 * beta."""

    spec: SweepSpec
    rows: tuple
    correlation: float

    kind: str = "compare"

    @property
    def error_count(self) -> int:
        return sum(1 for row in self.rows if row.error)


def smoke_spec(two_pulse: bool = False, engine: str = "piecewise",
               output_path: str = None) -> SweepSpec:
    """CI-sized sweep over the shipped smoke grids."""
    return SweepSpec(beta_grid=SMOKE_BETA_GRID, phi2_grid=SMOKE_PHI2_GRID,
                     phi1_grid=SMOKE_PHI1_GRID if two_pulse else (0.0,),
                     engine=engine, output_path=output_path,
                     n_max=SMOKE_N_MAX, sub_samples=SMOKE_SUB_SAMPLES)


def _resolve_pair(spec: SweepSpec, kind: str):
    if spec.pair_convention is not None:
        return spec.pair_convention
    # Single-pulse sweeps pair the ground state with the addressed level;
    # two-pulse sweeps default to the equal superposition partner.
    return "ground" if kind == "single_pulse" else "plus"


def _build_pair(convention, space, level):
    if isinstance(convention, BlochAngles):
        return pair_from_angles(convention, space, level)
    return standard_pair(convention, space, level)


def _fmt(value: float) -> str:
    if isinstance(value, str):
        return value
    if isnan(value):
        return ""
    return format(float(value), ".12g")


def _parse(field: str) -> float:
    return nan if field == "" else float(field)


def _piecewise_point(spec: SweepSpec, convention, beta, phi2, phi1):
    angles = {2: phi2, 1: phi1}
    protocol = ProtocolSpec.build(
        beta=beta, rabi_angles=angles, n_max=spec.n_max, sub_samples=1,
        frame=spec.frame, omega_rabi=spec.omega_rabi,
        drive_ratio=spec.drive_ratio, escape_level=2)
    trajectory = run_piecewise(protocol, store_states="none")
    pair = _build_pair(convention, protocol.space, 2)
    witness_protocol = dataclasses.replace(protocol,
                                           sub_samples=spec.sub_samples)
    return (float(trajectory.linear_entropy[-1]),
            float(trajectory.escape_population[-1]),
            float(blp_measure(pair, witness_protocol)))


def _lindblad_point(spec: SweepSpec, convention, beta, phi2):
    schedule = derive_schedule(beta, {2: phi2}, omega_rabi=spec.omega_rabi,
                               drive_ratio=spec.drive_ratio)
    params = LindbladParams.from_angle(
        phi2, schedule.tau, level=2, drive_amplitude=schedule.drive_amplitude)
    total_time = schedule.intervals * schedule.tau
    space = SpaceConfig(n_max=spec.n_max)
    rho0 = DensityOperator.from_ket(fock_state(0, space))
    trajectory = propagate_lindblad(rho0, params, total_time, samples=8,
                                    store_states="none")
    pair = _build_pair(convention, space, 2)
    witness = lindblad_blp(pair, params, total_time,
                           samples=4 * schedule.intervals)
    return (float(trajectory.linear_entropy[-1]),
            float(trajectory.escape_population[-1]),
            float(witness))


def _evaluate_point(work) -> SweepRow:
    spec, convention, beta, phi2, phi1, engine = work
    start = time.perf_counter()
    try:
        if engine == "piecewise":
            entropy, escape, witness = _piecewise_point(
                spec, convention, beta, phi2, phi1)
        else:
            entropy, escape, witness = _lindblad_point(
                spec, convention, beta, phi2)
        error = ""
    except (TruncationError, InvariantError, ValueError) as exc:
        entropy = escape = witness = nan
        error = f"{type(exc).__name__}: {exc}"
    return SweepRow(beta=beta, phi2=phi2, phi1=phi1, entropy=entropy,
                    escape=escape, blp=witness, engine=engine,
                    wall_time=time.perf_counter() - start, error=error)


def _evaluate_comparison(work) -> ComparisonRow:
    spec, beta, phi2 = work
    try:
        protocol = ProtocolSpec.build(
            beta=beta, rabi_angles={2: phi2}, n_max=spec.n_max, sub_samples=1,
            frame=spec.frame, omega_rabi=spec.omega_rabi,
            drive_ratio=spec.drive_ratio, escape_level=2)
        exact = run_piecewise(protocol, store_states="none")
        schedule = derive_schedule(beta, {2: phi2},
                                   omega_rabi=spec.omega_rabi,
                                   drive_ratio=spec.drive_ratio)
        params = LindbladParams.from_angle(
            phi2, schedule.tau, level=2,
            drive_amplitude=schedule.drive_amplitude)
        rho0 = DensityOperator.from_ket(fock_state(0, protocol.space))
        coarse = propagate_lindblad(rho0, params,
                                    schedule.intervals * schedule.tau,
                                    samples=8, store_states="none")
        return ComparisonRow(
            beta=beta, phi2=phi2,
            entropy_piecewise=float(exact.linear_entropy[-1]),
            entropy_lindblad=float(coarse.linear_entropy[-1]),
            escape_piecewise=float(exact.escape_population[-1]),
            escape_lindblad=float(coarse.escape_population[-1]))
    except (TruncationError, InvariantError, ValueError) as exc:
        return ComparisonRow(beta=beta, phi2=phi2, entropy_piecewise=nan,
                             entropy_lindblad=nan, escape_piecewise=nan,
                             escape_lindblad=nan,
                             error=f"{type(exc).__name__}: {exc}")


def _map_work(worker, work_items, jobs: int) -> list:
    if jobs <= 1 or len(work_items) <= 1:
        return [worker(item) for item in work_items]
    chunk = max(1, len(work_items) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, work_items, chunksize=chunk))


def _run_sweep(spec: SweepSpec, kind: str, jobs: int) -> SweepResult:
    convention = _resolve_pair(spec, kind)
    resolved = dataclasses.replace(spec, pair_convention=convention)
    work = [(resolved, convention, beta, phi2, phi1, engine)
            for beta, phi2, phi1 in resolved.grid_points()
            for engine in resolved.engines]
    rows = tuple(_map_work(_evaluate_point, work, jobs))
    return SweepResult(kind=kind, spec=resolved, rows=rows)


def sweep_single_pulse(spec: SweepSpec, *, jobs: int = 1) -> SweepResult:
    """Sweep (beta, phi2) with the z=2 pulse alone.

    Each grid point runs the protocol from |0> for S_L and P_Zbar and the
    pair witness under the resolved convention (default: ground pair).
    Failed points are annotated, not fatal.
    """
    if spec.phi1_grid != (0.0,):
        raise ValueError("single-pulse sweep requires phi1_grid == (0,); "
                         "use sweep_two_pulse for nonzero phi1")
    return _run_sweep(spec, "single_pulse", jobs)


def sweep_two_pulse(spec: SweepSpec, *, jobs: int = 1) -> SweepResult:
    """Sweep (beta, phi2, phi1) with pulses on z=2 and z=1.

    Returns the full grid plus, per (beta, phi2), the turning point: the
    phi1 at which S_L is maximal (ties resolve to the smallest phi1;
    failed points are skipped).
    """
    if spec.engine != "piecewise":
        raise ValueError("the master-equation engine models a single pulse; "
                         "two-pulse sweeps require engine='piecewise'")
    result = _run_sweep(spec, "two_pulse", jobs)
    turning = []
    for beta in result.spec.beta_grid:
        for phi2 in result.spec.phi2_grid:
            candidates = [row for row in result.rows
                          if row.beta == beta and row.phi2 == phi2
                          and not row.error]
            if not candidates:
                continue
            best = max(candidates, key=lambda row: row.entropy)
            turning.append(TurningPoint(beta=beta, phi2=phi2,
                                        phi1_opt=best.phi1,
                                        entropy_max=best.entropy))
    return dataclasses.replace(result, turning_points=tuple(turning))


def compare_engines(spec: SweepSpec, *, jobs: int = 1) -> EngineComparison:
    """Run both engines from |0> on a single-pulse grid and difference them.

    The summary correlation is the Pearson coefficient between |delta S_L|
    and phi2 * beta over the non-failed rows (agreement degrades as either
    grows); it is nan when the grid has no spread.
    """
    if spec.phi1_grid != (0.0,):
        raise ValueError("engine comparison is defined for single-pulse "
                         "grids (phi1_grid == (0,))")
    spec = dataclasses.replace(spec, engine="both")
    work = [(spec, beta, phi2) for beta in spec.beta_grid
            for phi2 in spec.phi2_grid]
    rows = tuple(_map_work(_evaluate_comparison, work, jobs))
    good = [(row.phi2 * row.beta, abs(row.delta_entropy))
            for row in rows if not row.error]
    correlation = nan
    if len(good) >= 2:
        x, y = np.array(good).T
        if np.ptp(x) > 0 and np.ptp(y) > 0:
            correlation = float(np.corrcoef(x, y)[0, 1])
    return EngineComparison(spec=spec, rows=rows, correlation=correlation)


def addressability_margin(omega_rabi: float, level: int,
                          pulse_window: float) -> float:
    """Frequency-selectivity margin of a pulse window of length pulse_window.

    The carrier of the level-z pulse must resolve the splitting between
    adjacent dressed doublets, omega_rabi * |sqrt(z+1) - sqrt(z)|; the
    margin is that splitting times the window. Margins well above 1 mean
    the pulse addresses only its own level.
    """
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    return pulse_window * omega_rabi * abs(sqrt(level + 1) - sqrt(level))


def _header_lines(result) -> list:
    spec = result.spec
    pair = spec.pair_convention
    if isinstance(pair, BlochAngles):
        pair = f"theta={pair.theta!r},phi={pair.phi!r}"
    return [
        f"# {CSV_FORMAT}",
        f"# kind={result.kind} engine={spec.engine} frame={spec.frame} "
        f"pair={pair} n_max={spec.n_max} sub_samples={spec.sub_samples} "
        f"drive_ratio={_fmt(spec.drive_ratio)} omega_rabi={_fmt(spec.omega_rabi)}",
    ]


def write_results(result, path) -> None:
    """Write a sweep or comparison result as a versioned CSV.

    Fixed column order, 12 significant digits, '\\n' line endings; failed
    points leave their numeric fields empty and carry the error text.
    Identical results produce byte-identical files.
    """
    columns = (_COMPARISON_COLUMNS if isinstance(result, EngineComparison)
               else _ROW_COLUMNS)
    buffer = io.StringIO()
    for line in _header_lines(result):
        buffer.write(line + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in result.rows:
        writer.writerow(row.csv_fields())
    with open(path, "w", newline="") as handle:
        handle.write(buffer.getvalue())


def read_results(path) -> tuple:
    """Parse a sweep CSV back into rows (wall_time is not persisted)."""
    with open(path, newline="") as handle:
        lines = [line for line in handle if not line.startswith("#")]
    reader = csv.DictReader(lines)
    rows = []
    for record in reader:
        if "engine" in record:
            rows.append(SweepRow(
                beta=_parse(record["beta"]), phi2=_parse(record["phi2"]),
                phi1=_parse(record["phi1"]), entropy=_parse(record["S_L"]),
                escape=_parse(record["P_escape"]), blp=_parse(record["N_BLP"]),
                engine=record["engine"], error=record["error"]))
        else:
            rows.append(ComparisonRow(
                beta=_parse(record["beta"]), phi2=_parse(record["phi2"]),
                entropy_piecewise=_parse(record["S_L_piecewise"]),
                entropy_lindblad=_parse(record["S_L_lindblad"]),
                escape_piecewise=_parse(record["P_escape_piecewise"]),
                escape_lindblad=_parse(record["P_escape_lindblad"]),
                error=record["error"]))
    return tuple(rows)


def write_manifest(result, path, config: dict = None) -> None:
    """Record the fully resolved spec and run shape as deterministic JSON.

    config, when given, is echoed verbatim under a "config" key (the CLI
    passes its resolved run configuration through here).
    """
    spec = result.spec
    pair = spec.pair_convention
    if isinstance(pair, BlochAngles):
        pair = {"theta": pair.theta, "phi": pair.phi}
    manifest = {
        "format": MANIFEST_FORMAT,
        "package": f"zenosim {__version__}",
        "kind": result.kind,
        "csv_format": CSV_FORMAT,
        "rows": len(result.rows),
        "errors": result.error_count,
        "sweep": {
            "beta_grid": list(spec.beta_grid),
            "phi2_grid": list(spec.phi2_grid),
            "phi1_grid": list(spec.phi1_grid),
            "pair_convention": pair,
            "engine": spec.engine,
            "output_path": spec.output_path,
            "n_max": spec.n_max,
            "sub_samples": spec.sub_samples,
            "frame": spec.frame,
            "drive_ratio": spec.drive_ratio,
            "omega_rabi": spec.omega_rabi,
        },
    }
    if isinstance(result, SweepResult) and result.kind == "two_pulse":
        manifest["turning_points"] = [dataclasses.asdict(point)
                                      for point in result.turning_points]
    if config is not None:
        manifest["config"] = config
    with open(path, "w", newline="") as handle:
        handle.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


_PLOT_TEMPLATE = '''\
#!/usr/bin/env python3
"""Render heat-map and scatter views of a sweep CSV.

Usage: python3 <this script> [CSV_PATH]
Writes <CSV_PATH stem>_heatmap.png and <CSV_PATH stem>_scatter.png.
"""
import csv
import math
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

path = sys.argv[1] if len(sys.argv) > 1 else {csv_name!r}
with open(path, newline="") as handle:
    rows = [r for r in csv.DictReader(line for line in handle
                                      if not line.startswith("#"))
            if not r["error"]]
engine = rows[0]["engine"] if rows else "piecewise"
rows = [r for r in rows if r["engine"] == engine]
betas = sorted({{float(r["beta"]) for r in rows}})
phi2s = sorted({{float(r["phi2"]) for r in rows}})
phi1s = sorted({{float(r["phi1"]) for r in rows}})
stem = path.rsplit(".", 1)[0]

fields = ("P_escape", "S_L", "N_BLP")
fig, axes = plt.subplots(1, 3, figsize=(13, 3.6), constrained_layout=True)
for ax, field in zip(axes, fields):
    grid = np.full((len(betas), len(phi2s)), np.nan)
    for r in rows:
        if float(r["phi1"]) != phi1s[0]:
            continue
        i = betas.index(float(r["beta"]))
        j = phi2s.index(float(r["phi2"]))
        grid[i, j] = float(r[field])
    mesh = ax.pcolormesh(np.array(phi2s) / math.pi, betas, grid,
                         shading="nearest")
    ax.set_xlabel("phi2 / pi")
    ax.set_ylabel("beta")
    ax.set_yscale("log")
    ax.set_title(field + " (" + engine + ")")
    fig.colorbar(mesh, ax=ax)
fig.savefig(stem + "_heatmap.png", dpi=150)

fig, ax = plt.subplots(figsize=(5.2, 4.2), constrained_layout=True)
points = ax.scatter([float(r["S_L"]) for r in rows],
                    [float(r["N_BLP"]) for r in rows],
                    c=[float(r["phi1"]) / math.pi for r in rows],
                    s=14, cmap="viridis")
ax.set_xlabel("S_L")
ax.set_ylabel("N_BLP")
ax.set_title("attainable (S_L, N_BLP), color = phi1 / pi")
fig.colorbar(points, ax=ax)
fig.savefig(stem + "_scatter.png", dpi=150)
print("wrote", stem + "_heatmap.png", "and", stem + "_scatter.png")
'''


def emit_plot_script(result, path, csv_name: str = None) -> None:
    """Write a standalone matplotlib script that renders the result's CSV.

    The script defaults to reading csv_name (or the spec's output_path)
    and takes an explicit CSV path as its only argument; identical inputs
    produce byte-identical script text.
    """
    if isinstance(result, EngineComparison):
        raise ValueError("plot scripts render sweep results; comparison "
                         "tables have no heat-map/scatter view")
    if csv_name is None:
        csv_name = result.spec.output_path or "sweep.csv"
    script = _PLOT_TEMPLATE.format(csv_name=str(csv_name))
    with open(path, "w", newline="") as handle:
        handle.write(script)
