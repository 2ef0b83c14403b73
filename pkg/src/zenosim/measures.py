"""Dissipation and non-Markovianity observables.

The memory witness is the accumulated trace-distance growth over a pair of
trajectories evolved under the identical protocol (the positive-increment
sum over the sampled distance series). Pairs are oscillator states; the
default conventions follow the two protocol families: a single addressed
level pairs the ground state with the addressed level, the two-pulse
protocol pairs an equal superposition of the protected levels with the
addressed level.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import IntervalChannels, ProtocolSpec, _guard_state
from .lindblad import LindbladParams, lindblad_samples
from .statespace import (
    DensityOperator, InvariantError, Ket, OSCILLATOR, SpaceConfig,
    fock_state, trace_distance_matrices, trace_norm,
)

__all__ = [
    "BlochAngles", "StatePair", "bloch_state", "standard_pair",
    "pair_from_angles", "rotation_axis", "optimal_pair_phase",
    "escape_population", "blp_from_distance_series", "DistanceSeries",
    "distance_series", "blp_measure", "lindblad_distance_series",
    "lindblad_blp", "lower_envelope", "BlochScanResult", "bloch_scan",
]

PAIR_CONVENTIONS = ("ground", "plus")


@dataclass(frozen=True)
class BlochAngles:
    """Polar/azimuthal coordinates on the protected two-level sphere."""

    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi + 1e-12:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if not 0.0 <= self.phi < 2.0 * np.pi + 1e-12:
            raise ValueError(f"phi must lie in [0, 2*pi), got {self.phi}")


@dataclass(frozen=True)
class StatePair:
    """Two oscillator states evolved side by side for the memory witness."""

    first: Ket
    second: Ket

    def __post_init__(self):
        if self.first.space != OSCILLATOR or self.second.space != OSCILLATOR:
            raise InvariantError("pair members must be oscillator states")
        if self.first.dim != self.second.dim:
            raise InvariantError("pair members must share one truncation")


def bloch_state(angles: BlochAngles, space: SpaceConfig) -> Ket:
    """cos(theta/2)|0> + sin(theta/2) e^{i phi} |1> embedded in the truncation."""
    amps = np.zeros(space.fock_dim, dtype=complex)
    amps[0] = np.cos(0.5 * angles.theta)
    amps[1] = np.sin(0.5 * angles.theta) * np.exp(1j * angles.phi)
    return Ket(amps, OSCILLATOR)


def standard_pair(convention: str, space: SpaceConfig, level: int) -> StatePair:
    """Named pair conventions against the addressed level.

    "ground": (|0>, |level>) - the single-pulse sweep convention.
    "plus":   ((|0>+|1>)/sqrt(2), |level>) - the two-pulse convention.
    """
    if convention == "ground":
        first = bloch_state(BlochAngles(0.0, 0.0), space)
    elif convention == "plus":
        first = bloch_state(BlochAngles(0.5 * np.pi, 0.0), space)
    else:
        raise ValueError(f"unknown pair convention {convention!r}; "
                         f"expected one of {PAIR_CONVENTIONS}")
    return StatePair(first, fock_state(level, space))


def pair_from_angles(angles: BlochAngles, space: SpaceConfig, level: int) -> StatePair:
    """Pair an arbitrary protected-sphere state with the addressed level."""
    return StatePair(bloch_state(angles, space), fock_state(level, space))


def rotation_axis(drive_amplitude: complex) -> np.ndarray:
    """Bloch-sphere axis of the drive-induced rotation in the protected pair."""
    mag = abs(drive_amplitude)
    if mag == 0:
        raise ValueError("rotation axis undefined for zero drive")
    return np.array([drive_amplitude.real / mag, drive_amplitude.imag / mag, 0.0])


def optimal_pair_phase(drive_amplitude: complex) -> float:
    """Azimuth of the most-sensitive pair: a quarter turn off the drive axis."""
    mag = abs(drive_amplitude)
    if mag == 0:
        raise ValueError("pair phase undefined for zero drive")
    return float(np.mod(np.angle(drive_amplitude) + 0.5 * np.pi, 2.0 * np.pi))


def escape_population(rho: DensityOperator, level: int) -> float:
    """Population outside the protected subspace: sum of P(n) for n >= level."""
    if not 0 <= level < rho.dim:
        raise ValueError(f"level {level} outside 0..{rho.dim - 1}")
    return float(rho.matrix.diagonal().real[level:].sum())


def blp_from_distance_series(distances: np.ndarray) -> float:
    """Sum of positive increments of a sampled trace-distance series."""
    d = np.asarray(distances, dtype=float)
    if d.ndim != 1 or d.shape[0] < 1:
        raise ValueError("distance series must be a non-empty 1-d array")
    if d.shape[0] == 1:
        return 0.0
    steps = np.diff(d)
    return float(steps[steps > 0].sum())


@dataclass(frozen=True)
class DistanceSeries:
    """Sampled trace distance between two co-evolved states."""

    times: np.ndarray
    distances: np.ndarray
    boundary_indices: np.ndarray

    def __post_init__(self):
        if self.times.shape != self.distances.shape:
            raise InvariantError("times and distances must align")

    @property
    def blp(self) -> float:
        return blp_from_distance_series(self.distances)


def distance_series(pair: StatePair, spec: ProtocolSpec) -> DistanceSeries:
    """Trace distance at every shared sample time of the piecewise protocol.

    Both members evolve under the identical schedule. The interval channel
    is linear, so the interior samples are computed by propagating the
    difference operator (one channel application per sample); the two
    states themselves are carried across interval ends so the usual trace
    and truncation guards run on real states. Equivalence with the
    two-trajectory route is covered by the tests.
    """
    if pair.first.dim != spec.space.fock_dim:
        raise InvariantError("pair truncation does not match the protocol space")
    channels = IntervalChannels(spec)
    rho1 = DensityOperator.from_ket(pair.first).matrix.copy()
    rho2 = DensityOperator.from_ket(pair.second).matrix.copy()
    delta = rho1 - rho2

    times = [0.0]
    distances = [0.5 * trace_norm(delta)]
    boundaries = [0]
    index = 0
    warned = False
    for interval in range(spec.intervals):
        start = interval * spec.tau
        for k in range(1, spec.sub_samples):
            sigma = channels.sub_stack(k).apply(delta)
            index += 1
            times.append(start + channels.sample_offsets[k - 1])
            distances.append(0.5 * trace_norm(sigma))
        rho1 = channels.end.apply(rho1)
        rho1 = 0.5 * (rho1 + rho1.conj().T)
        rho2 = channels.end.apply(rho2)
        rho2 = 0.5 * (rho2 + rho2.conj().T)
        warned = _guard_state(rho1, interval + 1, warned)
        warned = _guard_state(rho2, interval + 1, warned)
        delta = rho1 - rho2
        index += 1
        times.append(start + spec.tau)
        distances.append(0.5 * trace_norm(delta))
        boundaries.append(index)
    return DistanceSeries(times=np.asarray(times),
                          distances=np.asarray(distances),
                          boundary_indices=np.asarray(boundaries, dtype=int))


def blp_measure(pair: StatePair, spec: ProtocolSpec) -> float:
    """Memory witness of one protocol: positive distance growth of the pair."""
    return distance_series(pair, spec).blp


def lindblad_distance_series(pair: StatePair, params: LindbladParams,
                             total_time: float, *, dt: float | None = None,
                             samples: int | None = None) -> DistanceSeries:
    """Distance series under the coarse-grained generator (same pair API)."""
    rho1 = DensityOperator.from_ket(pair.first).matrix
    rho2 = DensityOperator.from_ket(pair.second).matrix
    run1 = lindblad_samples(rho1, params, total_time, dt=dt, samples=samples)
    run2 = lindblad_samples(rho2, params, total_time, dt=dt, samples=samples)
    times, distances = [], []
    for (t1, m1), (t2, m2) in zip(run1, run2):
        if abs(t1 - t2) > 1e-12:
            raise InvariantError("schedule mismatch between the two propagations")
        times.append(t1)
        distances.append(trace_distance_matrices(m1, m2))
    times = np.asarray(times)
    return DistanceSeries(times=times, distances=np.asarray(distances),
                          boundary_indices=np.array([0, len(times) - 1], dtype=int))


def lindblad_blp(pair: StatePair, params: LindbladParams, total_time: float, *,
                 dt: float | None = None, samples: int | None = None) -> float:
    return lindblad_distance_series(pair, params, total_time,
                                    dt=dt, samples=samples).blp


def lower_envelope(series: DistanceSeries) -> np.ndarray:
    """Per-interval minima of the distance series (the slow envelope).

    The fast pulse oscillation returns to its top at every boundary, so
    the interval minimum tracks the slow component underneath it.
    """
    b = series.boundary_indices
    if b.shape[0] < 2:
        raise ValueError("need at least one complete interval")
    return np.array([series.distances[b[i]:b[i + 1] + 1].min()
                     for i in range(b.shape[0] - 1)])


@dataclass(frozen=True)
class BlochScanResult:
    """Memory witness over a grid of protected-sphere initial states."""

    theta_grid: np.ndarray
    phi_grid: np.ndarray
    values: np.ndarray

    def argmax(self) -> BlochAngles:
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return BlochAngles(float(self.theta_grid[i]), float(self.phi_grid[j]))

    def argmin(self) -> BlochAngles:
        i, j = np.unravel_index(int(np.argmin(self.values)), self.values.shape)
        return BlochAngles(float(self.theta_grid[i]), float(self.phi_grid[j]))


def bloch_scan(spec: ProtocolSpec, theta_grid, phi_grid, *,
               level: int | None = None,
               progress=None) -> BlochScanResult:
    """Evaluate the memory witness for every grid state against |level>."""
    theta_grid = np.asarray(theta_grid, dtype=float)
    phi_grid = np.asarray(phi_grid, dtype=float)
    if level is None:
        level = spec.escape_level
    values = np.empty((theta_grid.shape[0], phi_grid.shape[0]))
    for i, theta in enumerate(theta_grid):
        for j, phi in enumerate(phi_grid):
            pair = pair_from_angles(BlochAngles(float(theta), float(phi)),
                                    spec.space, level)
            values[i, j] = blp_measure(pair, spec)
            if progress is not None:
                progress(i, j, values[i, j])
    return BlochScanResult(theta_grid=theta_grid, phi_grid=phi_grid, values=values)
