"""Exact piecewise evolution under repeated indirect meter measurements.

One protocol interval embeds the oscillator state with the meter reset to
|h>, evolves the closed bipartite system for a time tau under the static
total Hamiltonian, and traces the meter out (a destructive, unread
measurement). The engine never materializes the bipartite density matrix:
the interval map is applied through the exact conditional step operators

    K_j = <j| U(tau) |h>,   j in {h, g, e},

which are oscillator-space blocks of the bipartite propagator. One
Hermitian eigendecomposition per parameter point serves every interval and
every sub-sample time.

In the resonant frame the total Hamiltonian carries a diagonal
compensation on the addressed |h,z> levels (see `model.frame_compensation`)
whose accumulated phase exp(-i C tau) is undone right before each
trace-out; only K_h is affected.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterator, Mapping, NamedTuple

import numpy as np

from .model import ModelParams, ZenoPulse, frame_compensation, total_hamiltonian
from .statespace import (
    BIPARTITE, OSCILLATOR, DensityOperator, HermitianPropagator,
    InvariantError, Ket, SpaceConfig, UNITARITY_TOL, linear_entropy,
)

__all__ = [
    "DEFAULT_SUB_SAMPLES", "DEFAULT_DRIVE_RATIO", "DEFAULT_TOTAL_DISPLACEMENT",
    "TOP_POPULATION_WARN", "TOP_POPULATION_ERROR", "COMPLETENESS_TOL",
    "TruncationError", "Schedule", "derive_schedule", "ProtocolSpec",
    "Trajectory", "ConditionalOps", "conditional_step_operators",
    "IntervalChannels", "interval_step_operators", "piecewise_samples",
    "run_piecewise", "rabi_closed_form",
]

DEFAULT_SUB_SAMPLES = 20
DEFAULT_DRIVE_RATIO = 0.005
DEFAULT_TOTAL_DISPLACEMENT = 2.0 * np.pi

COMPLETENESS_TOL = 1e-10
TRACE_DRIFT_TOL = 1e-10

# Fock-truncation guards, evaluated on post-measurement states.
TOP_POPULATION_WARN = 1e-6
TOP_POPULATION_ERROR = 1e-3


class TruncationError(RuntimeError):
    """Population reached the top of the Fock truncation."""


def rabi_closed_form(phi: float) -> tuple[float, float]:
    """Amplitudes (on |h,z> and the upper dressed state) after one pulse.

    For the undriven resonant-frame pulse of angle phi the surviving and
    transferred amplitudes are cos(phi/2) and sin(phi/2); populations are
    their squares.
    """
    return float(np.cos(0.5 * phi)), float(np.sin(0.5 * phi))


@dataclass(frozen=True)
class Schedule:
    """Resolved protocol timing: interval, drive, pulse strengths."""

    beta: float
    intervals: int
    tau: float
    drive_amplitude: complex
    pulses: tuple[ZenoPulse, ...]

    @property
    def total_time(self) -> float:
        return self.intervals * self.tau

    @property
    def rabi_angles(self) -> dict[int, float]:
        return {p.level: p.strength * self.tau for p in self.pulses}


def derive_schedule(beta: float,
                    rabi_angles: Mapping[int, float],
                    intervals: int | None = None,
                    *,
                    omega_rabi: float = 1.0,
                    drive_ratio: float = DEFAULT_DRIVE_RATIO,
                    total_displacement: float = DEFAULT_TOTAL_DISPLACEMENT) -> Schedule:
    """Turn (beta, per-level Rabi angles) into interval timing and strengths.

    The drive is fixed to alpha = i * drive_ratio * omega_rabi, so the
    per-interval displacement -i * alpha * tau = beta is real and positive.
    Pulse strengths follow from their angles via omega_z = phi / tau.

    When `intervals` is omitted it is chosen as the nearest integer to
    total_displacement / beta and beta is re-adjusted so that
    beta * intervals = total_displacement holds exactly.
    """
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if drive_ratio <= 0:
        raise ValueError(f"drive_ratio must be > 0, got {drive_ratio}")
    if intervals is None:
        intervals = int(round(total_displacement / beta))
        if intervals < 1:
            raise ValueError(
                f"beta = {beta} exceeds the total displacement {total_displacement}")
        beta = total_displacement / intervals
    elif intervals < 1:
        raise ValueError(f"intervals must be >= 1, got {intervals}")
    alpha = 1j * drive_ratio * omega_rabi
    tau = beta / abs(alpha)
    pulses = tuple(ZenoPulse(level, angle / tau)
                   for level, angle in sorted(rabi_angles.items()))
    return Schedule(beta=beta, intervals=int(intervals), tau=tau,
                    drive_amplitude=alpha, pulses=pulses)


def _as_oscillator_density(state, space: SpaceConfig) -> DensityOperator:
    if isinstance(state, Ket):
        state = DensityOperator.from_ket(state)
    if not isinstance(state, DensityOperator):
        raise TypeError("initial_state must be a Ket or DensityOperator")
    if state.space != OSCILLATOR or state.dim != space.fock_dim:
        raise InvariantError(
            f"initial state must live on the oscillator space of dimension "
            f"{space.fock_dim}, got {state.space}[{state.dim}]")
    return state


@dataclass(frozen=True)
class ProtocolSpec:
    """Everything one piecewise run needs; immutable after construction.

    `escape_level` is the boundary of the protected subspace used for
    escape accounting: population at Fock levels >= escape_level counts as
    escaped. It defaults to the highest addressed level (or 2 when no
    pulse is configured).
    """

    model: ModelParams
    space: SpaceConfig
    tau: float
    intervals: int
    sub_samples: int = DEFAULT_SUB_SAMPLES
    initial_state: DensityOperator = None  # type: ignore[assignment]
    escape_level: int = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if self.intervals < 1:
            raise ValueError(f"intervals must be >= 1, got {self.intervals}")
        if self.sub_samples < 1:
            raise ValueError(f"sub_samples must be >= 1, got {self.sub_samples}")
        self.model.check_space(self.space)
        initial = self.initial_state
        if initial is None:
            amps = np.zeros(self.space.fock_dim, dtype=complex)
            amps[0] = 1.0
            initial = DensityOperator.from_ket(Ket(amps, OSCILLATOR))
        object.__setattr__(self, "initial_state",
                           _as_oscillator_density(initial, self.space))
        if self.escape_level is None:
            levels = [p.level for p in self.model.zeno_pulses]
            object.__setattr__(self, "escape_level", max(levels) if levels else 2)
        if not 1 <= self.escape_level <= self.space.n_max - 1:
            raise ValueError(f"escape_level {self.escape_level} outside 1..n_max-1")

    @classmethod
    def build(cls, *,
              beta: float,
              rabi_angles: Mapping[int, float],
              intervals: int | None = None,
              n_max: int = 80,
              sub_samples: int = DEFAULT_SUB_SAMPLES,
              initial_state=None,
              frame: str = "resonant",
              omega_rabi: float = 1.0,
              drive_ratio: float = DEFAULT_DRIVE_RATIO,
              total_displacement: float = DEFAULT_TOTAL_DISPLACEMENT,
              escape_level: int | None = None) -> "ProtocolSpec":
        """Canonical driven protocol from (beta, Rabi angles)."""
        schedule = derive_schedule(beta, rabi_angles, intervals,
                                   omega_rabi=omega_rabi, drive_ratio=drive_ratio,
                                   total_displacement=total_displacement)
        params = ModelParams(omega_rabi=omega_rabi,
                             drive_amplitude=schedule.drive_amplitude,
                             zeno_pulses=schedule.pulses, frame=frame)
        return cls(model=params, space=SpaceConfig(n_max=n_max), tau=schedule.tau,
                   intervals=schedule.intervals, sub_samples=sub_samples,
                   initial_state=initial_state, escape_level=escape_level)

    @classmethod
    def from_tau(cls, *,
                 tau: float,
                 rabi_angles: Mapping[int, float],
                 intervals: int = 1,
                 n_max: int = 80,
                 sub_samples: int = DEFAULT_SUB_SAMPLES,
                 initial_state=None,
                 frame: str = "resonant",
                 omega_rabi: float = 1.0,
                 drive_amplitude: complex = 0j,
                 escape_level: int | None = None) -> "ProtocolSpec":
        """Explicit-interval protocol; the natural route for undriven setups."""
        pulses = tuple(ZenoPulse(level, angle / tau)
                       for level, angle in sorted(rabi_angles.items()))
        params = ModelParams(omega_rabi=omega_rabi, drive_amplitude=drive_amplitude,
                             zeno_pulses=pulses, frame=frame)
        return cls(model=params, space=SpaceConfig(n_max=n_max), tau=tau,
                   intervals=intervals, sub_samples=sub_samples,
                   initial_state=initial_state, escape_level=escape_level)

    @property
    def beta(self) -> float:
        """Per-interval displacement magnitude |alpha| * tau."""
        return abs(self.model.drive_amplitude) * self.tau

    @property
    def total_time(self) -> float:
        return self.intervals * self.tau

    @property
    def rabi_angles(self) -> dict[int, float]:
        return {p.level: p.strength * self.tau for p in self.model.zeno_pulses}


class ConditionalOps(NamedTuple):
    """Oscillator-space conditional operators, one per meter outcome."""

    h: np.ndarray
    g: np.ndarray
    e: np.ndarray


def _check_completeness(ops, dim: int, context: str):
    total = sum(k.conj().T @ k for k in ops)
    dev = float(np.max(np.abs(total - np.eye(dim))))
    if dev > COMPLETENESS_TOL:
        raise InvariantError(
            f"conditional operators violate completeness by {dev:.3e} ({context}); "
            "this usually signals a basis-ordering bug")


def conditional_step_operators(unitary: np.ndarray, space: SpaceConfig) -> ConditionalOps:
    """Split a bipartite propagator into K_j = <j|U|h>, j in {h, g, e}.

    The three operators act on the oscillator space and satisfy
    sum_j K_j^dag K_j = 1 exactly (checked within COMPLETENESS_TOL).
    """
    u = np.asarray(unitary, dtype=complex)
    dim = space.bipartite_dim
    if u.shape != (dim, dim):
        raise InvariantError(f"expected a {dim}x{dim} bipartite matrix, got {u.shape}")
    unit_dev = float(np.max(np.abs(u.conj().T @ u - np.eye(dim))))
    if unit_dev > UNITARITY_TOL:
        raise InvariantError(f"matrix deviates from unitarity by {unit_dev:.3e}")
    n = space.fock_dim
    ops = ConditionalOps(*(u[j * n:(j + 1) * n, 0:n].copy() for j in range(3)))
    _check_completeness(ops, n, "conditional_step_operators")
    return ops


class _KrausStack:
    """One interval channel: precomputed flat factors for fast application."""

    __slots__ = ("stack", "_flat", "_dagger_flat", "_dim")

    def __init__(self, stack: np.ndarray):
        k, n, _ = stack.shape
        self.stack = stack
        self._dim = n
        self._flat = np.ascontiguousarray(stack.reshape(k * n, n))
        self._dagger_flat = np.ascontiguousarray(
            stack.conj().transpose(0, 2, 1).reshape(k * n, n))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        n = self._dim
        tmp = self._flat @ rho
        left = tmp.reshape(-1, n, n).transpose(1, 0, 2).reshape(n, -1)
        return left @ self._dagger_flat


class IntervalChannels:
    """Conditional-operator stacks for one protocol's interval, all sub-times.

    `sub_stack(k)` (k = 1..sub_samples) applies the channel for evolution
    time k*tau/sub_samples from the interval start, without the frame
    phase correction; `end` applies the full interval map including the
    resonant-frame correction (identity in the other frames). Built from
    a single eigendecomposition of the total Hamiltonian.
    """

    def __init__(self, spec: ProtocolSpec):
        self.spec = spec
        space = spec.space
        n = space.fock_dim
        propagator = HermitianPropagator(total_hamiltonian(spec.model, space))
        self.sample_offsets = spec.tau * np.arange(1, spec.sub_samples + 1) / spec.sub_samples

        self._sub = []
        for t in self.sample_offsets:
            cols = propagator.column_block(t, slice(0, n))
            stack = cols.reshape(3, n, n)
            _check_completeness(stack, n, f"interval channel at offset {t:.6g}")
            self._sub.append(_KrausStack(stack))

        end_stack = self._sub[-1].stack.copy()
        if spec.model.frame == "resonant":
            comp = frame_compensation(spec.model, space)
            phase = np.exp(1j * comp.diagonal()[:n].real * spec.tau)
            end_stack[0] = phase[:, None] * end_stack[0]
        self.end = _KrausStack(end_stack)

    def sub_stack(self, k: int) -> _KrausStack:
        return self._sub[k - 1]

    def end_operators(self) -> ConditionalOps:
        return ConditionalOps(*(m.copy() for m in self.end.stack))


def interval_step_operators(spec: ProtocolSpec) -> ConditionalOps:
    """Corrected end-of-interval conditional operators for one protocol."""
    return IntervalChannels(spec).end_operators()


class PiecewiseSample(NamedTuple):
    time: float
    rho: np.ndarray
    is_boundary: bool


def piecewise_samples(spec: ProtocolSpec) -> Iterator[PiecewiseSample]:
    """Yield reduced oscillator states at every sample time.

    Per interval: sub_samples - 1 interior snapshots (partial traces of the
    partially evolved bipartite state) followed by the post-measurement
    state at the interval end, which seeds the next interval. The initial
    state is yielded first at t = 0. Arrays are freshly allocated; callers
    may keep them.
    """
    channels = IntervalChannels(spec)
    yield PiecewiseSample(0.0, spec.initial_state.matrix.copy(), True)
    rho = spec.initial_state.matrix
    warned = False
    for interval in range(spec.intervals):
        start = interval * spec.tau
        for k in range(1, spec.sub_samples):
            sigma = channels.sub_stack(k).apply(rho)
            yield PiecewiseSample(start + channels.sample_offsets[k - 1], sigma, False)
        rho = channels.end.apply(rho)
        rho = 0.5 * (rho + rho.conj().T)
        warned = _guard_state(rho, interval + 1, warned)
        yield PiecewiseSample(start + spec.tau, rho.copy(), True)


def _guard_state(rho: np.ndarray, interval: int, warned: bool) -> bool:
    """Trace and truncation guards on a post-measurement state."""
    drift = abs(rho.trace().real - 1.0)
    if drift > TRACE_DRIFT_TOL:
        raise InvariantError(
            f"trace drifted by {drift:.3e} after interval {interval}")
    diag = rho.diagonal().real
    if diag[-1] > TOP_POPULATION_ERROR:
        raise TruncationError(
            f"population {diag[-1]:.3e} in the top Fock level after interval "
            f"{interval}; raise n_max")
    if not warned and diag[-2:].sum() > TOP_POPULATION_WARN:
        warnings.warn(
            f"population {diag[-2:].sum():.3e} in the top two Fock levels after "
            f"interval {interval}; results may feel the truncation", stacklevel=3)
        return True
    return warned


@dataclass(frozen=True)
class Trajectory:
    """Sampled reduced-state history of one run.

    Scalar series cover every sample; full states are kept according to
    the engine's store policy (always including the final state, whose
    index is state_indices[-1]).
    """

    times: np.ndarray
    linear_entropy: np.ndarray
    escape_population: np.ndarray
    populations: np.ndarray
    boundary_indices: np.ndarray
    states: tuple[DensityOperator, ...]
    state_indices: np.ndarray
    escape_level: int

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise InvariantError("sample times must be strictly increasing")
        n = self.times.shape[0]
        for name in ("linear_entropy", "escape_population"):
            if getattr(self, name).shape[0] != n:
                raise InvariantError(f"{name} length does not match times")
        if self.populations.shape[0] != n:
            raise InvariantError("populations length does not match times")
        if len(self.states) != self.state_indices.shape[0]:
            raise InvariantError("states and state_indices disagree")

    @property
    def final_state(self) -> DensityOperator:
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])


def run_piecewise(spec: ProtocolSpec, store_states: str = "boundary") -> Trajectory:
    """Run the protocol and collect scalar series plus selected states.

    store_states: "boundary" keeps the post-measurement states (default),
    "all" keeps every sample (memory-heavy at fine sub-sampling), "none"
    keeps only the final state.
    """
    if store_states not in ("boundary", "all", "none"):
        raise ValueError(f"unknown store_states policy {store_states!r}")
    keep_cols = spec.escape_level + 2
    times, entropies, escapes, pops = [], [], [], []
    boundaries, states, state_indices = [], [], []
    last = None
    for i, sample in enumerate(piecewise_samples(spec)):
        times.append(sample.time)
        entropies.append(linear_entropy(sample.rho))
        diag = sample.rho.diagonal().real
        escapes.append(float(diag[spec.escape_level:].sum()))
        pops.append(diag[:keep_cols].copy())
        if sample.is_boundary:
            boundaries.append(i)
        if store_states == "all" or (store_states == "boundary" and sample.is_boundary):
            states.append(DensityOperator(sample.rho, OSCILLATOR))
            state_indices.append(i)
        last = sample
    if not state_indices or state_indices[-1] != len(times) - 1:
        states.append(DensityOperator(last.rho, OSCILLATOR))
        state_indices.append(len(times) - 1)
    return Trajectory(times=np.asarray(times),
                      linear_entropy=np.asarray(entropies),
                      escape_population=np.asarray(escapes),
                      populations=np.asarray(pops),
                      boundary_indices=np.asarray(boundaries, dtype=int),
                      states=tuple(states),
                      state_indices=np.asarray(state_indices, dtype=int),
                      escape_level=spec.escape_level)
