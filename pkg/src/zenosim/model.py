"""Hamiltonian builders for the driven oscillator + three-level meter.

All operators are returned as dense complex ndarrays on the bipartite
space (meter-major ordering, see `statespace`). Interaction picture
throughout: the exchange coupling between the meter pair |g>,|e> and the
oscillator is static, the classical drive is a static displacement
generator, and each selective pulse couples |h,z> to the upper dressed
state |+,z> only.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .statespace import (
    BIPARTITE, InvariantError, Ket, METER_INDEX, SpaceConfig,
)

__all__ = [
    "MAX_DRIVE_RATIO", "WEAK_DRIVE_RATIO", "FRAME_MODES",
    "ZenoPulse", "ModelParams", "annihilation_operator",
    "jaynes_cummings_hamiltonian", "drive_hamiltonian",
    "zeno_pulse_hamiltonian", "frame_compensation", "total_hamiltonian",
    "dressed_state",
]

# Perturbative-drive guards: the displacement treatment assumes the drive is
# far weaker than the exchange coupling.
MAX_DRIVE_RATIO = 0.05
WEAK_DRIVE_RATIO = 0.01

FRAME_MODES = ("resonant", "literal", "dressed")


@dataclass(frozen=True)
class ZenoPulse:
    """One selective pulse: addressed Fock level and angular strength."""

    level: int
    strength: float

    def __post_init__(self):
        if self.level < 1:
            raise ValueError(f"pulse level must be >= 1, got {self.level}")
        if self.strength < 0:
            raise ValueError(f"pulse strength must be >= 0, got {self.strength}")


@dataclass(frozen=True)
class ModelParams:
    """Static model parameters, immutable after construction.

    Parameters
    ----------
    omega_rabi : float
        Vacuum exchange coupling strength between the meter pair and the
        oscillator.
    drive_amplitude : complex
        Classical drive amplitude alpha; |alpha| / omega_rabi must stay
        below MAX_DRIVE_RATIO (warned above WEAK_DRIVE_RATIO).
    zeno_pulses : tuple[ZenoPulse, ...]
        Selective pulses, one per addressed level; levels must be distinct.
    frame : str
        "resonant" adds a diagonal compensation making each pulse resonant
        (its per-interval phase is undone at the interval end); "literal"
        uses the pulse Hamiltonian as written; "dressed" works in the
        interaction picture of the exchange coupling, where each pulse
        carrier is resonant with its dressed pair and the exchange
        energies are absorbed into the frame, so both pulse and drive act
        on resonance and the interval map depends only on the displacement
        per interval and the Rabi angles.
    oscillator_frequency, meter_splitting : float or None
        Laboratory-frame scales; recorded for reference only, the dynamics
        is computed in the interaction picture. When both are given the
        oscillator frequency must be far below the meter splitting.
    """

    omega_rabi: float = 1.0
    drive_amplitude: complex = 0j
    zeno_pulses: tuple[ZenoPulse, ...] = ()
    frame: str = "resonant"
    oscillator_frequency: float | None = None
    meter_splitting: float | None = None

    def __post_init__(self):
        if self.omega_rabi <= 0:
            raise ValueError(f"omega_rabi must be > 0, got {self.omega_rabi}")
        ratio = abs(self.drive_amplitude) / self.omega_rabi
        if ratio > MAX_DRIVE_RATIO:
            raise ValueError(
                f"drive ratio |alpha|/omega_rabi = {ratio:.4f} exceeds {MAX_DRIVE_RATIO}; "
                "the weak-drive regime is a model assumption")
        if ratio > WEAK_DRIVE_RATIO:
            warnings.warn(
                f"drive ratio |alpha|/omega_rabi = {ratio:.4f} > {WEAK_DRIVE_RATIO}: "
                "outside the comfortably perturbative regime", stacklevel=2)
        pulses = tuple(self.zeno_pulses)
        levels = [p.level for p in pulses]
        if len(set(levels)) != len(levels):
            raise ValueError(f"pulse levels must be distinct, got {levels}")
        object.__setattr__(self, "zeno_pulses", pulses)
        if self.frame not in FRAME_MODES:
            raise ValueError(f"frame must be one of {FRAME_MODES}, got {self.frame!r}")
        if self.oscillator_frequency is not None and self.meter_splitting is not None:
            if self.oscillator_frequency >= self.meter_splitting:
                raise ValueError("oscillator frequency must lie far below the meter splitting")
            if self.oscillator_frequency > 0.1 * self.meter_splitting:
                warnings.warn("oscillator frequency is not small against the meter splitting",
                              stacklevel=2)

    def check_space(self, space: SpaceConfig):
        """Require headroom: every addressed level below n_max."""
        for pulse in self.zeno_pulses:
            if pulse.level > space.n_max - 1:
                raise ValueError(
                    f"pulse level {pulse.level} needs n_max >= {pulse.level + 1}, "
                    f"got n_max = {space.n_max}")


def annihilation_operator(dim: int) -> np.ndarray:
    """Truncated oscillator annihilation operator a|n> = sqrt(n)|n-1>."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def _meter_op(row: str, col: str) -> np.ndarray:
    op = np.zeros((3, 3), dtype=complex)
    op[METER_INDEX[row], METER_INDEX[col]] = 1.0
    return op


def jaynes_cummings_hamiltonian(params: ModelParams, space: SpaceConfig) -> np.ndarray:
    """Resonant exchange (omega_rabi/2) (|g><e| a^dag + |e><g| a).

    The idle meter level |h> is untouched, so the whole h-sector (and the
    joint ground state |g,0>) is annihilated.
    """
    a = annihilation_operator(space.fock_dim)
    half = 0.5 * params.omega_rabi
    return half * (np.kron(_meter_op("g", "e"), a.conj().T) +
                   np.kron(_meter_op("e", "g"), a))


def drive_hamiltonian(params: ModelParams, space: SpaceConfig) -> np.ndarray:
    """Classical drive alpha a^dag + conj(alpha) a, identity on the meter."""
    a = annihilation_operator(space.fock_dim)
    osc = params.drive_amplitude * a.conj().T + np.conj(params.drive_amplitude) * a
    return np.kron(np.eye(3, dtype=complex), osc)


def dressed_state(sign: int, n: int, space: SpaceConfig) -> Ket:
    """Exchange eigenstate (|e, n-1> +/- |g, n>)/sqrt(2) with energy +/- omega_rabi sqrt(n)/2."""
    if sign not in (+1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if not 1 <= n <= space.n_max:
        raise ValueError(f"dressed states exist for 1 <= n <= n_max, got {n}")
    amps = np.zeros(space.bipartite_dim, dtype=complex)
    amps[space.bipartite_index("e", n - 1)] = 1.0 / np.sqrt(2.0)
    amps[space.bipartite_index("g", n)] = sign / np.sqrt(2.0)
    return Ket(amps, BIPARTITE)


def zeno_pulse_hamiltonian(level: int, strength: float, space: SpaceConfig) -> np.ndarray:
    """Selective pulse (strength/2)(|h,z><+,z| + h.c.) for one addressed level.

    In the bare basis the only nonzero elements are
    <h,z|H|g,z> = <h,z|H|e,z-1> = strength / (2 sqrt(2)).
    Levels other than z are untouched (selectivity).
    """
    if not 1 <= level <= space.n_max - 1:
        raise ValueError(
            f"pulse level must satisfy 1 <= level <= n_max - 1, got {level} "
            f"with n_max = {space.n_max}")
    dim = space.bipartite_dim
    h = np.zeros((dim, dim), dtype=complex)
    hz = space.bipartite_index("h", level)
    coeff = strength / (2.0 * np.sqrt(2.0))
    for target in (space.bipartite_index("g", level), space.bipartite_index("e", level - 1)):
        h[hz, target] = coeff
        h[target, hz] = coeff
    return h


def frame_compensation(params: ModelParams, space: SpaceConfig) -> np.ndarray:
    """Diagonal term sum_i (omega_rabi sqrt(z_i)/2) |h,z_i><h,z_i|.

    Added in the resonant frame so each pulse drives the |h,z> <-> |+,z>
    pair on resonance; the accumulated phase exp(-i C tau) is undone at
    every interval end by the piecewise engine.
    """
    dim = space.bipartite_dim
    comp = np.zeros((dim, dim), dtype=complex)
    for pulse in params.zeno_pulses:
        idx = space.bipartite_index("h", pulse.level)
        comp[idx, idx] = 0.5 * params.omega_rabi * np.sqrt(pulse.level)
    return comp


def total_hamiltonian(params: ModelParams, space: SpaceConfig) -> np.ndarray:
    """Drive + exchange + all pulses (+ compensation in the resonant frame).

    In the dressed frame the exchange term is absorbed into the frame
    itself (each pulse carrier tracks its dressed pair), leaving drive and
    pulse couplings acting on resonance with no diagonal remainder.
    """
    params.check_space(space)
    h = drive_hamiltonian(params, space)
    if params.frame != "dressed":
        h += jaynes_cummings_hamiltonian(params, space)
    for pulse in params.zeno_pulses:
        h += zeno_pulse_hamiltonian(pulse.level, pulse.strength, space)
    if params.frame == "resonant":
        h += frame_compensation(params, space)
    return h
