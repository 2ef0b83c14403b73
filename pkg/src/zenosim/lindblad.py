"""Coarse-grained master equation matching the measurement protocol.

For a single addressed level z the repeated-measurement dynamics averages,
to leading order in the drive, into

    d rho / dt = -i [H_drive, rho]
                 + kappa * transfer * D[|z-1><z|] rho
                 + kappa * dephasing * D[|z><z|] rho

with kappa = 1/tau and rate coefficients that are closed functions of the
pulse angle phi (rates_from_angle). The exchange coupling itself does not
appear in the commutator: its effect is entirely inside the rates. A
fixed-step classical RK4 integrator keeps step-size reproducibility.

The module also carries the first-order conditional operators of a single
interval (first_order_kraus); for zero drive in the resonant frame these
reproduce the exact interval channel of `dynamics`.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from typing import Iterator, Mapping, NamedTuple

import numpy as np

from .model import annihilation_operator
from .statespace import (
    DensityOperator, HermitianPropagator, InvariantError, OSCILLATOR,
    SpaceConfig, apply_kraus, linear_entropy,
)
from .dynamics import DEFAULT_SUB_SAMPLES, Trajectory

__all__ = [
    "RATE_CONSISTENCY_TOL", "LINDBLAD_TRACE_TOL", "LINDBLAD_EIGENVALUE_TOL",
    "RateCoefficients", "rates_from_angle", "LindbladParams",
    "first_order_kraus", "drive_unitary", "kraus_step", "lindblad_rhs",
    "lindblad_samples", "propagate_lindblad",
]

RATE_CONSISTENCY_TOL = 1e-12
LINDBLAD_TRACE_TOL = 1e-8
LINDBLAD_EIGENVALUE_TOL = 1e-8

# Stability guards for the fixed-step integrator.
MAX_STEP_FRACTION = 0.1    # dt <= tau / 10
MAX_RATE_STEP = 0.1        # dt * kappa * max(rate) <= 0.1
DEFAULT_STEP_FRACTION = 1.0 / 50.0


class RateCoefficients(NamedTuple):
    """Dimensionless rate coefficients of one pulse angle.

    transfer drives population z -> z-1; dephasing damps coherences of
    level z; dephasing_partial is the single-interval dephasing amplitude
    whose square, plus transfer, gives the total dephasing coefficient.
    """

    transfer: float
    dephasing_partial: float
    dephasing: float


def rates_from_angle(phi: float) -> RateCoefficients:
    """Closed-form rate coefficients for a pulse of angle phi."""
    transfer = 0.5 * np.sin(0.5 * phi) ** 2
    partial = 2.0 * np.sin(0.25 * phi) ** 2
    return RateCoefficients(float(transfer), float(partial),
                            float(partial * partial + transfer))


@dataclass(frozen=True)
class LindbladParams:
    """Rates and scales of the coarse-grained generator.

    kappa is the measurement rate 1/tau; the rate coefficients must obey
    the consistency identity dephasing = dephasing_partial**2 + transfer.
    """

    kappa: float
    transfer: float
    dephasing_partial: float
    dephasing: float
    level: int
    drive_amplitude: complex = 0j

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        for name in ("transfer", "dephasing_partial", "dephasing"):
            if getattr(self, name) < 0:
                raise ValueError(f"rate {name} must be >= 0")
        gap = abs(self.dephasing - (self.dephasing_partial ** 2 + self.transfer))
        if gap > RATE_CONSISTENCY_TOL:
            raise ValueError(
                f"rates inconsistent: dephasing must equal dephasing_partial**2 "
                f"+ transfer (off by {gap:.3e})")
        if self.level < 1:
            raise ValueError(f"level must be >= 1, got {self.level}")

    @classmethod
    def from_angle(cls, phi: float, tau: float, level: int,
                   drive_amplitude: complex = 0j) -> "LindbladParams":
        if tau <= 0:
            raise ValueError(f"tau must be > 0, got {tau}")
        rates = rates_from_angle(phi)
        return cls(kappa=1.0 / tau, transfer=rates.transfer,
                   dephasing_partial=rates.dephasing_partial,
                   dephasing=rates.dephasing, level=level,
                   drive_amplitude=drive_amplitude)

    @property
    def tau(self) -> float:
        return 1.0 / self.kappa


def first_order_kraus(phi: float, level: int, space: SpaceConfig) -> dict[str, np.ndarray]:
    """Leading-order conditional operators of one measurement interval.

    Keys follow the meter outcome: "h" keeps the oscillator with amplitude
    cos(phi/2) on the addressed level, "g" projects it there, "e" lowers it
    by one quantum; each carries weight sin(phi/2)/sqrt(2). The three
    operators are complete (sum w^dag w = 1) as an algebraic identity.
    """
    if not 1 <= level <= space.n_max - 1:
        raise ValueError(f"level must satisfy 1 <= level <= n_max - 1, got {level}")
    n = space.fock_dim
    cos_half, sin_half = np.cos(0.5 * phi), np.sin(0.5 * phi)
    w_h = np.eye(n, dtype=complex)
    w_h[level, level] = cos_half
    w_g = np.zeros((n, n), dtype=complex)
    w_g[level, level] = sin_half / np.sqrt(2.0)
    w_e = np.zeros((n, n), dtype=complex)
    w_e[level - 1, level] = sin_half / np.sqrt(2.0)
    return {"h": w_h, "g": w_g, "e": w_e}


def drive_unitary(drive_amplitude: complex, tau: float, dim: int) -> np.ndarray:
    """Oscillator-space displacement propagator for one interval."""
    a = annihilation_operator(dim)
    h = drive_amplitude * a.conj().T + np.conj(drive_amplitude) * a
    return HermitianPropagator(h).unitary(tau)


def kraus_step(rho: DensityOperator, ops: Mapping[str, np.ndarray],
               u_drive: np.ndarray) -> DensityOperator:
    """One leading-order interval: displace, then measure.

    rho' = sum_j w_j U rho U^dag w_j^dag for the three outcome operators.
    """
    if rho.space != OSCILLATOR:
        raise InvariantError(f"expected an oscillator state, got {rho.space}")
    combined = [ops[key] @ u_drive for key in ("h", "g", "e")]
    return DensityOperator(apply_kraus(combined, rho.matrix), OSCILLATOR)


def _drive_matrix(drive_amplitude: complex, dim: int) -> np.ndarray:
    a = annihilation_operator(dim)
    return drive_amplitude * a.conj().T + np.conj(drive_amplitude) * a


def lindblad_rhs(rho: np.ndarray, params: LindbladParams,
                 h_drive: np.ndarray | None = None) -> np.ndarray:
    """Generator right-hand side on a raw Hermitian matrix (reference form).

    The integrator uses an algebraically identical structured evaluation;
    this dense form is the contract (and the cross-check in the tests).
    """
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    if h_drive is None:
        h_drive = _drive_matrix(params.drive_amplitude, dim)
    z = params.level
    lower = np.zeros((dim, dim), dtype=complex)
    lower[z - 1, z] = 1.0
    proj = np.zeros((dim, dim), dtype=complex)
    proj[z, z] = 1.0
    out = -1j * (h_drive @ rho - rho @ h_drive)
    for rate, op in ((params.transfer, lower), (params.dephasing, proj)):
        anti = op.conj().T @ op
        out += params.kappa * rate * (op @ rho @ op.conj().T
                                      - 0.5 * (anti @ rho + rho @ anti))
    return out


def _structured_rhs_factory(params: LindbladParams, dim: int):
    """O(dim^2) right-hand side: banded drive commutator, rank-1 dissipators."""
    z = params.level
    if z >= dim:
        raise ValueError(f"level {z} outside dimension {dim}")
    alpha = params.drive_amplitude
    k_t = params.kappa * params.transfer
    k_d = params.kappa * params.dephasing
    sq = np.sqrt(np.arange(1, dim))
    col = sq[:, None]
    row = sq[None, :]
    a_conj = np.conj(alpha)

    def rhs(rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho)
        if alpha != 0:
            # -i [H, rho] with H = alpha a^dag + conj(alpha) a (tridiagonal).
            out[1:] = alpha * col * rho[:-1]
            out[:-1] += a_conj * col * rho[1:]
            out[:, :-1] -= alpha * row * rho[:, 1:]
            out[:, 1:] -= a_conj * row * rho[:, :-1]
            out *= -1j
        rzz = rho[z, z]
        half = 0.5 * (k_t + k_d)
        # Anticommutator -(1/2){|z><z|, rho}: row z and column z each damped;
        # the (z, z) element correctly receives both contributions.
        out[z, :] -= half * rho[z, :]
        out[:, z] -= half * rho[:, z]
        out[z - 1, z - 1] += k_t * rzz
        out[z, z] += k_d * rzz
        return out

    return rhs


def lindblad_samples(initial: np.ndarray, params: LindbladParams,
                     total_time: float, *, dt: float | None = None,
                     samples: int | None = None,
                     state_guards: bool = True) -> Iterator[tuple[float, np.ndarray]]:
    """RK4-propagate and yield (t, matrix) at evenly spaced sample times.

    The step grid subdivides each sample segment, so sample times are hit
    exactly. With state_guards the trajectory is checked for trace drift
    (<= LINDBLAD_TRACE_TOL) every step and positivity (eigenvalues >=
    -LINDBLAD_EIGENVALUE_TOL) at sample times; guards are switched off when
    propagating non-state operators such as differences.
    """
    tau = params.tau
    if dt is None:
        dt = DEFAULT_STEP_FRACTION * tau
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if dt > MAX_STEP_FRACTION * tau + 1e-15:
        raise ValueError(f"dt = {dt:.3e} exceeds tau/10 = {MAX_STEP_FRACTION * tau:.3e}")
    max_rate = max(params.transfer, params.dephasing)
    if dt * params.kappa * max_rate > MAX_RATE_STEP + 1e-15:
        raise ValueError(
            f"dt * kappa * max(rate) = {dt * params.kappa * max_rate:.3e} exceeds "
            f"{MAX_RATE_STEP}; reduce dt")
    if total_time <= 0:
        raise ValueError(f"total_time must be > 0, got {total_time}")
    if samples is None:
        samples = max(1, round(total_time / tau * DEFAULT_SUB_SAMPLES))

    rho = np.array(initial, dtype=complex)
    base_trace = rho.trace().real
    rhs = _structured_rhs_factory(params, rho.shape[0])
    yield 0.0, rho.copy()
    segment = total_time / samples
    steps_per_segment = max(1, ceil(segment / dt - 1e-12))
    h = segment / steps_per_segment
    h2 = 0.5 * h
    for j in range(1, samples + 1):
        for _ in range(steps_per_segment):
            k1 = rhs(rho)
            k2 = rhs(rho + h2 * k1)
            k3 = rhs(rho + h2 * k2)
            k4 = rhs(rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            rho = 0.5 * (rho + rho.conj().T)
            if state_guards:
                drift = abs(rho.trace().real - base_trace)
                if drift > LINDBLAD_TRACE_TOL:
                    raise InvariantError(f"trace drifted by {drift:.3e} during integration")
        if state_guards:
            lo = float(np.linalg.eigvalsh(rho)[0])
            if lo < -LINDBLAD_EIGENVALUE_TOL:
                raise InvariantError(
                    f"state lost positivity (eigenvalue {lo:.3e}) at t = {j * segment:.6g}")
        yield j * segment, rho.copy()


def propagate_lindblad(rho0: DensityOperator, params: LindbladParams,
                       total_time: float, dt: float | None = None, *,
                       samples: int | None = None,
                       store_states: str = "boundary") -> Trajectory:
    """Integrate the master equation and collect the usual trajectory data.

    Sample times are an even grid over [0, total_time]. There are no
    measurement boundaries here, so boundary_indices marks the endpoints
    only; store_states "boundary" keeps just those two states.
    """
    if store_states not in ("boundary", "all", "none"):
        raise ValueError(f"unknown store_states policy {store_states!r}")
    if rho0.space != OSCILLATOR:
        raise InvariantError(f"expected an oscillator state, got {rho0.space}")
    keep_cols = min(params.level + 2, rho0.dim)
    times, entropies, escapes, pops = [], [], [], []
    states, state_indices = [], []
    sample_iter = lindblad_samples(rho0.matrix, params, total_time,
                                   dt=dt, samples=samples)
    last = None
    for i, (t, mat) in enumerate(sample_iter):
        times.append(t)
        entropies.append(linear_entropy(mat))
        diag = mat.diagonal().real
        escapes.append(float(diag[params.level:].sum()))
        pops.append(diag[:keep_cols].copy())
        if store_states == "all":
            states.append(DensityOperator(mat, OSCILLATOR))
            state_indices.append(i)
        last = (i, mat)
    boundary = np.array([0, last[0]], dtype=int)
    if store_states == "boundary":
        first = DensityOperator(rho0.matrix, OSCILLATOR)
        states = [first, DensityOperator(last[1], OSCILLATOR)]
        state_indices = [0, last[0]]
    elif store_states == "none":
        states = [DensityOperator(last[1], OSCILLATOR)]
        state_indices = [last[0]]
    return Trajectory(times=np.asarray(times),
                      linear_entropy=np.asarray(entropies),
                      escape_population=np.asarray(escapes),
                      populations=np.asarray(pops),
                      boundary_indices=boundary,
                      states=tuple(states),
                      state_indices=np.asarray(state_indices, dtype=int),
                      escape_level=params.level)
