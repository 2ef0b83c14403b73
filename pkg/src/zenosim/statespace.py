"""Truncated Hilbert-space substrate: states, embeddings, propagators, metrics.

The simulator works on two spaces: a Fock-truncated harmonic oscillator
(levels 0..n_max) and the bipartite product of that oscillator with a
three-level meter. The meter levels are, in order, the idle level |h> and
the resonant pair |g>, |e>. Bipartite basis ordering is meter-major:

    index = meter_index * (n_max + 1) + fock_index

so the bipartite matrix of M_meter (x) M_osc is ``np.kron(M_meter, M_osc)``.

States are carried by light immutable wrappers (`Ket`, `DensityOperator`)
that enforce normalization/hermiticity at construction; operators are plain
complex ndarrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "HERMITICITY_TOL", "TRACE_TOL", "EIGENVALUE_TOL", "KET_NORM_TOL",
    "UNITARITY_TOL", "OSCILLATOR", "BIPARTITE", "METER", "METER_LEVELS",
    "InvariantError", "SpaceConfig", "Ket", "DensityOperator",
    "fock_state", "meter_state", "embed_with_meter", "partial_trace_meter",
    "HermitianPropagator", "unitary_from_hamiltonian", "apply_kraus",
    "trace_norm", "trace_distance", "trace_distance_matrices", "linear_entropy",
]

# Tolerances for invariant enforcement; violations raise InvariantError.
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_TOL = 1e-10
UNITARITY_TOL = 1e-10
KET_NORM_TOL = 1e-12

# Entries below this magnitude are treated as numerically absent when
# deflating rows/columns ahead of the trace-distance eigensolve. The induced
# error is bounded by sqrt(dim) * dim * DEFLATION_TOL, i.e. ~1e-11 here.
DEFLATION_TOL = 1e-14

# Space tags.
OSCILLATOR = "oscillator"
BIPARTITE = "bipartite"
METER = "meter"

METER_LEVELS = ("h", "g", "e")
METER_INDEX = {name: i for i, name in enumerate(METER_LEVELS)}


class InvariantError(ValueError):
    """A physics invariant (normalization, hermiticity, ...) is violated."""


def _as_complex_readonly(arr, name: str) -> np.ndarray:
    # order="C": np.array keeps Fortran order by default and the float view
    # below needs a contiguous last axis.
    out = np.array(arr, dtype=complex, copy=True, order="C")
    if not np.all(np.isfinite(out.view(float))):
        raise InvariantError(f"{name} contains non-finite entries")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SpaceConfig:
    """Dimensions and index conventions for one simulation.

    Parameters
    ----------
    n_max : int
        Highest retained Fock level; oscillator dimension is n_max + 1.
        Must leave headroom above every addressed level (callers check).
    """

    n_max: int = 80
    meter_levels: int = 3

    def __post_init__(self):
        if self.n_max < 3:
            raise ValueError(f"n_max must be >= 3, got {self.n_max}")
        if self.meter_levels != 3:
            raise ValueError("the meter is a fixed three-level system")

    @property
    def fock_dim(self) -> int:
        return self.n_max + 1

    @property
    def bipartite_dim(self) -> int:
        return self.meter_levels * self.fock_dim

    def dim(self, space: str) -> int:
        if space == OSCILLATOR:
            return self.fock_dim
        if space == BIPARTITE:
            return self.bipartite_dim
        if space == METER:
            return self.meter_levels
        raise ValueError(f"unknown space tag {space!r}")

    def bipartite_index(self, meter: int | str, n: int) -> int:
        """Flat bipartite index of |meter, n> under meter-major ordering."""
        m = METER_INDEX[meter] if isinstance(meter, str) else meter
        if not 0 <= m < self.meter_levels:
            raise ValueError(f"meter index {m} out of range")
        if not 0 <= n <= self.n_max:
            raise ValueError(f"Fock index {n} outside truncation 0..{self.n_max}")
        return m * self.fock_dim + n

    def split_index(self, index: int) -> tuple[int, int]:
        """Inverse of bipartite_index: flat index -> (meter, fock)."""
        if not 0 <= index < self.bipartite_dim:
            raise ValueError(f"bipartite index {index} out of range")
        return divmod(index, self.fock_dim)


@dataclass(frozen=True)
class Ket:
    """Normalized state vector tagged with the space it lives in."""

    amplitudes: np.ndarray
    space: str

    def __post_init__(self):
        amps = _as_complex_readonly(self.amplitudes, "ket")
        if amps.ndim != 1:
            raise InvariantError("ket amplitudes must be one-dimensional")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > KET_NORM_TOL:
            raise InvariantError(f"ket norm deviates from 1 by {abs(norm - 1.0):.3e}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes, space: str) -> "Ket":
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise InvariantError("cannot normalize the zero vector")
        return cls(amps / norm, space)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def overlap(self, other: "Ket") -> complex:
        self._check_same_space(other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def _check_same_space(self, other: "Ket"):
        if self.space != other.space or self.dim != other.dim:
            raise InvariantError(
                f"space mismatch: {self.space}[{self.dim}] vs {other.space}[{other.dim}]")


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian unit-trace operator tagged with its space.

    Construction always verifies hermiticity and trace. The eigenvalue
    check (all >= -EIGENVALUE_TOL) costs a full eigensolve, so it is run
    by the public `from_matrix` constructor and available on demand via
    `validate_positive`; completely positive evolution preserves it.
    """

    matrix: np.ndarray
    space: str

    def __post_init__(self):
        mat = _as_complex_readonly(self.matrix, "density operator")
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvariantError("density operator must be a square matrix")
        herm = np.max(np.abs(mat - mat.conj().T))
        if herm > HERMITICITY_TOL:
            raise InvariantError(f"density operator non-Hermitian by {herm:.3e}")
        tr = mat.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvariantError(f"density operator trace deviates from 1 by {abs(tr - 1.0):.3e}")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_ket(cls, ket: Ket) -> "DensityOperator":
        return cls(np.outer(ket.amplitudes, ket.amplitudes.conj()), ket.space)

    @classmethod
    def from_matrix(cls, matrix, space: str) -> "DensityOperator":
        """Fully validated constructor (includes the eigenvalue check)."""
        rho = cls(matrix, space)
        rho.validate_positive()
        return rho

    def validate_positive(self):
        lo = float(np.linalg.eigvalsh(self.matrix)[0])
        if lo < -EIGENVALUE_TOL:
            raise InvariantError(f"density operator has eigenvalue {lo:.3e} < -{EIGENVALUE_TOL}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def populations(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()

    def _check_same_space(self, other: "DensityOperator"):
        if self.space != other.space or self.dim != other.dim:
            raise InvariantError(
                f"space mismatch: {self.space}[{self.dim}] vs {other.space}[{other.dim}]")


def fock_state(n: int, space: SpaceConfig) -> Ket:
    """Oscillator number state |n> within the truncation."""
    if not 0 <= n <= space.n_max:
        raise ValueError(f"Fock level {n} outside truncation 0..{space.n_max}")
    amps = np.zeros(space.fock_dim, dtype=complex)
    amps[n] = 1.0
    return Ket(amps, OSCILLATOR)


def meter_state(level: int | str) -> Ket:
    """Meter basis state |h>, |g> or |e> (by name or index)."""
    m = METER_INDEX[level] if isinstance(level, str) else int(level)
    if not 0 <= m < 3:
        raise ValueError(f"meter level {level!r} unknown")
    amps = np.zeros(3, dtype=complex)
    amps[m] = 1.0
    return Ket(amps, METER)


def embed_with_meter(rho: DensityOperator, meter: Ket) -> DensityOperator:
    """Product state rho_osc (x) |meter><meter| on the bipartite space."""
    if rho.space != OSCILLATOR:
        raise InvariantError(f"expected an oscillator state, got {rho.space}")
    if meter.space != METER or meter.dim != 3:
        raise InvariantError("meter argument must be a three-level meter ket")
    proj = np.outer(meter.amplitudes, meter.amplitudes.conj())
    return DensityOperator(np.kron(proj, rho.matrix), BIPARTITE)


def partial_trace_meter(rho: DensityOperator) -> DensityOperator:
    """Trace out the meter: sum of the three meter-diagonal blocks."""
    if rho.space != BIPARTITE:
        raise InvariantError(f"expected a bipartite state, got {rho.space}")
    if rho.dim % 3 != 0:
        raise InvariantError(f"bipartite dimension {rho.dim} not divisible by 3")
    n = rho.dim // 3
    blocks = rho.matrix.reshape(3, n, 3, n)
    return DensityOperator(np.einsum("inim->nm", blocks), OSCILLATOR)


class HermitianPropagator:
    """exp(-i H t) via one eigendecomposition, reused for every t.

    This is the workhorse of the piecewise engine: a single Hermitian
    eigendecomposition per parameter point serves all interval lengths and
    sub-sample times.
    """

    def __init__(self, hamiltonian: np.ndarray):
        h = np.asarray(hamiltonian, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise InvariantError("Hamiltonian must be a square matrix")
        herm = np.max(np.abs(h - h.conj().T))
        if herm > HERMITICITY_TOL:
            raise InvariantError(f"Hamiltonian non-Hermitian by {herm:.3e}")
        self.dim = h.shape[0]
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(h)

    def unitary(self, t: float) -> np.ndarray:
        """Full propagator exp(-i H t)."""
        phases = np.exp(-1j * self.eigenvalues * t)
        return (self.eigenvectors * phases) @ self.eigenvectors.conj().T

    def column_block(self, t: float, columns: slice) -> np.ndarray:
        """Selected columns of exp(-i H t), cheaper than the full matrix."""
        vh = self.eigenvectors[columns.start:columns.stop].conj().T
        phases = np.exp(-1j * self.eigenvalues * t)
        return self.eigenvectors @ (phases[:, None] * vh)


def unitary_from_hamiltonian(hamiltonian: np.ndarray, t: float) -> np.ndarray:
    """One-shot exp(-i H t); use HermitianPropagator when reusing across t."""
    return HermitianPropagator(hamiltonian).unitary(t)


def apply_kraus(operators: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    """Apply sum_j K_j rho K_j^dagger to a raw density matrix."""
    stack = np.asarray(operators)
    k, n, _ = stack.shape
    tmp = (stack.reshape(k * n, n) @ rho).reshape(k, n, n)
    return np.einsum("jab,jcb->ac", tmp, stack.conj(), optimize=True)


def _deflated(diff: np.ndarray) -> np.ndarray:
    """Drop rows/columns of a Hermitian matrix that are numerically zero."""
    keep = np.abs(diff).max(axis=0) > DEFLATION_TOL
    if keep.all():
        return diff
    if not keep.any():
        return np.zeros((0, 0), dtype=diff.dtype)
    idx = np.flatnonzero(keep)
    return diff[np.ix_(idx, idx)]


def trace_norm(hermitian: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    mat = _deflated(hermitian)
    if mat.shape[0] == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvalsh(mat)).sum())


def trace_distance(rho1: DensityOperator, rho2: DensityOperator) -> float:
    """Trace distance (1/2) * sum |eigenvalues of rho1 - rho2|."""
    rho1._check_same_space(rho2)
    return trace_distance_matrices(rho1.matrix, rho2.matrix)


def trace_distance_matrices(m1: np.ndarray, m2: np.ndarray) -> float:
    """Trace distance on raw Hermitian matrices (hot-path variant)."""
    return 0.5 * trace_norm(m1 - m2)


def linear_entropy(rho: DensityOperator | np.ndarray) -> float:
    """Linear entropy 1 - Tr(rho^2); 0 for pure states."""
    mat = rho.matrix if isinstance(rho, DensityOperator) else rho
    # For Hermitian rho, Tr(rho^2) equals the squared Frobenius norm.
    purity = float(np.vdot(mat, mat).real)
    return 1.0 - purity
