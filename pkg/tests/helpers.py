"""Shared test utilities, including an independent dense oracle.

The oracle builds the bipartite Hamiltonian with explicit loops, evolves
with an eigendecomposition, applies the frame phase correction and traces
the meter out by summing diagonal blocks. It shares no code with the
package internals on purpose: agreement between the two routes is what
several tests assert.
"""
from __future__ import annotations

import numpy as np


def random_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / rho.trace()


def random_ket(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def oracle_hamiltonian(n_max: int, pulse_angles: dict, tau: float,
                       alpha: complex = 0j, omega: float = 1.0,
                       resonant: bool = True) -> np.ndarray:
    """Loop-built bipartite Hamiltonian (meter-major, h=0, g=1, e=2)."""
    n = n_max + 1
    dim = 3 * n

    def idx(m, k):
        return m * n + k

    h = np.zeros((dim, dim), dtype=complex)
    for k in range(1, n):
        h[idx(2, k - 1), idx(1, k)] += 0.5 * omega * np.sqrt(k)
        h[idx(1, k), idx(2, k - 1)] += 0.5 * omega * np.sqrt(k)
    for m in range(3):
        for k in range(1, n):
            h[idx(m, k), idx(m, k - 1)] += alpha * np.sqrt(k)
            h[idx(m, k - 1), idx(m, k)] += np.conj(alpha) * np.sqrt(k)
    for z, phi in pulse_angles.items():
        coeff = (phi / tau) / (2.0 * np.sqrt(2.0))
        for target in (idx(1, z), idx(2, z - 1)):
            h[idx(0, z), target] += coeff
            h[target, idx(0, z)] += coeff
        if resonant:
            h[idx(0, z), idx(0, z)] += 0.5 * omega * np.sqrt(z)
    return h


def oracle_interval_channel(n_max: int, pulse_angles: dict, tau: float,
                            alpha: complex = 0j, omega: float = 1.0,
                            resonant: bool = True):
    """Exact single-interval map rho -> trace_meter[U (rho(x)|h><h|) U^dag].

    Returns a function of the oscillator density matrix; the resonant
    frame undoes the compensation phase right before the trace-out.
    Intermediate evolution by t < tau is available via the second return
    value (no phase correction, matching interior snapshots).
    """
    n = n_max + 1
    dim = 3 * n
    h = oracle_hamiltonian(n_max, pulse_angles, tau, alpha, omega, resonant)
    w, v = np.linalg.eigh(h)

    def propagate(t):
        return (v * np.exp(-1j * w * t)) @ v.conj().T

    u_full = propagate(tau)
    if resonant:
        corr = np.eye(dim, dtype=complex)
        for z in pulse_angles:
            i = 0 * n + z
            corr[i, i] = np.exp(1j * 0.5 * omega * np.sqrt(z) * tau)
        u_full = corr @ u_full

    def trace_meter(big):
        red = np.zeros((n, n), dtype=complex)
        for m in range(3):
            red += big[m * n:(m + 1) * n, m * n:(m + 1) * n]
        return red

    def embed(rho):
        big = np.zeros((dim, dim), dtype=complex)
        big[0:n, 0:n] = rho
        return big

    def channel(rho):
        big = u_full @ embed(rho) @ u_full.conj().T
        return trace_meter(big)

    def partial(rho, t):
        u = propagate(t)
        big = u @ embed(rho) @ u.conj().T
        return trace_meter(big)

    return channel, partial
