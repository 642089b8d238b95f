"""Zero-energy (dark) eigenstate, its asymptote, and spectral diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hamiltonian import build_hamiltonian, rabi_omega1, rabi_omegaN
from .model import (
    Basis,
    SystemParams,
    enumerate_coherent_basis,
    initial_state,
    target_state,
)


class DegeneracyError(ValueError):
    """H(t) has a null space of dimension other than one."""

    def __init__(self, t: float, dimension: int):
        super().__init__(f"null space of H(t={t:g}) has dimension {dimension}, expected 1")
        self.t = t
        self.dimension = dimension


@dataclass(frozen=True)
class DarkState:
    amplitudes: np.ndarray
    x_ratio: float
    g_ratio: float
    time: float


@dataclass(frozen=True)
class GhzTarget:
    amplitudes: np.ndarray
    basis: Basis

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


def _ratios(t: float, params: SystemParams) -> tuple[float, float]:
    oN = float(rabi_omegaN(t, params))
    if oN <= 0:
        raise ZeroDivisionError(f"Omega_N({t:g}) = 0: X and G are undefined")
    return float(rabi_omega1(t, params)) / oN, params.g / oN


def analytic_dark_state(t: float, params: SystemParams) -> DarkState:
    """Closed-form dark state of the three-atom chain.

    Support is on the ordinals with no excited atom and no fiber photon:
    ``G`` on the initial state, ``-X e^{i phi1} (1, -1, 1, -1)`` on the four
    cavity-photon states and ``-e^{i(phi1 + phiN)} G X`` on the final product
    state, all divided by ``sqrt(4 X^2 + G^2 (X^2 + 1))``.  The ``e^{i phi1}``
    on the intermediate amplitudes is what makes H(t) annihilate the vector for
    a nonzero laser phase on atom 1; it is 1 in the usual gauge ``phi1 = 0``.
    """
    if params.n_atoms != 3:
        raise ValueError("the closed form covers N = 3 only; use numeric_dark_state")
    x, G = _ratios(t, params)
    d = np.sqrt(4 * x**2 + G**2 * (x**2 + 1))
    amp = np.zeros(11, dtype=complex)
    amp[0] = G
    amp[[2, 4, 6, 8]] = -x * np.exp(1j * params.phi1) * np.array([1, -1, 1, -1])
    amp[10] = -np.exp(1j * (params.phi1 + params.phiN)) * G * x
    return DarkState(amp / d, x, G, t)


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    c0 = vec[0]
    if abs(c0) > 0:
        vec = vec * (abs(c0) / c0)
    return vec


def numeric_dark_state(
    t: float,
    params: SystemParams,
    basis: Basis | None = None,
    *,
    rel_tol: float = 1e-8,
) -> DarkState:
    """Null vector of H(t) by full diagonalisation, phase-fixed so that the
    initial-state amplitude is real and non-negative.

    Eigenvalues with ``|lambda| <= rel_tol * ||H||_2`` count as zero; any count
    other than one raises :class:`DegeneracyError`.
    """
    if basis is None:
        basis = enumerate_coherent_basis(params)
    h = build_hamiltonian(t, params, basis)
    w, v = np.linalg.eigh(h)
    scale = max(np.abs(w).max(), 1e-300)
    null_dim = int(np.count_nonzero(np.abs(w) <= rel_tol * scale))
    if null_dim != 1:
        raise DegeneracyError(t, null_dim)
    vec = _fix_phase(v[:, np.argmin(np.abs(w))])
    try:
        x, G = _ratios(t, params)
    except ZeroDivisionError:
        x, G = float("nan"), float("nan")
    return DarkState(vec, x, G, t)


def dark_state_trace(
    times: Sequence[float], params: SystemParams, basis: Basis | None = None
) -> list[DarkState]:
    """Numeric dark state along a time grid.

    At degenerate instants (both drives numerically zero) the previous grid
    point's vector is carried over; before the first regular point the initial
    product state is used, which is the t -> -inf limit.
    """
    if basis is None:
        basis = enumerate_coherent_basis(params)
    out: list[DarkState] = []
    prev = np.zeros(len(basis), dtype=complex)
    prev[basis.index_of(initial_state(params.n_atoms))] = 1.0
    for t in times:
        try:
            ds = numeric_dark_state(t, params, basis)
        except DegeneracyError:
            ds = DarkState(prev, float("nan"), float("nan"), t)
        out.append(ds)
        prev = ds.amplitudes
    return out


def target_ghz(params: SystemParams, basis: Basis | None = None) -> GhzTarget:
    """``cos(alpha)`` on the initial product state and
    ``-e^{i(phi1 + phiN)} sin(alpha)`` on the transferred one, fields empty."""
    if basis is None:
        basis = enumerate_coherent_basis(params)
    amp = np.zeros(len(basis), dtype=complex)
    amp[basis.index_of(initial_state(params.n_atoms))] = np.cos(params.alpha)
    amp[basis.index_of(target_state(params.n_atoms))] = -np.exp(
        1j * (params.phi1 + params.phiN)
    ) * np.sin(params.alpha)
    return GhzTarget(amp, basis)


def instantaneous_spectrum(t: float, params: SystemParams, basis: Basis | None = None) -> np.ndarray:
    """Sorted eigenvalues of H(t)."""
    return np.linalg.eigvalsh(build_hamiltonian(t, params, basis))


def spectral_gap(spectrum: np.ndarray) -> float:
    """Distance from the eigenvalue closest to zero to its nearest neighbour."""
    k = int(np.argmin(np.abs(spectrum)))
    neighbours = [abs(spectrum[j] - spectrum[k]) for j in (k - 1, k + 1) if 0 <= j < len(spectrum)]
    return float(min(neighbours))


def dark_support(basis: Basis) -> np.ndarray:
    """Boolean mask of basis states with no excited atom and no fiber photon."""
    return np.array([s.n_excited == 0 and s.n_fiber_photons == 0 for s in basis])


__all__ = [
    "DarkState",
    "DegeneracyError",
    "GhzTarget",
    "analytic_dark_state",
    "dark_state_trace",
    "dark_support",
    "instantaneous_spectrum",
    "numeric_dark_state",
    "spectral_gap",
    "target_ghz",
]
