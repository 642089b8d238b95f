"""Time-dependent Hamiltonian of the chain and the Gaussian drive pair.

Units: hbar = 1, frequencies in units of g, times in units of 1/g.  The
Hamiltonian is resonant (zero diagonal) and, in the canonical basis order,
tridiagonal; :class:`ChainHamiltonian` stores it as a static off-diagonal plus
two drive-weighted off-diagonals so that propagation never re-walks the basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Basis, SystemParams, coherent_couplings, enumerate_coherent_basis


@dataclass(frozen=True)
class PulseShape:
    omega0: float
    alpha: float
    tau: float
    T: float

    @classmethod
    def from_params(cls, params: SystemParams) -> PulseShape:
        return cls(params.omega0, params.alpha, params.tau, params.T)


def _shape(p: PulseShape | SystemParams) -> PulseShape:
    return p if isinstance(p, PulseShape) else PulseShape.from_params(p)


def rabi_omega1(t, p: PulseShape | SystemParams):
    """Drive on atom 1: ``omega0 sin(alpha) exp(-(t - tau)^2 / T^2)``."""
    p = _shape(p)
    return p.omega0 * np.sin(p.alpha) * np.exp(-((t - p.tau) ** 2) / p.T**2)


def rabi_omegaN(t, p: PulseShape | SystemParams):
    """Drive on atom N: a leading Gaussian at ``-tau`` plus ``cos(alpha)`` times
    the trailing one at ``+tau``."""
    p = _shape(p)
    return p.omega0 * (
        np.exp(-((t + p.tau) ** 2) / p.T**2)
        + np.cos(p.alpha) * np.exp(-((t - p.tau) ** 2) / p.T**2)
    )


def adiabaticity_lhs(t, p: PulseShape | SystemParams):
    """``2 O1 ON / sqrt(O1^2 + ON^2)``; compare against g. Zero where both vanish."""
    o1 = np.asarray(rabi_omega1(t, p), dtype=float)
    oN = np.asarray(rabi_omegaN(t, p), dtype=float)
    norm = np.hypot(o1, oN)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(norm > 0, 2 * o1 * oN / np.where(norm > 0, norm, 1.0), 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ChainHamiltonian:
    """H(t) = H_static + O1(t) * D1 + ON(t) * DN on a given basis.

    Only the upper off-diagonal is stored: ``H[i, i+1] = upper[i]`` and
    ``H[i+1, i] = conj(upper[i])``.  ``static``, ``drive1`` and ``driveN`` are
    complex vectors of length ``dim - 1``.
    """

    basis: Basis
    static: np.ndarray
    drive1: np.ndarray
    driveN: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.basis)

    @classmethod
    def build(cls, params: SystemParams, basis: Basis | None = None) -> ChainHamiltonian:
        if basis is None:
            basis = enumerate_coherent_basis(params)
        if basis.n_atoms != params.n_atoms:
            raise ValueError(
                f"basis is for N={basis.n_atoms} but params have N={params.n_atoms}"
            )
        dim = len(basis)
        static = np.zeros(dim - 1, dtype=complex)
        drive1 = np.zeros(dim - 1, dtype=complex)
        driveN = np.zeros(dim - 1, dtype=complex)
        # phase convention: H[phi_1, phi_2] = O1 e^{-i phi1}, H[phi_10, phi_11] = ON e^{-i phiN}
        e1 = np.exp(1j * params.phi1)
        eN = np.exp(-1j * params.phiN)
        for col, state in enumerate(basis):
            for c in coherent_couplings(state):
                row = basis.index_of(c.target)
                if abs(row - col) != 1:
                    raise ValueError(
                        f"coupling {col}->{row} is not nearest-neighbour; basis order is not a chain"
                    )
                if row > col:
                    continue  # store each bond once, from its upper element H[col, col+1]
                # element <row|H|col> with row = col - 1 is upper[row]
                if c.kind == "g":
                    static[row] = params.g
                elif c.kind == "v":
                    static[row] = params.v
                elif c.kind == "drive1":
                    drive1[row] = np.conj(e1) if not c.raising else e1
                else:
                    driveN[row] = eN if c.raising else np.conj(eN)
        return cls(basis, static, drive1, driveN)

    def upper(self, omega1, omegaN) -> np.ndarray:
        """Upper off-diagonal for scalar or array-valued drive amplitudes.

        Array inputs of shape ``(P,)`` give an output of shape ``(P, dim-1)``.
        """
        o1 = np.asarray(omega1)[..., None]
        oN = np.asarray(omegaN)[..., None]
        return self.static + o1 * self.drive1 + oN * self.driveN

    def dense_from_upper(self, upper: np.ndarray) -> np.ndarray:
        h = np.diag(upper, 1)
        return h + h.conj().T

    def dense(self, t: float, params: SystemParams) -> np.ndarray:
        return self.dense_from_upper(self.upper(rabi_omega1(t, params), rabi_omegaN(t, params)))


def build_hamiltonian(t: float, params: SystemParams, basis: Basis | None = None) -> np.ndarray:
    """Dense Hermitian H(t) on ``basis`` (coherent basis if omitted).

    Rows and columns of states outside the coherent closure are identically zero.
    """
    return ChainHamiltonian.build(params, basis).dense(t, params)
