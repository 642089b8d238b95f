"""Populations and fidelities.

Fidelity is the overlap-squared convention, ``F = |<target|psi>|^2`` for pure
states and ``F = <target|rho|target>`` for mixed ones.  This is *not* the
square-root (Uhlmann) fidelity.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .darkstate import GhzTarget
from .dynamics import DensityMatrix, StateVector, Trajectory
from .model import Basis


def _vec(x) -> np.ndarray:
    if isinstance(x, (StateVector, GhzTarget)):
        return x.amplitudes
    return np.asarray(x)


def _mat(x) -> np.ndarray:
    return x.entries if isinstance(x, DensityMatrix) else np.asarray(x)


def _embed(target: np.ndarray, dim: int) -> np.ndarray:
    # coherent-basis targets are prefixes of the dissipative basis
    if len(target) == dim:
        return target
    if len(target) > dim:
        raise ValueError(f"target dimension {len(target)} exceeds state dimension {dim}")
    out = np.zeros(dim, dtype=complex)
    out[: len(target)] = target
    return out


def fidelity_pure(psi, target) -> float:
    psi = _vec(psi)
    t = _embed(_vec(target), len(psi))
    return float(abs(np.vdot(t, psi)) ** 2)


def fidelity_mixed(rho, target) -> float:
    rho = _mat(rho)
    t = _embed(_vec(target), rho.shape[0])
    return float(np.real(np.vdot(t, rho @ t)))


def fidelity(state, target) -> float:
    """Dispatch on pure vs mixed input."""
    if isinstance(state, DensityMatrix) or np.ndim(state) == 2:
        return fidelity_mixed(state, target)
    return fidelity_pure(state, target)


def populations(state, indices: Sequence[int] | None = None) -> np.ndarray:
    """``|amplitude|^2`` (pure) or diagonal entries (mixed) at ``indices``."""
    if isinstance(state, DensityMatrix) or np.ndim(state) == 2:
        p = np.real(np.diagonal(_mat(state)))
    else:
        p = np.abs(_vec(state)) ** 2
    return p if indices is None else p[list(indices)]


def purity(rho) -> float:
    rho = _mat(rho)
    return float(np.real(np.trace(rho @ rho)))


def excited_mask(basis: Basis) -> np.ndarray:
    return np.array([s.n_excited > 0 for s in basis])


def fiber_mask(basis: Basis) -> np.ndarray:
    return np.array([s.n_fiber_photons > 0 for s in basis])


def trajectory_table(traj: Trajectory, target, tracked: Sequence[int]) -> dict[str, np.ndarray]:
    """Column arrays for a trajectory: tracked populations, excited and fiber
    totals, fidelity and norm (pure) or trace (mixed)."""
    states = traj.states
    if traj.is_mixed:
        pops = np.real(np.einsum("kii->ki", states))
        t = _embed(_vec(target), states.shape[1])
        fid = np.real(np.einsum("i,kij,j->k", t.conj(), states, t))
        norm = pops.sum(axis=1)
    else:
        pops = np.abs(states) ** 2
        t = _embed(_vec(target), states.shape[1])
        fid = np.abs(states @ t.conj()) ** 2
        norm = pops.sum(axis=1)
    cols = {"t": traj.times}
    for k in tracked:
        cols[f"P_{k + 1}"] = pops[:, k]
    cols["P_excited_total"] = pops[:, excited_mask(traj.basis)].sum(axis=1)
    cols["P_fiber_total"] = pops[:, fiber_mask(traj.basis)].sum(axis=1)
    cols["fidelity"] = fid
    cols["norm_or_trace"] = norm
    return cols
