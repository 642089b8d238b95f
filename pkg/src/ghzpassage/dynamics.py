"""Pure-state and density-matrix propagation.

Both propagators use classical fixed-step RK4 on a uniform grid and exploit
the tridiagonal, zero-diagonal form of H(t) in the canonical basis order.  The
same batched kernels serve single runs (batch of one) and parameter sweeps,
so a sweep point and a standalone run with the same grid agree bit for bit.

``oracle_propagate`` is an independent check: piecewise-constant midpoint H
with exact eigendecomposition propagators.  Production paths never call it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .hamiltonian import ChainHamiltonian
from .model import (
    Basis,
    SystemParams,
    enumerate_coherent_basis,
    enumerate_dissipative_basis,
    initial_state,
    jump_channels,
)

DEFAULT_DT = 0.005
DEFAULT_T_END = 300.0
PULSE_CUTOFF = 1e-4

NORM_TOL = 1e-6
TRACE_TOL = 1e-6
NEGATIVITY_TOL = 1e-6


class IntegrationError(RuntimeError):
    """The integrator lost norm, trace or positivity beyond tolerance."""


def pre_pulse_start(params: SystemParams, cutoff: float = PULSE_CUTOFF) -> float:
    """Start time at which both drive envelopes are below ``cutoff * omega0``.

    The leading Gaussian sits at ``-tau``; this returns
    ``floor(-tau - T sqrt(ln(1/cutoff)))`` so that sampled grids land on
    integer multiples of 1/g.
    """
    return float(math.floor(-params.tau - params.T * math.sqrt(math.log(1.0 / cutoff))))


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    time: float = 0.0

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray
    time: float = 0.0

    @classmethod
    def pure(cls, psi: np.ndarray | StateVector, time: float = 0.0) -> DensityMatrix:
        amp = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi)
        return cls(np.outer(amp, amp.conj()), time)

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)


@dataclass
class Trajectory:
    """Samples on a uniform time grid.

    ``states`` has shape ``(n_samples, D)`` for pure runs and
    ``(n_samples, D, D)`` for density matrices.
    """

    times: np.ndarray
    states: np.ndarray
    basis: Basis
    dt: float
    t_start: float
    metadata: dict = field(default_factory=dict)

    @property
    def is_mixed(self) -> bool:
        return self.states.ndim == 3

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, k: int) -> StateVector | DensityMatrix:
        if self.is_mixed:
            return DensityMatrix(self.states[k], float(self.times[k]))
        return StateVector(self.states[k], float(self.times[k]))

    def index_at(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        spacing = self.times[1] - self.times[0] if len(self.times) > 1 else np.inf
        if abs(self.times[k] - t) > 0.5 * spacing + 1e-9:
            raise ValueError(f"t={t} outside the sampled window")
        return k

    def at(self, t: float) -> StateVector | DensityMatrix:
        return self[self.index_at(t)]

    @property
    def final(self) -> StateVector | DensityMatrix:
        return self[-1]


# --- jump operators -----------------------------------------------------------------

@dataclass(frozen=True)
class JumpOperator:
    label: str
    rate: str  # SystemParams field name
    matrix: np.ndarray


@dataclass(frozen=True)
class JumpOperatorSet:
    operators: tuple[JumpOperator, ...]
    basis: Basis

    def __len__(self) -> int:
        return len(self.operators)

    def __iter__(self):
        return iter(self.operators)

    def rates(self, params: SystemParams) -> np.ndarray:
        return np.array([getattr(params, op.rate) for op in self.operators], dtype=float)

    def by_label(self, label: str) -> JumpOperator:
        for op in self.operators:
            if op.label == label:
                return op
        raise KeyError(label)


def build_jump_operators(params: SystemParams, basis: Basis | None = None) -> JumpOperatorSet:
    """Matrices of every photon-annihilation and atomic-lowering operator.

    Operators with zero rate are still built; rates enter at integration time.
    """
    if basis is None:
        basis = enumerate_dissipative_basis(params)
    dim = len(basis)
    ops = []
    for ch in jump_channels(params.n_atoms):
        m = np.zeros((dim, dim))
        for col, state in enumerate(basis):
            image = ch.apply(state)
            if image is None:
                continue
            if image not in basis:
                raise ValueError(f"{ch.label} maps {state} outside the basis")
            m[basis.index_of(image), col] = 1.0
        ops.append(JumpOperator(ch.label, ch.rate, m))
    return JumpOperatorSet(tuple(ops), basis)


# --- batched RK4 kernels ----------------------------------------------------------

@dataclass(frozen=True)
class _PulseBatch:
    omega0: np.ndarray
    alpha: np.ndarray
    tau: np.ndarray
    T: np.ndarray

    @classmethod
    def of(cls, params: Sequence[SystemParams]) -> _PulseBatch:
        cols = [np.array([getattr(p, k) for p in params], dtype=float) for k in ("omega0", "alpha", "tau", "T")]
        return cls(*cols)

    def evaluate(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        t = t[:, None]
        late = np.exp(-((t - self.tau) ** 2) / self.T**2)
        early = np.exp(-((t + self.tau) ** 2) / self.T**2)
        o1 = self.omega0 * np.sin(self.alpha) * late
        oN = self.omega0 * (early + np.cos(self.alpha) * late)
        return o1, oN


class _Dissipator:
    """Lindblad jump terms in index form.

    For every operator L_c and every pair of its nonzero entries
    ``(d1, s1, a1), (d2, s2, a2)`` the term ``r_c a1 conj(a2) rho[s1, s2]`` is
    added to ``[d1, d2]``; the anticommutator part is the diagonal-or-not
    matrix ``K = sum_c r_c L_c^dag L_c`` folded into an effective Hamiltonian.
    """

    def __init__(self, jumps: JumpOperatorSet, rates: np.ndarray):
        dim = len(jumps.basis)
        src, dst, coef, chan = [], [], [], []
        for c, op in enumerate(jumps.operators):
            rows, cols = np.nonzero(op.matrix)
            for d1, s1 in zip(rows, cols):
                for d2, s2 in zip(rows, cols):
                    src.append(s1 * dim + s2)
                    dst.append(d1 * dim + d2)
                    coef.append(op.matrix[d1, s1] * np.conj(op.matrix[d2, s2]))
                    chan.append(c)
        self.src = np.array(src, dtype=int)
        udst, inverse = np.unique(np.array(dst, dtype=int), return_inverse=True)
        self.udst = udst
        scatter = np.zeros((len(src), len(udst)))
        scatter[np.arange(len(src)), inverse] = 1.0
        self.scatter = scatter
        # rates: (P, n_ops)
        self.weights = rates[:, np.array(chan, dtype=int)] * np.array(coef) if src else np.zeros((len(rates), 0))
        LdL = np.stack([op.matrix.conj().T @ op.matrix for op in jumps.operators])  # (n_ops, D, D)
        self.K = np.einsum("pc,cij->pij", rates, LdL)
        self.K_diagonal = np.allclose(self.K, np.einsum("pii->pi", self.K)[:, :, None] * np.eye(dim))
        self.K_diag = np.einsum("pii->pi", self.K).real.copy()
        self.dim = dim
        self.active = bool(np.any(rates > 0))

    def add_jumps(self, rho: np.ndarray, out: np.ndarray) -> None:
        if not self.active or self.src.size == 0:
            return
        P = rho.shape[0]
        flat = rho.reshape(P, -1)
        vals = (flat[:, self.src] * self.weights) @ self.scatter
        out.reshape(P, -1)[:, self.udst] += vals


def _pure_rhs(mu: np.ndarray, ml: np.ndarray, y: np.ndarray) -> np.ndarray:
    # mu = -i * upper, ml = -i * conj(upper): returns -i H y
    out = np.empty_like(y)
    out[:, :-1] = mu * y[:, 1:]
    out[:, -1] = 0.0
    out[:, 1:] += ml * y[:, :-1]
    return out


def _mixed_rhs(mu, ml, diss: _Dissipator, rho: np.ndarray) -> np.ndarray:
    # A = -i H_eff rho with H_eff = H - (i/2) K; rhs = A + A^dag + jumps
    A = np.empty_like(rho)
    A[:, :-1, :] = mu[:, :, None] * rho[:, 1:, :]
    A[:, -1, :] = 0.0
    A[:, 1:, :] += ml[:, :, None] * rho[:, :-1, :]
    if diss.active:
        if diss.K_diagonal:
            A -= 0.5 * diss.K_diag[:, :, None] * rho
        else:
            A -= 0.5 * diss.K @ rho
    out = A + np.conj(np.swapaxes(A, 1, 2))
    diss.add_jumps(rho, out)
    return out


def _integrate(
    y0: np.ndarray,
    chain: ChainHamiltonian,
    pulses: _PulseBatch,
    t_start: float,
    dt: float,
    n_steps: int,
    *,
    dissipator: _Dissipator | None = None,
    sample_every: int = 0,
    on_sample: Callable[[int, np.ndarray], None] | None = None,
) -> np.ndarray:
    """Advance the batch ``y0`` by ``n_steps`` RK4 steps from ``t_start``.

    ``on_sample(step, y)`` is called at step 0 and every ``sample_every`` steps.
    """
    y = np.array(y0, dtype=complex)
    P = y.shape[0]
    mixed = dissipator is not None
    rhs = (lambda mu, ml, x: _mixed_rhs(mu, ml, dissipator, x)) if mixed else _pure_rhs
    width = chain.dim - 1
    chunk = max(1, min(n_steps, int(2_000_000 // (P * width * (chain.dim if mixed else 1)) or 1), 4096))
    half = 0.5 * dt
    if on_sample is not None:
        on_sample(0, y)
    step = 0
    while step < n_steps:
        m = min(chunk, n_steps - step)
        ts = t_start + (2 * step + np.arange(2 * m + 1)) * half
        o1, oN = pulses.evaluate(ts)
        upper = chain.static + o1[..., None] * chain.drive1 + oN[..., None] * chain.driveN
        mu = -1j * upper
        ml = -1j * np.conj(upper)
        for k in range(m):
            a0, a1, a2 = 2 * k, 2 * k + 1, 2 * k + 2
            k1 = rhs(mu[a0], ml[a0], y)
            k2 = rhs(mu[a1], ml[a1], y + half * k1)
            k3 = rhs(mu[a1], ml[a1], y + half * k2)
            k4 = rhs(mu[a2], ml[a2], y + dt * k3)
            y = y + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
            step += 1
            if on_sample is not None and sample_every and step % sample_every == 0:
                on_sample(step, y)
    return y


def _grid(t_start: float, t_end: float, dt: float, sample_dt: float | None) -> tuple[int, float, int]:
    """Step count, effective step and sampling stride for a uniform grid."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    span = t_end - t_start
    if not span > 0:
        raise ValueError(f"t_end ({t_end}) must exceed t_start ({t_start})")
    if sample_dt is None or sample_dt <= 0:
        n = max(1, math.ceil(span / dt - 1e-9))
        return n, span / n, n
    stride = max(1, round(sample_dt / dt))
    n_samples = max(1, math.ceil(span / (stride * dt) - 1e-9))
    n = stride * n_samples
    return n, span / n, stride


def _resolve_window(params: SystemParams, t_start: float | None, t_end: float | None):
    t0 = pre_pulse_start(params) if t_start is None else float(t_start)
    t1 = DEFAULT_T_END if t_end is None else float(t_end)
    return t0, t1


def initial_vector(basis: Basis) -> np.ndarray:
    psi = np.zeros(len(basis), dtype=complex)
    psi[basis.index_of(initial_state(basis.n_atoms))] = 1.0
    return psi


def propagate_schrodinger(
    psi0: StateVector | np.ndarray | None,
    params: SystemParams,
    t_start: float | None = None,
    t_end: float | None = DEFAULT_T_END,
    dt: float = DEFAULT_DT,
    *,
    sample_dt: float | None = 0.5,
    basis: Basis | None = None,
    check: bool = True,
) -> Trajectory:
    """Integrate ``i d psi/dt = H(t) psi`` with RK4 at fixed step, no renormalisation.

    ``psi0=None`` starts from the initial product state.  ``t_start=None``
    starts before the pulses (see :func:`pre_pulse_start`).  Raises
    :class:`IntegrationError` when the norm drifts by more than 1e-6 at any sample.
    """
    if basis is None:
        basis = enumerate_coherent_basis(params)
    t0, t1 = _resolve_window(params, t_start, t_end)
    n, h, stride = _grid(t0, t1, dt, sample_dt)
    y0 = initial_vector(basis) if psi0 is None else np.asarray(
        psi0.amplitudes if isinstance(psi0, StateVector) else psi0, dtype=complex
    )
    if y0.shape != (len(basis),):
        raise ValueError(f"psi0 has shape {y0.shape}, basis has dimension {len(basis)}")
    chain = ChainHamiltonian.build(params, basis)

    times, samples = [], []

    def record(step, y):
        times.append(t0 + step * h)
        samples.append(y[0].copy())

    _integrate(y0[None, :], chain, _PulseBatch.of([params]), t0, h, n, sample_every=stride, on_sample=record)
    traj = Trajectory(np.array(times), np.array(samples), basis, h, t0,
                      metadata={"engine": "schrodinger", "integrator": "rk4", "dt": h, "t_start": t0, "t_end": t1})
    if check:
        drift = np.abs(np.linalg.norm(traj.states, axis=1) ** 2 - np.linalg.norm(y0) ** 2)
        k = int(np.argmax(drift))
        if not drift[k] <= NORM_TOL:
            raise IntegrationError(
                f"norm drift {drift[k]:.3g} at t={traj.times[k]:g} exceeds {NORM_TOL:g}; reduce dt (now {h:g})"
            )
    return traj


def check_density_matrix(rho: np.ndarray, trace0: float = 1.0) -> str | None:
    """Reason string if ``rho`` violates trace or positivity tolerances, else None."""
    tr = np.trace(rho).real
    if not abs(tr - trace0) <= TRACE_TOL:
        return f"trace drift {abs(tr - trace0):.3g} exceeds {TRACE_TOL:g}"
    herm = 0.5 * (rho + rho.conj().T)
    lam = np.linalg.eigvalsh(herm)[0]
    if not lam >= -NEGATIVITY_TOL:
        return f"minimum eigenvalue {lam:.3g} below -{NEGATIVITY_TOL:g}"
    return None


def propagate_lindblad(
    rho0: DensityMatrix | np.ndarray | None,
    params: SystemParams,
    t_start: float | None = None,
    t_end: float | None = DEFAULT_T_END,
    dt: float = DEFAULT_DT,
    *,
    sample_dt: float | None = 0.5,
    basis: Basis | None = None,
    check: bool = True,
) -> Trajectory:
    """Integrate the master equation with cavity, fiber and atomic decay.

    ``rho0=None`` starts from the projector on the initial product state over
    the dissipative basis.  Trace and positivity are checked at every sample.
    """
    if basis is None:
        basis = enumerate_dissipative_basis(params)
    t0, t1 = _resolve_window(params, t_start, t_end)
    n, h, stride = _grid(t0, t1, dt, sample_dt)
    if rho0 is None:
        r0 = DensityMatrix.pure(initial_vector(basis)).entries
    else:
        r0 = np.asarray(rho0.entries if isinstance(rho0, DensityMatrix) else rho0, dtype=complex)
    if r0.shape != (len(basis), len(basis)):
        raise ValueError(f"rho0 has shape {r0.shape}, basis has dimension {len(basis)}")
    chain = ChainHamiltonian.build(params, basis)
    jumps = build_jump_operators(params, basis)
    diss = _Dissipator(jumps, jumps.rates(params)[None, :])
    trace0 = float(np.trace(r0).real)

    times, samples = [], []

    def record(step, y):
        times.append(t0 + step * h)
        samples.append(y[0].copy())
        if check:
            reason = check_density_matrix(y[0], trace0)
            if reason is not None:
                raise IntegrationError(f"{reason} at t={t0 + step * h:g}; reduce dt (now {h:g})")

    _integrate(r0[None], chain, _PulseBatch.of([params]), t0, h, n, dissipator=diss,
               sample_every=stride, on_sample=record)
    return Trajectory(np.array(times), np.array(samples), basis, h, t0,
                      metadata={"engine": "lindblad", "integrator": "rk4", "dt": h, "t_start": t0, "t_end": t1})


def oracle_propagate(
    psi0: StateVector | np.ndarray | None,
    params: SystemParams,
    t_start: float | None,
    t_end: float,
    n_steps: int,
    *,
    basis: Basis | None = None,
) -> StateVector:
    """Piecewise-constant propagation with exact sub-interval unitaries.

    H is frozen at each sub-interval midpoint and applied as
    ``V diag(exp(-i lambda dt)) V^dag`` from a dense eigendecomposition.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if basis is None:
        basis = enumerate_coherent_basis(params)
    t0 = pre_pulse_start(params) if t_start is None else float(t_start)
    psi = initial_vector(basis) if psi0 is None else np.array(
        psi0.amplitudes if isinstance(psi0, StateVector) else psi0, dtype=complex
    )
    h = (t_end - t0) / n_steps
    chain = ChainHamiltonian.build(params, basis)
    for k in range(n_steps):
        lam, vec = np.linalg.eigh(chain.dense(t0 + (k + 0.5) * h, params))
        psi = vec @ (np.exp(-1j * lam * h) * (vec.conj().T @ psi))
    return StateVector(psi, t_end)


# --- batched final-state runs (used by sweeps) ------------------------------------

def final_states_batch(
    params_list: Sequence[SystemParams],
    t_start: float,
    t_end: float,
    dt: float,
    *,
    engine: str = "schrodinger",
) -> tuple[np.ndarray, Basis]:
    """Final states of many runs sharing one grid and one chain layout.

    All points must agree on everything except pulse shape and decay rates.
    """
    first = params_list[0]
    shared = ("n_atoms", "g", "v", "phi1", "phiN")
    for p in params_list[1:]:
        if any(getattr(p, k) != getattr(first, k) for k in shared):
            raise ValueError(f"batched runs must share {shared}")
    n, h, _ = _grid(t_start, t_end, dt, None)
    pulses = _PulseBatch.of(params_list)
    P = len(params_list)
    if engine == "schrodinger":
        basis = enumerate_coherent_basis(first)
        chain = ChainHamiltonian.build(first, basis)
        y0 = np.tile(initial_vector(basis), (P, 1))
        return _integrate(y0, chain, pulses, t_start, h, n), basis
    if engine == "lindblad":
        basis = enumerate_dissipative_basis(first)
        chain = ChainHamiltonian.build(first, basis)
        jumps = build_jump_operators(first, basis)
        rates = np.stack([jumps.rates(p) for p in params_list])
        psi = initial_vector(basis)
        y0 = np.tile(np.outer(psi, psi.conj()), (P, 1, 1))
        return _integrate(y0, chain, pulses, t_start, h, n, dissipator=_Dissipator(jumps, rates)), basis
    raise ValueError(f"unknown engine {engine!r}")
