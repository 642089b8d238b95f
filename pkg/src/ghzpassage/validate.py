"""Self-check suite behind ``ghzpassage validate``.

Each check returns a :class:`CheckResult`; the suite never raises on a
failed invariant, it reports it.  Numerical blow-ups from a deliberately bad
step are caught and reported as failures too.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .darkstate import analytic_dark_state, dark_support, numeric_dark_state, target_ghz
from .dynamics import (
    DEFAULT_DT,
    IntegrationError,
    propagate_lindblad,
    propagate_schrodinger,
)
from .hamiltonian import build_hamiltonian
from .model import (
    SystemParams,
    coherent_couplings,
    enumerate_coherent_basis,
    enumerate_dissipative_basis,
    jump_channels,
)
from .observables import fidelity_pure

NULLITY_TOL = 1e-10
ANALYTIC_TOL = 1e-10
EQUIVALENCE_TOL = 1e-6
HALVING_TOL = 1e-6
NORM_DRIFT_TOL = 1e-8


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _probe_times(params: SystemParams) -> np.ndarray:
    return np.linspace(-params.tau - params.T, params.tau + params.T, 13)


def check_basis(params: SystemParams) -> CheckResult:
    coh = enumerate_coherent_basis(params)
    dis = enumerate_dissipative_basis(params)
    problems = []
    if len(coh) != 4 * params.n_atoms - 1:
        problems.append(f"coherent size {len(coh)} != {4 * params.n_atoms - 1}")
    for s in coh:
        if any(c.target not in coh for c in coherent_couplings(s)):
            problems.append(f"coherent basis not closed at {s.label()}")
            break
    for s in dis:
        if any(c.target not in dis for c in coherent_couplings(s)):
            problems.append(f"dissipative basis not closed under H at {s.label()}")
            break
        for ch in jump_channels(params.n_atoms):
            image = ch.apply(s)
            if image is not None and image not in dis:
                problems.append(f"{ch.label} leaves the dissipative basis from {s.label()}")
                break
    detail = "; ".join(problems) or f"coherent {len(coh)}, dissipative {len(dis)}, both closed"
    return CheckResult("basis closure and size", not problems, detail)


def check_hermiticity(params: SystemParams) -> CheckResult:
    worst = 0.0
    for t in _probe_times(params):
        h = build_hamiltonian(t, params)
        worst = max(worst, float(np.abs(h - h.conj().T).max()))
    return CheckResult("Hamiltonian Hermiticity", worst == 0.0, f"max |H - H^dag| = {worst:.3g}")


def check_dark_nullity(params: SystemParams) -> CheckResult:
    basis = enumerate_coherent_basis(params)
    support = dark_support(basis)
    worst, leak = 0.0, 0.0
    for t in _probe_times(params):
        ds = numeric_dark_state(t, params, basis)
        worst = max(worst, float(np.linalg.norm(build_hamiltonian(t, params, basis) @ ds.amplitudes)))
        leak = max(leak, float(np.abs(ds.amplitudes[~support]).max()))
    ok = worst < NULLITY_TOL and leak < NULLITY_TOL
    return CheckResult("dark-state nullity", ok,
                       f"max ||H d|| = {worst:.3g}, max amplitude off dark support = {leak:.3g} (tol {NULLITY_TOL:g})")


def check_analytic_dark_state(params: SystemParams) -> CheckResult:
    if params.n_atoms != 3:
        return CheckResult("analytic vs numeric dark state", True, f"skipped: closed form is N = 3 only (N = {params.n_atoms})")
    worst = 0.0
    for t in _probe_times(params):
        a = analytic_dark_state(t, params).amplitudes
        n = numeric_dark_state(t, params).amplitudes
        worst = max(worst, float(np.linalg.norm(a - n)))
    return CheckResult("analytic vs numeric dark state", worst < ANALYTIC_TOL, f"max difference {worst:.3g} (tol {ANALYTIC_TOL:g})")


def check_zero_decay_equivalence(params: SystemParams, dt: float) -> CheckResult:
    p = params.replace(kappa=0.0, k_fiber=0.0, gamma=0.0)
    try:
        pure = propagate_schrodinger(None, p, dt=dt, sample_dt=2.0)
        mixed = propagate_lindblad(None, p, dt=dt, sample_dt=2.0)
    except IntegrationError as exc:
        return CheckResult("zero-decay Lindblad = Schrodinger", False, str(exc))
    target = target_ghz(p)
    f_pure = np.abs(pure.states @ target.amplitudes.conj()) ** 2
    t_mixed = np.zeros(len(mixed.basis), dtype=complex)
    t_mixed[: len(target.amplitudes)] = target.amplitudes
    f_mixed = np.real(np.einsum("i,kij,j->k", t_mixed.conj(), mixed.states, t_mixed))
    diff = float(np.abs(f_pure - f_mixed).max())
    ok = bool(np.isfinite(diff) and diff < EQUIVALENCE_TOL)
    return CheckResult("zero-decay Lindblad = Schrodinger", ok, f"max fidelity difference {diff:.3g} (tol {EQUIVALENCE_TOL:g})")


def check_norm(params: SystemParams, dt: float) -> CheckResult:
    traj = propagate_schrodinger(None, params.replace(kappa=0.0, k_fiber=0.0, gamma=0.0), dt=dt,
                                 sample_dt=1.0, check=False)
    drift = np.abs(np.sum(np.abs(traj.states) ** 2, axis=1) - 1.0)
    worst = float(np.max(drift)) if np.all(np.isfinite(drift)) else float("inf")
    return CheckResult("norm conservation", worst < NORM_DRIFT_TOL, f"max |1 - ||psi||^2| = {worst:.3g} (tol {NORM_DRIFT_TOL:g})")


def step_halving(params: SystemParams, dt: float) -> dict:
    """Final fidelity at ``dt`` and ``dt / 2`` on the default window (no norm check)."""
    target = target_ghz(params)
    f = []
    for h in (dt, dt / 2):
        with np.errstate(over="ignore", invalid="ignore"):
            traj = propagate_schrodinger(None, params, dt=h, sample_dt=None, check=False)
        f.append(fidelity_pure(traj.states[-1], target))
    change = abs(f[0] - f[1])
    return {"dt": dt, "F_dt": f[0], "F_dt_half": f[1], "abs_change": change if np.isfinite(change) else float("inf")}


def check_step_halving(params: SystemParams, dt: float) -> CheckResult:
    r = step_halving(params.replace(kappa=0.0, k_fiber=0.0, gamma=0.0), dt)
    ok = r["abs_change"] < HALVING_TOL
    return CheckResult("step-halving convergence", ok,
                       f"dt={dt:g}: F={r['F_dt']:.10g}, dt/2: F={r['F_dt_half']:.10g}, change {r['abs_change']:.3g} (tol {HALVING_TOL:g})")


def run_validation(params: SystemParams | None = None, dt: float = DEFAULT_DT) -> list[CheckResult]:
    """Run every check with the default pulse parameters (or ``params``)."""
    params = params or SystemParams()
    checks: list[tuple[str, Callable[[], CheckResult]]] = [
        ("basis closure and size", lambda: check_basis(params)),
        ("Hamiltonian Hermiticity", lambda: check_hermiticity(params)),
        ("dark-state nullity", lambda: check_dark_nullity(params)),
        ("analytic vs numeric dark state", lambda: check_analytic_dark_state(params)),
        ("norm conservation", lambda: check_norm(params, dt)),
        ("zero-decay Lindblad = Schrodinger", lambda: check_zero_decay_equivalence(params, dt)),
        ("step-halving convergence", lambda: check_step_halving(params, dt)),
    ]
    out = []
    for name, run in checks:
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                out.append(run())
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            out.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
    return out
