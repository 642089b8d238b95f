from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ghzpassage.darkstate import target_ghz
from ghzpassage.dynamics import DensityMatrix, StateVector, propagate_lindblad
from ghzpassage.model import SystemParams
from ghzpassage.observables import (
    excited_mask,
    fiber_mask,
    fidelity,
    fidelity_mixed,
    fidelity_pure,
    populations,
    purity,
    trajectory_table,
)

finite = st.floats(-1, 1, allow_nan=False, allow_infinity=False)


def _unit(re, im):
    v = re + 1j * im
    n = np.linalg.norm(v)
    return v / n if n > 1e-6 else None


@pytest.fixture(scope="module")
def ghz():
    return target_ghz(SystemParams())


def test_self_fidelity(ghz):
    assert fidelity_pure(ghz, ghz) == pytest.approx(1.0)
    assert fidelity_mixed(ghz.projector(), ghz) == pytest.approx(1.0)


def test_initial_state_has_half_overlap(ghz):
    psi = np.zeros(11, complex)
    psi[0] = 1
    assert fidelity_pure(psi, ghz) == pytest.approx(0.5)


def test_maximally_mixed_dissipative_state(ghz):
    rho = np.eye(16) / 16
    assert fidelity_mixed(rho, ghz) == pytest.approx(1 / 16)
    assert fidelity(DensityMatrix(rho), ghz) == pytest.approx(1 / 16)


def test_populations_of_initial_state():
    psi = StateVector(np.eye(11)[0].astype(complex))
    p = populations(psi)
    assert p[0] == 1 and p[1:].sum() == 0
    assert np.array_equal(populations(psi, [0, 10]), [1.0, 0.0])


def test_masks_count_excited_and_fiber_states(ghz):
    assert excited_mask(ghz.basis).sum() == 3
    assert fiber_mask(ghz.basis).sum() == 2


@given(arrays(float, 11, elements=finite), arrays(float, 11, elements=finite), st.floats(0, 2 * math.pi))
@settings(max_examples=100, deadline=None)
def test_pure_mixed_consistency_and_phase_invariance(re, im, theta):
    psi = _unit(re, im)
    if psi is None:
        return
    ghz = target_ghz(SystemParams())
    f = fidelity_pure(psi, ghz)
    assert 0 <= f <= 1 + 1e-12
    assert fidelity_mixed(np.outer(psi, psi.conj()), ghz) == pytest.approx(f, abs=1e-12)
    assert fidelity_pure(np.exp(1j * theta) * psi, ghz) == pytest.approx(f, abs=1e-12)


@given(arrays(float, (2, 11), elements=finite), arrays(float, (2, 11), elements=finite), st.floats(0, 1))
@settings(max_examples=50, deadline=None)
def test_mixed_fidelity_is_linear(re, im, w):
    a, b = _unit(re[0], im[0]), _unit(re[1], im[1])
    if a is None or b is None:
        return
    ghz = target_ghz(SystemParams())
    ra, rb = np.outer(a, a.conj()), np.outer(b, b.conj())
    mix = fidelity_mixed(w * ra + (1 - w) * rb, ghz)
    assert mix == pytest.approx(w * fidelity_mixed(ra, ghz) + (1 - w) * fidelity_mixed(rb, ghz), abs=1e-12)


def test_target_larger_than_state_rejected(ghz):
    with pytest.raises(ValueError):
        fidelity_pure(np.ones(5), ghz)


def test_trajectory_table_columns_and_sums(fig3_trajectory, ghz):
    cols = trajectory_table(fig3_trajectory, ghz, range(0, 11, 2))
    assert list(cols) == ["t", "P_1", "P_3", "P_5", "P_7", "P_9", "P_11",
                          "P_excited_total", "P_fiber_total", "fidelity", "norm_or_trace"]
    pops = np.abs(fig3_trajectory.states) ** 2
    assert np.allclose(pops.sum(axis=1), cols["norm_or_trace"], atol=1e-8)
    assert np.all(pops >= -1e-10) and np.all(pops <= 1 + 1e-10)


def test_mixed_trajectory_table_uses_trace():
    p = SystemParams(kappa=0.05)
    traj = propagate_lindblad(None, p, t_start=-100.0, t_end=100.0, dt=0.02, sample_dt=10.0)
    cols = trajectory_table(traj, target_ghz(p), [0, 10])
    assert np.allclose(cols["norm_or_trace"], 1.0, atol=1e-8)
    assert purity(traj.final) < 1
