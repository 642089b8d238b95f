from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ghzpassage.hamiltonian import (
    ChainHamiltonian,
    PulseShape,
    adiabaticity_lhs,
    build_hamiltonian,
    rabi_omega1,
    rabi_omegaN,
)
from ghzpassage.model import SystemParams, enumerate_coherent_basis, enumerate_dissipative_basis

params_st = st.builds(
    SystemParams,
    n_atoms=st.sampled_from([3, 5, 7]),
    v=st.floats(0.1, 20),
    omega0=st.floats(0.01, 0.5),
    alpha=st.floats(0, math.pi / 2),
    tau=st.floats(0, 120),
    T=st.floats(10, 160),
    phi1=st.floats(-math.pi, math.pi),
    phiN=st.floats(-math.pi, math.pi),
)


def test_pulse_values_at_38(default_params):
    assert rabi_omega1(38.0, default_params) == pytest.approx(0.069137, abs=1e-6)
    assert rabi_omegaN(38.0, default_params) == pytest.approx(0.098957, abs=1e-6)


def test_pulses_accept_arrays_and_shapes(default_params):
    t = np.linspace(-300, 300, 7)
    shape = PulseShape.from_params(default_params)
    assert np.array_equal(rabi_omega1(t, shape), rabi_omega1(t, default_params))
    assert rabi_omegaN(t, default_params).shape == (7,)


def test_fractional_end_ratio(default_params):
    # late times: O1/ON -> tan(alpha)
    assert rabi_omega1(400.0, default_params) / rabi_omegaN(400.0, default_params) == pytest.approx(1.0, rel=1e-4)


def test_adiabaticity_lhs_zero_when_drives_vanish():
    p = SystemParams(omega0=0.0)
    assert adiabaticity_lhs(0.0, p) == 0.0
    q = SystemParams()
    o1, oN = rabi_omega1(10.0, q), rabi_omegaN(10.0, q)
    assert adiabaticity_lhs(10.0, q) == pytest.approx(2 * o1 * oN / math.hypot(o1, oN))


def test_three_atom_matrix_elements(default_params):
    t = 20.0
    h = build_hamiltonian(t, default_params)
    o1, oN = rabi_omega1(t, default_params), rabi_omegaN(t, default_params)
    expected = [o1, 1, 10, 10, 1, 1, 10, 10, 1, -oN]  # phiN = pi flips the last bond
    assert np.allclose(np.diag(h, 1), expected, atol=1e-15)
    assert np.all(np.diag(h) == 0)
    assert np.count_nonzero(np.triu(h, 2)) == 0


def test_five_atom_off_diagonal_sequence():
    p = SystemParams(n_atoms=5, v=3.0, phiN=0.0)
    ch = ChainHamiltonian.build(p)
    up = ch.upper(0.2, 0.3)
    g, v = 1.0, 3.0
    assert np.allclose(up, [0.2, g, v, v, g, g, v, v, g, g, v, v, g, g, v, v, g, 0.3])


def test_laser_phases_enter_end_bonds():
    p = SystemParams(phi1=0.7, phiN=-1.3)
    up = ChainHamiltonian.build(p).upper(1.0, 1.0)
    assert up[0] == pytest.approx(np.exp(-0.7j))
    assert up[-1] == pytest.approx(np.exp(1.3j))


def test_dissipative_basis_rows_of_absorbing_states_vanish(default_params):
    basis = enumerate_dissipative_basis(default_params)
    h = build_hamiltonian(5.0, default_params, basis)
    assert h.shape == (16, 16)
    assert np.all(h[11:] == 0) and np.all(h[:, 11:] == 0)


def test_basis_for_wrong_chain_rejected():
    with pytest.raises(ValueError):
        ChainHamiltonian.build(SystemParams(n_atoms=5), enumerate_coherent_basis(3))


def test_zero_drive_null_space_has_three_dimensions():
    h = build_hamiltonian(0.0, SystemParams(omega0=0.0))
    w = np.linalg.eigvalsh(h)
    assert np.sum(np.abs(w) < 1e-10) >= 3


@given(params_st, st.floats(-400, 400))
@settings(max_examples=150, deadline=None)
def test_hermitian_with_paired_spectrum_and_zero_mode(p, t):
    h = build_hamiltonian(t, p)
    assert np.array_equal(h, h.conj().T)
    w = np.linalg.eigvalsh(h)
    assert np.allclose(w, -w[::-1], atol=1e-10)
    assert np.min(np.abs(w)) < 1e-10
