import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optoweak import hilbert
from optoweak.dynamics import (
    CouplingParams,
    aligned_distance,
    branch_block,
    branch_unitary,
    full_hamiltonian,
    interior_levels,
    kerr_phase,
    oracle_evolve,
    oracle_propagator,
)
from optoweak.errors import TruncationError


def test_free_branch_leaves_vacuum():
    for kappa in (0.0, 0.3):
        u0 = branch_unitary(0, CouplingParams(kappa, True, 1.7), 10)
        np.testing.assert_allclose(u0 @ hilbert.basis(0, 10), hilbert.basis(0, 10))


def test_single_photon_maximum_displacement():
    d = 30
    psi = branch_unitary(1, CouplingParams(0.1, True, np.pi), d)[:, 0]
    assert hilbert.expect_real(hilbert.position_quadrature(d), psi) == pytest.approx(0.4, rel=1e-12)


def test_full_period_leaves_only_kerr_phase():
    d, kappa = 30, 0.1
    u = branch_unitary(1, CouplingParams(kappa, True, 2 * np.pi), d)
    np.testing.assert_allclose(u, np.exp(2j * np.pi * kappa ** 2) * np.eye(d), atol=1e-12)
    oracle = branch_block(oracle_propagator(CouplingParams(kappa, True, 2 * np.pi), d), 1)
    m = interior_levels(kappa, d)
    np.testing.assert_allclose(oracle[:m, :m], u[:m, :m], atol=1e-10)


def test_kerr_switch_drops_only_the_scalar():
    p_on, p_off = CouplingParams(0.2, True, 2.3), CouplingParams(0.2, False, 2.3)
    ratio = branch_unitary(1, p_on, 20) / np.where(branch_unitary(1, p_off, 20) == 0, 1, branch_unitary(1, p_off, 20))
    mask = branch_unitary(1, p_off, 20) != 0
    np.testing.assert_allclose(ratio[mask], np.exp(1j * kerr_phase(1, 0.2, 2.3)))


def test_branch_rejects_two_photons():
    with pytest.raises(ValueError):
        branch_unitary(2, CouplingParams(0.1), 10)


def test_branch_truncation_error():
    with pytest.raises(TruncationError):
        branch_unitary(1, CouplingParams(2.0, True, np.pi), 10)


def test_hamiltonian_structure():
    d = 12
    h0 = full_hamiltonian(CouplingParams(0.0), d)
    np.testing.assert_array_equal(h0, np.diag(np.tile(np.arange(d), 2)))
    h = full_hamiltonian(CouplingParams(0.15), d)
    np.testing.assert_array_equal(h, h.conj().T)


@pytest.mark.parametrize("kappa", [0.05, 0.2, 0.5])
def test_coupled_block_ground_energy(kappa):
    d = 60
    h = full_hamiltonian(CouplingParams(kappa), d)
    e0 = np.linalg.eigvalsh(h[d:, d:])[0]
    assert e0 == pytest.approx(-(kappa ** 2), abs=1e-12)


def test_oracle_identity_at_zero_time():
    np.testing.assert_allclose(oracle_propagator(CouplingParams(0.2, True, 0.0), 10), np.eye(20), atol=1e-14)


def test_oracle_evolve_matches_branch():
    d = 30
    p = CouplingParams(0.1, True, np.pi)
    joint = np.zeros(2 * d, dtype=complex)
    joint[d] = 1.0
    out = oracle_evolve(p, joint)[d:]
    ref = branch_unitary(1, p, d)[:, 0]
    assert abs(np.vdot(ref, out)) ** 2 >= 1 - 1e-8


def test_oracle_evolve_block_diagonal():
    d = 24
    p = CouplingParams(0.15, True, 5.0)
    joint = np.zeros(2 * d, dtype=complex)
    joint[0] = joint[d] = 2 ** -0.5
    out = oracle_evolve(p, joint)
    u = oracle_propagator(p, d)
    assert np.abs(u[:d, d:]).max() < 1e-14
    assert np.abs(u[d:, :d]).max() < 1e-14
    np.testing.assert_allclose(out[:d], branch_unitary(0, p, d)[:, 0] / np.sqrt(2), atol=1e-12)
    rho = np.outer(joint, joint.conj())
    np.testing.assert_allclose(oracle_evolve(p, rho), np.outer(out, out.conj()), atol=1e-12)


def test_oracle_evolve_flags_truncation():
    d = 8
    joint = np.zeros(2 * d, dtype=complex)
    joint[d] = 1.0
    with pytest.raises(TruncationError):
        oracle_evolve(CouplingParams(1.0, True, np.pi), joint)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 0.2), st.floats(0.0, 4 * np.pi))
def test_closed_form_matches_oracle(kappa, tau):
    d = 48
    p = CouplingParams(kappa, True, tau)
    m = interior_levels(kappa, d)
    closed = branch_unitary(1, p, d)[:, :m]
    oracle = branch_block(oracle_propagator(p, d), 1)[:, :m]
    assert aligned_distance(closed, oracle) < 1e-8


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(0.0, 8 * np.pi))
def test_branch_unitary_on_interior(kappa, tau):
    d = 48
    u = branch_unitary(1, CouplingParams(kappa, True, tau), d)
    m = hilbert.interior_size(u)
    np.testing.assert_allclose(u[:, :m].conj().T @ u[:, :m], np.eye(m), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 0.3), st.floats(0.0, 4 * np.pi))
def test_unconditioned_mean_formula(kappa, tau):
    d = 30
    psi = branch_unitary(1, CouplingParams(kappa, True, tau), d)[:, 0]
    assert hilbert.expect_real(hilbert.position_quadrature(d), psi) == pytest.approx(
        2 * kappa * (1 - np.cos(tau)), abs=1e-12
    )


@pytest.mark.parametrize("k", [1, 2, 5])
def test_periodic_return(k):
    d = 40
    rng = np.random.default_rng(k)
    psi = np.zeros(d, dtype=complex)
    psi[:6] = rng.normal(size=6) + 1j * rng.normal(size=6)
    psi /= np.linalg.norm(psi)
    out = branch_unitary(1, CouplingParams(0.2, True, 2 * np.pi * k), d) @ psi
    assert abs(np.vdot(psi, out)) ** 2 == pytest.approx(1.0, abs=1e-10)
