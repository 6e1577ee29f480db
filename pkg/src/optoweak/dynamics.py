"""Evolution under the single-photon optomechanical Hamiltonian.

In units of ``hbar * omega_m`` and with time measured as the phase
``tau = omega_m t``, the coupled cavity and mirror evolve with

    H = c^dag c - kappa * n_A * (c + c^dag)

where ``n_A`` is the photon number in the optomechanical arm. The optical
``omega_0 a^dag a`` term is dropped: both interferometer arms pick up the same
``exp(-i n omega_0 t)``, which cancels in every post-selected quantity. Lab
phases therefore differ from the ones reported here by that common factor.

For ``n_A = n`` the mirror propagator has the closed form

    U_n(tau) = exp(i n^2 kappa^2 (tau - sin tau)) D(n kappa (1 - e^{-i tau})) exp(-i tau c^dag c)

The scalar prefactor is the Kerr phase. :func:`oracle_propagator` builds the
same evolution by diagonalising ``H`` on the joint space so the closed form
can be checked against it.
"""

from dataclasses import dataclass
from math import isfinite

import numpy as np

from . import hilbert
from .errors import ConvergenceError


@dataclass(frozen=True)
class CouplingParams:
    """Coupling ``kappa = g / omega_m``, Kerr switch, and evolution phase ``tau = omega_m t``."""

    kappa: float
    kerr: bool = True
    tau: float = 0.0

    def __post_init__(self):
        if not (self.kappa >= 0 and isfinite(self.kappa)):
            raise ValueError(f"kappa must be finite and >= 0, got {self.kappa!r}")
        if not isfinite(self.tau):
            raise ValueError(f"tau must be finite, got {self.tau!r}")

    def at(self, tau):
        return CouplingParams(self.kappa, self.kerr, float(tau))


def kerr_phase(n_photon, kappa, tau):
    return n_photon ** 2 * kappa ** 2 * (tau - np.sin(tau))


def displacement_amplitude(n_photon, kappa, tau):
    """Coherent amplitude ``n kappa (1 - e^{-i tau})`` imprinted on the mirror."""
    return n_photon * kappa * (1.0 - np.exp(-1j * tau))


def free_phases(tau, dim):
    """Diagonal of ``exp(-i tau c^dag c)``."""
    return np.exp(-1j * tau * np.arange(dim))


def photon_kick(p, dim):
    """``U_1(tau) U_0(tau)^dag``: Kerr phase times the displacement, without the free rotation."""
    out = hilbert.displacement(displacement_amplitude(1, p.kappa, p.tau), dim)
    if p.kerr:
        out = np.exp(1j * kerr_phase(1, p.kappa, p.tau)) * out
    return out


def branch_unitary(n_photon, p, dim):
    """Mirror propagator conditional on ``n_photon`` photons (0 or 1) in the coupled arm.

    With ``p.kerr`` false the Kerr scalar is left out; ``U_0`` is the free
    rotation in every case.
    """
    dim = hilbert.check_dim(dim)
    rot = free_phases(p.tau, dim)
    if n_photon == 0:
        return np.diag(rot)
    if n_photon != 1:
        raise ValueError(f"n_photon must be 0 or 1, got {n_photon!r}")
    return photon_kick(p, dim) * rot


def full_hamiltonian(p, dim):
    """``H / (hbar omega_m)`` on (arm-A occupation 0/1) x (mirror, ``dim`` levels).

    The arm register is the slow index: rows ``0..dim-1`` are the photon-in-B
    block, rows ``dim..2*dim-1`` the photon-in-A block.
    """
    dim = hilbert.check_dim(dim)
    n_a = np.diag([0.0, 1.0])
    return np.kron(np.eye(2), hilbert.number(dim)) - p.kappa * np.kron(n_a, hilbert.position_quadrature(dim))


def oracle_propagator(p, dim):
    """``exp(-i H tau)`` from a dense eigendecomposition of :func:`full_hamiltonian`."""
    h = full_hamiltonian(p, dim)
    return hilbert.expm_oracle(-1j * p.tau * h)


def branch_block(u, n_photon):
    """Extract the mirror block of a joint propagator for photon number ``n_photon``."""
    dim = u.shape[0] // 2
    s = slice(n_photon * dim, (n_photon + 1) * dim)
    return u[s, s]


def oracle_evolve(p, joint_state):
    """Evolve a joint (photon register x mirror) ket or density matrix by the oracle.

    Raises :class:`ConvergenceError` if the norm drifts by more than 1e-10 and
    :class:`TruncationError` if either mirror block leaks into the top levels.
    """
    joint_state = np.asarray(joint_state, dtype=complex)
    dim = joint_state.shape[0] // 2
    u = oracle_propagator(p, dim)
    if joint_state.ndim == 1:
        out = u @ joint_state
        before, after = np.vdot(joint_state, joint_state).real, np.vdot(out, out).real
        blocks = [np.abs(out[:dim]) ** 2, np.abs(out[dim:]) ** 2]
    else:
        out = u @ joint_state @ u.conj().T
        before, after = np.trace(joint_state).real, np.trace(out).real
        diag = np.real(np.diagonal(out))
        blocks = [diag[:dim], diag[dim:]]
    if abs(after - before) > 1e-10:
        raise ConvergenceError(f"oracle evolution changed the norm by {after - before:.2e}")
    for n, pops in enumerate(blocks):
        if pops.sum() > 0:
            hilbert.check_tail(pops / pops.sum(), f"oracle-evolved mirror (photon branch {n})")
    return out


def interior_levels(kappa, dim):
    """Leading levels that stay clear of the basis edge along a whole photon orbit.

    The orbit reaches its largest displacement ``2 kappa`` at ``tau = pi``; the
    truncated Hamiltonian and the closed form agree on these levels.
    """
    return hilbert.interior_size(hilbert.displacement(2 * kappa, dim, tail_tol=None))


def aligned_distance(a, b):
    """Spectral-norm distance after removing the relative phase fixed by element (0, 0)."""
    phase = b[0, 0] / a[0, 0]
    phase /= abs(phase)
    return float(np.linalg.norm(a * phase - b, 2))
