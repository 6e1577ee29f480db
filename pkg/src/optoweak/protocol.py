"""Mach-Zehnder post-selection acting on the mirror.

The photon leaves the first beam splitter in the path state
``c_A |A> + c_B |B>``, the mirror evolves with the branch propagator of the
arm the photon is in, and a detector click projects the path onto
``cos(theta) |A> + e^{i phi} sin(theta) |B>``. The net effect on the mirror is
the Kraus operator

    M = cos(theta) c_A U_1(tau) + e^{-i phi} sin(theta) c_B U_0(tau)

For the balanced input the dark port is ``theta = pi/4, phi = pi``.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import hilbert
from .dynamics import branch_unitary, displacement_amplitude, free_phases
from .errors import DarkPortVanished, OrthogonalSelection
from .pointer_states import make_pointer

#: Below this post-selection probability conditioning is refused.
P_FLOOR = 1e-16


@dataclass(frozen=True)
class PathState:
    """Photon amplitudes on the coupled arm A and the reference arm B."""

    c_A: complex
    c_B: complex

    def __post_init__(self):
        object.__setattr__(self, "c_A", complex(self.c_A))
        object.__setattr__(self, "c_B", complex(self.c_B))
        norm = abs(self.c_A) ** 2 + abs(self.c_B) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"path state is not normalized (|c_A|^2 + |c_B|^2 = {norm!r})")

    @classmethod
    def balanced(cls):
        return cls(2 ** -0.5, 2 ** -0.5)

    @property
    def vector(self):
        return np.array([self.c_A, self.c_B])


@dataclass(frozen=True)
class PostSelection:
    """Post-selected path state ``(cos theta, e^{i phi} sin theta)``."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= np.pi / 2):
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta!r}")
        object.__setattr__(self, "phi", float(self.phi) % (2 * np.pi))

    @classmethod
    def dark_port(cls):
        """Output port left dark by the balanced input when the mirror is uncoupled."""
        return cls(np.pi / 4, np.pi)

    @classmethod
    def bright_port(cls):
        return cls(np.pi / 4, 0.0)

    def complement(self):
        """The orthogonal post-selection (the other detector)."""
        return PostSelection(np.pi / 2 - self.theta, self.phi + np.pi)

    @property
    def vector(self):
        return np.array([np.cos(self.theta), np.exp(1j * self.phi) * np.sin(self.theta)])


def selection_coefficients(path, theta, phi):
    """Weights ``(a, b)`` of ``U_1`` and ``U_0`` in the Kraus operator; broadcasts over arrays."""
    theta = np.asarray(theta)
    phi = np.asarray(phi)
    a = np.cos(theta) * path.c_A
    b = np.exp(-1j * phi) * np.sin(theta) * path.c_B
    return a, b


def kraus_operator(path, sel, p, dim):
    a, b = selection_coefficients(path, sel.theta, sel.phi)
    return a * branch_unitary(1, p, dim) + b * branch_unitary(0, p, dim)


@dataclass(frozen=True)
class ConditionedResult:
    probability: float
    state: np.ndarray
    mean_x: float
    mean_p: float
    fock_populations: np.ndarray


def condition(pointer, path, sel, p):
    """Apply the post-selection to a pointer ket or density matrix.

    Raises :class:`DarkPortVanished` when the click probability is below
    ``P_FLOOR`` and :class:`TruncationError` when the conditioned state leaks
    into the top of the basis.
    """
    pointer = np.asarray(pointer, dtype=complex)
    dim = pointer.shape[0]
    m = kraus_operator(path, sel, p, dim)
    if pointer.ndim == 1:
        out = m @ pointer
        prob = float(np.vdot(out, out).real)
    else:
        out = m @ pointer @ m.conj().T
        prob = float(np.trace(out).real)
    if not prob >= P_FLOOR:
        raise DarkPortVanished(prob)
    if pointer.ndim == 1:
        out = out / np.sqrt(prob)
    else:
        out = out / prob
        out = 0.5 * (out + out.conj().T)
    pops = hilbert.populations(out)
    hilbert.check_tail(pops, "conditioned mirror state")
    return ConditionedResult(
        probability=prob,
        state=out,
        mean_x=hilbert.expect_real(hilbert.position_quadrature(dim), out),
        mean_p=hilbert.expect_real(hilbert.momentum_quadrature(dim), out),
        fock_populations=pops,
    )


def weak_value(path, sel):
    """Weak value of the arm-A photon number, ``<sel|n_A|in> / <sel|in>``."""
    f = sel.vector.conj()
    overlap = f[0] * path.c_A + f[1] * path.c_B
    if abs(overlap) < 1e-14:
        raise OrthogonalSelection("post-selection is orthogonal to the input; the weak value is undefined")
    return complex(f[0] * path.c_A / overlap)


class FirstOrderPrediction(NamedTuple):
    pred_x: float
    pred_p: float


def first_order_prediction(a_w, p, pointer, dim=None):
    """Conditioned pointer means to first order in ``kappa``.

    Writing the Kraus operator as ``<sel|in> (1 + a_w (U_1 U_0^dag - 1)) U_0``
    and expanding ``U_1 U_0^dag = 1 + i*Kerr + G`` with
    ``G = beta c^dag - beta* c`` gives, for any quadrature ``O`` of the freely
    rotated pointer ``rho'``,

        <O> = <O>' + 2 Re(a_w Tr[rho' (O - <O>') G])

    The Kerr term drops out at this order. For a ground pointer this reduces
    to ``2 Re(a_w beta)``.
    """
    state = make_pointer(pointer, dim) if not isinstance(pointer, np.ndarray) else pointer
    rho = hilbert.to_density(state)
    d = rho.shape[0]
    rot = free_phases(p.tau, d)
    rho = rot[:, None] * rho * rot.conj()[None, :]
    beta = displacement_amplitude(1, p.kappa, p.tau)
    g = beta * hilbert.create(d) - np.conj(beta) * hilbert.annihilate(d)
    preds = []
    for obs in (hilbert.position_quadrature(d), hilbert.momentum_quadrature(d)):
        mean = hilbert.expect_real(obs, rho)
        centred = obs - mean * np.eye(d)
        shift = 2.0 * (a_w * hilbert.expectation(centred @ g, rho)).real
        preds.append(mean + shift)
    return FirstOrderPrediction(*preds)
