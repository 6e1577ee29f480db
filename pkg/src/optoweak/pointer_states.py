"""Initial mirror ("pointer") states.

A pointer is described declaratively by one of the small frozen dataclasses
below and materialised with :func:`make_pointer`. Pure variants come back as
kets, mixed variants as density matrices.
"""

from dataclasses import dataclass
from math import ceil, exp, isfinite, log, sqrt
from typing import NamedTuple, Union

import numpy as np
from scipy import constants

from . import hilbert
from .errors import TruncationError

#: Largest dimension chosen automatically; explicit dimensions may exceed it.
AUTO_DIM_BUDGET = 512


@dataclass(frozen=True)
class Ground:
    pass


@dataclass(frozen=True)
class Coherent:
    alpha: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))


@dataclass(frozen=True)
class Squeezed:
    """Squeezed vacuum ``S(r e^{i phi})|0>``; ``phi = pi`` stretches the x quadrature."""

    r: float
    phi: float = 0.0


@dataclass(frozen=True)
class CoherentSqueezed:
    alpha: complex
    r: float
    phi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))


@dataclass(frozen=True)
class Thermal:
    """Thermal state with Boltzmann factor ``z = exp(-hbar w_m / k_B T)``."""

    z: float

    def __post_init__(self):
        if not (0.0 <= self.z < 1.0):
            raise ValueError(f"thermal z must lie in [0, 1), got {self.z!r}")


@dataclass(frozen=True)
class FockMixture:
    """Diagonal mixture ``sum_n w_n |n><n|``."""

    weights: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if not w or any(x < 0 or not isfinite(x) for x in w):
            raise ValueError("Fock mixture weights must be a nonempty list of nonnegative numbers")
        if abs(sum(w) - 1.0) > 1e-12:
            raise ValueError(f"Fock mixture weights sum to {sum(w)!r}, not 1")
        object.__setattr__(self, "weights", w)


PointerSpec = Union[Ground, Coherent, Squeezed, CoherentSqueezed, Thermal, FockMixture]

PURE_POINTERS = (Ground, Coherent, Squeezed, CoherentSqueezed)


def describe(spec):
    """Short label used in reports, e.g. ``thermal(z=0.5)``."""
    if isinstance(spec, Ground):
        return "ground"
    if isinstance(spec, Coherent):
        return f"coherent(alpha={_fmt_complex(spec.alpha)})"
    if isinstance(spec, Squeezed):
        return f"squeezed(r={spec.r:g};phi={spec.phi:g})"
    if isinstance(spec, CoherentSqueezed):
        return f"coherent_squeezed(alpha={_fmt_complex(spec.alpha)};r={spec.r:g};phi={spec.phi:g})"
    if isinstance(spec, Thermal):
        return f"thermal(z={spec.z:.12g})"
    if isinstance(spec, FockMixture):
        return "fock_mixture(" + ";".join(f"{w:g}" for w in spec.weights) + ")"
    raise TypeError(f"not a pointer spec: {spec!r}")


def _fmt_complex(a):
    return f"{a.real:g}{a.imag:+g}j"


def _squeezed_x_variance(r, phi):
    # x variance of S(r e^{i phi})|0>; displacement leaves it unchanged
    return np.cosh(2 * r) - np.sinh(2 * r) * np.cos(phi)


def pointer_spread(spec):
    """Standard deviation of ``x`` in the pointer state, in zero-point units.

    This is the cap on the conditioned mean displacement: 1 for ground and
    coherent pointers, ``exp(r)`` for a squeezed pointer stretched along x,
    ``sqrt((1+z)/(1-z))`` for a thermal pointer.
    """
    if isinstance(spec, (Ground, Coherent)):
        return 1.0
    if isinstance(spec, (Squeezed, CoherentSqueezed)):
        return float(sqrt(_squeezed_x_variance(spec.r, spec.phi)))
    if isinstance(spec, Thermal):
        return sqrt((1.0 + spec.z) / (1.0 - spec.z))
    if isinstance(spec, FockMixture):
        return sqrt(sum(w * (2 * n + 1) for n, w in enumerate(spec.weights)))
    raise TypeError(f"not a pointer spec: {spec!r}")


def _min_dim_for_tail(tail_from, start=2):
    """Smallest ``d`` whose watched top levels carry less than ``TAIL_TOL``.

    ``tail_from(k)`` returns the untruncated population in levels ``>= k``.
    """
    d = max(start, 2)
    while tail_from(d - hilbert.tail_width(d)) >= hilbert.TAIL_TOL:
        d += 1
    return d


def _thermal_dim(z):
    if z == 0.0:
        return 2
    # tail from level k is z**k; also keep the discarded mass z**d/(1-z) small
    k = ceil(log(hilbert.TAIL_TOL) / log(z))
    d_discard = ceil((log(hilbert.TAIL_TOL) + log(1.0 - z)) / log(z))
    d = max(k + ceil(k / 9) - 1, d_discard, 2)
    while d - hilbert.tail_width(d) < k:
        d += 1
    while d > 2 and d - 1 >= d_discard and (d - 1) - hilbert.tail_width(d - 1) >= k:
        d -= 1
    return d


def _pure_amplitudes(spec, dim):
    if isinstance(spec, Ground):
        return hilbert.basis(0, dim)
    if isinstance(spec, Coherent):
        return hilbert.displacement(spec.alpha, dim, tail_tol=None)[:, 0]
    if isinstance(spec, Squeezed):
        return hilbert.squeeze(spec.r, spec.phi, dim, tail_tol=None)[:, 0]
    if isinstance(spec, CoherentSqueezed):
        # build with headroom so the truncated product D @ S|0> is accurate
        big = 2 * dim
        sq = hilbert.squeeze(spec.r, spec.phi, big, tail_tol=None)[:, 0]
        return (hilbert.displacement(spec.alpha, big, tail_tol=None) @ sq)[:dim]
    raise TypeError(f"not a pure pointer spec: {spec!r}")


def required_dim(spec, headroom=0, budget=AUTO_DIM_BUDGET):
    """Smallest dimension that holds ``spec`` under the truncation rule, plus ``headroom``.

    Raises :class:`TruncationError` naming the required dimension when it
    exceeds ``budget``.
    """
    if isinstance(spec, Ground):
        d = 2
    elif isinstance(spec, Thermal):
        d = _thermal_dim(spec.z)
    elif isinstance(spec, FockMixture):
        top = max(n for n, w in enumerate(spec.weights) if w > 0)
        d = _min_dim_for_tail(lambda k: 1.0 if k <= top else 0.0)
    else:
        d = None
        trial = 32
        while trial <= 4 * budget:
            pops = np.abs(_pure_amplitudes(spec, trial)) ** 2
            cum = np.concatenate([[0.0], np.cumsum(pops)])
            total = max(cum[-1], 1.0)
            # only trust the search below the watched band of the trial space
            limit = trial - hilbert.tail_width(trial)
            if total - cum[limit] < hilbert.TAIL_TOL:
                d = _min_dim_for_tail(lambda k: total - cum[min(k, trial)])
                break
            trial *= 2
        if d is None:
            raise TruncationError(
                f"{describe(spec)} needs more than {4 * budget} Fock levels", required_dim=4 * budget
            )
    d += int(headroom)
    if d > budget:
        raise TruncationError(
            f"{describe(spec)} requires dim >= {d}, above the auto-sizing budget of {budget}; "
            "set dim explicitly to override",
            required_dim=d,
        )
    return d


def displacement_headroom(kappa):
    """Extra levels reserved for the photon-induced displacement of the mirror."""
    return ceil(10 + 20 * kappa ** 2)


def auto_dim(spec, kappa=0.0, budget=AUTO_DIM_BUDGET):
    return required_dim(spec, headroom=displacement_headroom(kappa), budget=budget)


def make_pointer(spec, dim=None):
    """Return the pointer state as a normalized ket or density matrix.

    With ``dim=None`` the smallest adequate dimension is used. An explicit
    ``dim`` that cannot hold the state raises :class:`TruncationError`.
    """
    if dim is None:
        dim = required_dim(spec)
    dim = hilbert.check_dim(dim)

    if isinstance(spec, PURE_POINTERS):
        psi = np.array(_pure_amplitudes(spec, dim), dtype=complex)
        pops = np.abs(psi) ** 2
        _guard_tail(spec, pops, dim, lost=1.0 - pops.sum())
        return psi / np.linalg.norm(psi)

    if isinstance(spec, Thermal):
        diag = (1.0 - spec.z) * spec.z ** np.arange(dim, dtype=float)
    elif isinstance(spec, FockMixture):
        if len(spec.weights) > dim:
            lost = sum(spec.weights[dim:])
            if lost > 0:
                raise TruncationError(
                    f"{describe(spec)} has weight beyond level {dim - 1}",
                    required_dim=required_dim(spec, budget=10 ** 9),
                )
        diag = np.zeros(dim)
        diag[: len(spec.weights)] = spec.weights[:dim]
    else:
        raise TypeError(f"not a pointer spec: {spec!r}")
    diag = diag / diag.sum()
    _guard_tail(spec, diag, dim)
    return np.diag(diag).astype(complex)


def _guard_tail(spec, pops, dim, lost=0.0):
    try:
        hilbert.check_tail(pops, describe(spec), lost=lost)
    except TruncationError as exc:
        need = required_dim(spec, budget=10 ** 9)
        raise TruncationError(f"{exc}; requires dim >= {need}", required_dim=need) from None


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory parameters in SI units."""

    omega_m: float  # mechanical angular frequency, rad/s
    mass: float  # kg
    temperature: float  # K
    omega_0: float  # optical angular frequency, rad/s
    cavity_length: float  # m

    def __post_init__(self):
        for name in ("omega_m", "mass", "temperature", "omega_0", "cavity_length"):
            value = getattr(self, name)
            if not (value > 0 and isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")


class Dimensionless(NamedTuple):
    kappa: float
    z: float


def zero_point_fluctuation(omega_m, mass):
    """``sqrt(hbar / (2 m w_m))`` in metres."""
    return sqrt(constants.hbar / (2.0 * mass * omega_m))


def dimensionless_from_physical(p):
    """Convert lab parameters to the coupling ``kappa = g / w_m`` and Boltzmann factor ``z``.

    ``g = (w_0 / L) * sqrt(hbar / 2 m w_m)`` is the single-photon coupling rate.
    """
    g = p.omega_0 / p.cavity_length * zero_point_fluctuation(p.omega_m, p.mass)
    z = exp(-constants.hbar * p.omega_m / (constants.k * p.temperature))
    return Dimensionless(kappa=g / p.omega_m, z=z)
