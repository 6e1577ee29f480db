"""Truncated Fock-space primitives for a single oscillator mode.

States and operators are plain numpy arrays: a ket is a 1-D complex array of
length ``d``, a density operator or any linear operator is a ``(d, d)`` complex
array. Canonical operators are cached and returned read-only.

Quadratures are dimensionless and measured in zero-point units,
``x = c + c^dag`` and ``p = i (c^dag - c)``, so the vacuum has unit variance in
both.

Displacement and squeeze operators are assembled from their normal-ordered
factorisations. Every intermediate sum in a normal-ordered product stops at
``min(m, n)``, so the truncated matrices hold the exact matrix elements of the
infinite-dimensional operators; only columns whose image leaks past the top of
the basis lose unitarity.
"""

from functools import lru_cache
from math import ceil

import numpy as np
import scipy.linalg
from scipy.special import gammaln

from .errors import ConvergenceError, DimensionMismatch, TruncationError

#: Population allowed in the top ``ceil(d/10)`` Fock levels of any state.
TAIL_TOL = 1e-10

#: Accuracy threshold of :func:`expm_oracle`.
EXPM_TOL = 1e-10


def check_dim(dim):
    if int(dim) != dim or dim < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {dim!r}")
    return int(dim)


def tail_width(dim):
    """Number of top Fock levels watched by the truncation check."""
    return ceil(dim / 10)


def _readonly(a):
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def annihilate(dim):
    dim = check_dim(dim)
    return _readonly(np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex))


@lru_cache(maxsize=None)
def create(dim):
    return _readonly(annihilate(dim).conj().T.copy())


@lru_cache(maxsize=None)
def number(dim):
    dim = check_dim(dim)
    return _readonly(np.diag(np.arange(dim, dtype=float)).astype(complex))


@lru_cache(maxsize=None)
def identity(dim):
    return _readonly(np.eye(check_dim(dim), dtype=complex))


@lru_cache(maxsize=None)
def position_quadrature(dim):
    """``x = c + c^dag``; its vacuum variance is 1."""
    return _readonly(annihilate(dim) + create(dim))


@lru_cache(maxsize=None)
def momentum_quadrature(dim):
    """``p = i (c^dag - c)``."""
    return _readonly(1j * (create(dim) - annihilate(dim)))


def basis(n, dim):
    v = np.zeros(check_dim(dim), dtype=complex)
    v[n] = 1.0
    return v


def _raising_exponential(t, dim):
    """Matrix of ``exp(t c^dag)`` in the truncated basis (exact, lower triangular)."""
    m, k = np.indices((dim, dim))
    j = m - k
    out = np.zeros((dim, dim), dtype=complex)
    if t == 0:
        out[j == 0] = 1.0
        return out
    low = j >= 0
    mm, kk, jj = m[low], k[low], j[low]
    log_mag = 0.5 * (gammaln(mm + 1) - gammaln(kk + 1)) - gammaln(jj + 1) + jj * np.log(abs(t))
    out[low] = np.exp(log_mag + 1j * jj * np.angle(t))
    return out


def _pair_raising_exponential(t, dim):
    """Matrix of ``exp(t c^dag^2)`` in the truncated basis (exact, lower triangular)."""
    m, k = np.indices((dim, dim))
    diff = m - k
    out = np.zeros((dim, dim), dtype=complex)
    if t == 0:
        out[diff == 0] = 1.0
        return out
    sel = (diff >= 0) & (diff % 2 == 0)
    mm, kk = m[sel], k[sel]
    jj = (mm - kk) // 2
    log_mag = 0.5 * (gammaln(mm + 1) - gammaln(kk + 1)) - gammaln(jj + 1) + jj * np.log(abs(t))
    out[sel] = np.exp(log_mag + 1j * jj * np.angle(t))
    return out


def state_tail(populations):
    """Population in the top ``ceil(d/10)`` levels plus any norm lost off the top."""
    populations = np.asarray(populations, dtype=float)
    w = tail_width(populations.size)
    return float(populations[-w:].sum())


def check_tail(populations, what="state", tail_tol=TAIL_TOL, lost=0.0):
    tail = state_tail(populations) + max(lost, 0.0)
    if tail > tail_tol:
        raise TruncationError(
            f"{what} has population {tail:.3e} in the top {tail_width(len(populations))} "
            f"of {len(populations)} Fock levels (tolerance {tail_tol:.0e}); increase dim"
        )


def displacement(alpha, dim, tail_tol=TAIL_TOL):
    """Displacement operator ``D(alpha) = exp(alpha c^dag - alpha* c)``.

    Built as ``exp(-|alpha|^2/2) exp(alpha c^dag) exp(-alpha* c)``, which gives
    exact matrix elements. Raises :class:`TruncationError` when the displaced
    vacuum does not fit in the basis.
    """
    dim = check_dim(dim)
    alpha = complex(alpha)
    up = _raising_exponential(alpha, dim)
    down = _raising_exponential(-alpha.conjugate(), dim).T
    out = np.exp(-0.5 * abs(alpha) ** 2) * (up @ down)
    if tail_tol is not None:
        col = np.abs(out[:, 0]) ** 2
        check_tail(col, f"displaced vacuum (alpha={alpha:.4g})", tail_tol, lost=1.0 - col.sum())
    return out


def squeeze(r, phi, dim, tail_tol=TAIL_TOL):
    """Squeeze operator ``S = exp(0.5 (xi* c^2 - xi c^dag^2))`` with ``xi = r e^{i phi}``.

    For ``phi = 0`` and ``r > 0`` the x-quadrature is squeezed to variance
    ``exp(-2r)``; ``phi = pi`` squeezes p instead.
    """
    dim = check_dim(dim)
    t = np.tanh(r)
    left = _pair_raising_exponential(-0.5 * np.exp(1j * phi) * t, dim)
    right = _pair_raising_exponential(0.5 * np.exp(-1j * phi) * t, dim).T
    middle = np.cosh(r) ** -(np.arange(dim) + 0.5)
    out = (left * middle) @ right
    if tail_tol is not None:
        col = np.abs(out[:, 0]) ** 2
        check_tail(col, f"squeezed vacuum (r={r:.4g})", tail_tol, lost=1.0 - col.sum())
    return out


def interior_size(op, tail_tol=TAIL_TOL):
    """Number of leading basis levels that ``op`` maps without leakage.

    ``op`` must hold exact matrix elements of an operator that is unitary in
    infinite dimension (as produced by :func:`displacement`, :func:`squeeze`).
    Column ``n`` is interior when its image keeps its norm and stays out of the
    top ``ceil(d/10)`` levels, to within ``tail_tol``.
    """
    op = np.asarray(op)
    pops = np.abs(op) ** 2
    w = tail_width(op.shape[0])
    leak = pops[-w:].sum(axis=0) + np.abs(1.0 - pops.sum(axis=0))
    bad = np.flatnonzero(leak > tail_tol)
    return int(bad[0]) if bad.size else op.shape[1]


def is_hermitian(a, atol=1e-12):
    a = np.asarray(a)
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    return np.allclose(a, a.conj().T, rtol=0.0, atol=atol * scale)


def expm_oracle(op):
    """Matrix exponential used as the reference for every closed form.

    Hermitian and anti-Hermitian inputs go through a Hermitian eigendecomposition;
    anything else goes through scipy's scaling-and-squaring Pade routine.
    The result is checked against an internal accuracy estimate and a
    :class:`ConvergenceError` is raised above ``EXPM_TOL``.
    """
    a = np.asarray(op, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expm needs a square matrix, got shape {a.shape}")
    if is_hermitian(a):
        return _expm_eigh(0.5 * (a + a.conj().T), 1.0)
    if is_hermitian(1j * a):
        h = 1j * a
        return _expm_eigh(0.5 * (h + h.conj().T), -1j)

    out = scipy.linalg.expm(a)
    half = scipy.linalg.expm(0.5 * a)
    err = np.linalg.norm(half @ half - out) / max(1.0, np.linalg.norm(out))
    if not np.isfinite(err) or err > EXPM_TOL:
        raise ConvergenceError(f"expm accuracy estimate {err:.2e} exceeds {EXPM_TOL:.0e}")
    return out


def _expm_eigh(h, factor):
    # exp(factor * h) for Hermitian h
    w, v = np.linalg.eigh(h)
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    resid = np.linalg.norm((v * w) @ v.conj().T - h) / (scale * np.sqrt(h.shape[0]))
    orth = np.linalg.norm(v.conj().T @ v - np.eye(h.shape[0])) / np.sqrt(h.shape[0])
    if max(resid, orth) > EXPM_TOL:
        raise ConvergenceError(f"eigendecomposition residual {max(resid, orth):.2e} exceeds {EXPM_TOL:.0e}")
    return (v * np.exp(factor * w)) @ v.conj().T


def expectation(obs, state):
    """``<psi|obs|psi>`` for a ket or ``Tr(obs rho)`` for a density matrix."""
    obs = np.asarray(obs)
    state = np.asarray(state)
    d = obs.shape[0]
    if obs.shape != (d, d) or state.shape[0] != d:
        raise DimensionMismatch(f"operator {obs.shape} and state {state.shape} differ in dimension")
    if state.ndim == 1:
        return complex(np.vdot(state, obs @ state))
    if state.shape != (d, d):
        raise DimensionMismatch(f"operator {obs.shape} and state {state.shape} differ in dimension")
    return complex(np.einsum("ij,ji->", obs, state))


def expect_real(obs, state):
    return expectation(obs, state).real


def is_pure(state):
    return np.ndim(state) == 1


def to_density(state):
    state = np.asarray(state, dtype=complex)
    return np.outer(state, state.conj()) if state.ndim == 1 else state


def populations(state):
    state = np.asarray(state)
    if state.ndim == 1:
        return np.abs(state) ** 2
    return np.real(np.diagonal(state)).copy()


def fidelity_with_ket(state, ket):
    """``<ket|rho|ket>`` (or ``|<ket|psi>|^2``) for a normalized ``ket``."""
    return expect_real(np.outer(ket, np.conj(ket)), state)


def check_ket(v, atol=1e-12):
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1:
        raise DimensionMismatch(f"ket must be 1-D, got shape {v.shape}")
    if abs(np.vdot(v, v).real - 1.0) > atol:
        raise ValueError(f"ket is not normalized (norm^2 = {np.vdot(v, v).real!r})")
    return v


def check_density(rho, atol=1e-12):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatch(f"density matrix must be square, got shape {rho.shape}")
    if not is_hermitian(rho, atol):
        raise ValueError("density matrix is not Hermitian")
    if np.linalg.eigvalsh(rho).min() < -atol:
        raise ValueError("density matrix has a negative eigenvalue")
    tr = np.trace(rho).real
    if tr < -atol or tr > 1 + atol:
        raise ValueError(f"density matrix trace {tr!r} outside [0, 1]")
    return rho
