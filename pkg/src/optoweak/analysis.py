"""Parameter scans over the post-selection protocol.

For one evolution phase ``tau`` the conditioned state is a bilinear form in
the selection weights ``(a, b)`` of the Kraus operator
``M = a U_1 + b U_0``::

    M rho M^dag = |a|^2 K11 + |b|^2 K00 + a b* K10 + a* b K01,
    Kij = U_i rho U_j^dag

so every reported trace (probability, <x>, <p>, Fock populations, tail mass)
follows from a 2x2 table per observable. The tables are built once per
``tau`` and the whole (theta, phi) sheet is evaluated by broadcasting. This
is the same arithmetic as :func:`optoweak.protocol.condition`, reorganised.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import hilbert
from .dynamics import CouplingParams, free_phases, photon_kick
from .errors import EmptyScan, TruncationError
from .pointer_states import auto_dim, make_pointer, pointer_spread
from .protocol import P_FLOOR, PathState, selection_coefficients

QUANTITIES = ("probability", "x", "p", "pop0", "pop1", "tail")

REFINE_POINTS = 9
REFINE_SHRINK = 4.0


@dataclass(frozen=True)
class ScanGrid:
    tau_values: tuple
    theta_values: tuple
    phi_values: tuple

    def __post_init__(self):
        for name in ("tau_values", "theta_values", "phi_values"):
            values = np.asarray(getattr(self, name), dtype=float).ravel()
            if values.size == 0:
                raise ValueError(f"{name} is empty")
            if not np.all(np.isfinite(values)):
                raise ValueError(f"{name} has non-finite entries")
            if np.any(np.diff(values) < 0):
                raise ValueError(f"{name} is not sorted ascending")
            object.__setattr__(self, name, tuple(values.tolist()))
        if min(self.theta_values) < 0 or max(self.theta_values) > np.pi / 2:
            raise ValueError("theta values must lie in [0, pi/2]")
        if min(self.phi_values) < 0 or max(self.phi_values) >= 2 * np.pi:
            raise ValueError("phi values must lie in [0, 2 pi)")

    @property
    def shape(self):
        return len(self.tau_values), len(self.theta_values), len(self.phi_values)


def default_tau_max(kappa):
    return max(4 * np.pi, 3.0 / kappa) if kappa > 0 else 4 * np.pi


def default_grid(kappa, tau_points=600, theta_points=41, phi_points=81, tau_max=None):
    """Grid centred on the balanced dark port, where the amplification lives."""
    if tau_max is None:
        tau_max = default_tau_max(kappa)
    return ScanGrid(
        tuple(np.linspace(0.0, tau_max, tau_points)),
        tuple(np.linspace(np.pi / 4 - 0.3, np.pi / 4 + 0.3, theta_points)),
        tuple(np.linspace(np.pi - 0.6, np.pi + 0.6, phi_points)),
    )


@dataclass(frozen=True)
class ScanRecords:
    """Column store of evaluated grid points, in evaluation order."""

    tau: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    probability: np.ndarray
    mean_x: np.ndarray
    mean_p: np.ndarray
    pop0: np.ndarray
    pop1: np.ndarray

    COLUMNS = ("tau", "theta", "phi", "probability", "mean_x", "mean_p", "pop0", "pop1")

    def __len__(self):
        return len(self.tau)

    def rows(self):
        return zip(*(getattr(self, c).tolist() for c in self.COLUMNS))

    @classmethod
    def empty(cls):
        return cls(*(np.empty(0) for _ in cls.COLUMNS))

    @classmethod
    def concat(cls, parts):
        parts = list(parts)
        if not parts:
            return cls.empty()
        return cls(*(np.concatenate([getattr(p, c) for p in parts]) for c in cls.COLUMNS))


@dataclass(frozen=True)
class ScanReport:
    max_abs_x: float
    argmax: tuple
    probability_at_max: float
    cap: float
    records: ScanRecords


def _observable_stack(dim):
    w = hilbert.tail_width(dim)
    pop0 = np.zeros((dim, dim))
    pop0[0, 0] = 1.0
    pop1 = np.zeros((dim, dim))
    pop1[1, 1] = 1.0
    tail = np.diag((np.arange(dim) >= dim - w).astype(float))
    return np.stack(
        [
            hilbert.identity(dim),
            hilbert.position_quadrature(dim),
            hilbert.momentum_quadrature(dim),
            pop0,
            pop1,
            tail,
        ]
    ).astype(complex)


def branch_tables(rho, kappa, kerr, tau, obs=None):
    """Per-observable 2x2 tables ``T[q, i, j] = Tr(O_q U_i rho U_j^dag)``.

    Index 1 is the photon-in-A branch, index 0 the free branch. Raises
    :class:`TruncationError` when the photon-in-A branch leaks into the top
    of the basis.
    """
    d = rho.shape[0]
    if obs is None:
        obs = _observable_stack(d)
    rot = free_phases(tau, d)
    rho_r = rot[:, None] * rho * rot.conj()[None, :]
    kick = photon_kick(CouplingParams(kappa, kerr, tau), d)
    w = kick @ rho_r
    k11 = w @ kick.conj().T
    t = np.empty((len(obs), 2, 2), dtype=complex)
    t[:, 0, 0] = np.einsum("qij,ji->q", obs, rho_r)
    t[:, 1, 1] = np.einsum("qij,ji->q", obs, k11)
    t[:, 1, 0] = np.einsum("qij,ji->q", obs, w)
    t[:, 0, 1] = t[:, 1, 0].conj()
    norm = t[0, 1, 1].real
    if norm > 0 and t[5, 1, 1].real / norm > hilbert.TAIL_TOL:
        raise TruncationError(
            f"mirror state in the coupled arm leaks into the top {hilbert.tail_width(d)} of {d} levels "
            f"at tau={tau:.6g}; increase dim"
        )
    return t


def _combine(t, a, b):
    """``|a|^2 T11 + |b|^2 T00 + 2 Re(a b* T10)`` for every observable, broadcast over ``a, b``."""
    aa = np.abs(a) ** 2
    bb = np.abs(b) ** 2
    ab = a * np.conj(b)
    return np.stack(
        [aa * t[q, 1, 1].real + bb * t[q, 0, 0].real + 2.0 * (ab * t[q, 1, 0]).real for q in range(t.shape[0])]
    )


def _evaluate(rho, path, kappa, kerr, taus, thetas, phis, threads):
    """Raw bilinear sums on a (tau, theta, phi) block; shape ``(len(QUANTITIES), nt, nth, nph)``."""
    obs = _observable_stack(rho.shape[0])
    th, ph = np.meshgrid(np.asarray(thetas), np.asarray(phis), indexing="ij")
    a, b = selection_coefficients(path, th, ph)

    def one(tau):
        return _combine(branch_tables(rho, kappa, kerr, tau, obs), a, b)

    if threads > 1 and len(taus) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sheets = list(pool.map(one, taus))
    else:
        sheets = [one(t) for t in taus]
    return np.stack(sheets, axis=1)


def _records_from_block(raw, taus, thetas, phis):
    T, TH, PH = np.meshgrid(np.asarray(taus), np.asarray(thetas), np.asarray(phis), indexing="ij")
    prob = raw[0].ravel()
    keep = prob >= P_FLOOR
    prob = prob[keep]
    parts = [r.ravel()[keep] / prob for r in raw[1:]]
    tail = parts[4]
    if tail.size and tail.max() > hilbert.TAIL_TOL:
        i = int(np.argmax(tail))
        raise TruncationError(
            f"conditioned mirror state leaks {tail[i]:.3e} into the top levels at "
            f"tau={T.ravel()[keep][i]:.6g}; increase dim"
        )
    return ScanRecords(
        tau=T.ravel()[keep],
        theta=TH.ravel()[keep],
        phi=PH.ravel()[keep],
        probability=prob,
        mean_x=parts[0],
        mean_p=parts[1],
        pop0=parts[2],
        pop1=parts[3],
    )


def _local_axis(values, centre, half_width, lo, hi):
    if half_width <= 0 or len(values) < 2:
        return (centre,)
    pts = np.clip(np.linspace(centre - half_width, centre + half_width, REFINE_POINTS), lo, hi)
    return tuple(np.unique(pts))


def _axis_step(values):
    values = np.asarray(values)
    return float(np.max(np.diff(values))) if values.size > 1 else 0.0


def _pointer_density(pointer, kappa, dim):
    if isinstance(pointer, np.ndarray):
        return hilbert.to_density(pointer)
    if dim is None:
        dim = auto_dim(pointer, kappa)
    return hilbert.to_density(make_pointer(pointer, dim))


def amplification_scan(
    pointer, kappa, kerr=True, grid=None, dim=None, path=None, refine_rounds=3, threads=1, cap=None
):
    """Largest conditioned ``|<x>|`` over a grid of ``(tau, theta, phi)``.

    The base grid is followed by ``refine_rounds`` local grids around the best
    point found so far, each spanning one previous step on either side and
    shrinking by a factor 4. Points whose click probability is below
    ``P_FLOOR`` are skipped; :class:`EmptyScan` is raised if nothing is left.

    Parameters
    ----------
    pointer : PointerSpec or ndarray
        Initial mirror state. A spec is materialised at ``dim`` (automatic if
        None).
    kappa : float
        Single-photon coupling in units of the mechanical frequency.
    kerr : bool
        Keep the Kerr phase of the photon branch.
    grid : ScanGrid, optional
        Defaults to :func:`default_grid`.
    threads : int
        Worker threads over ``tau``. Results do not depend on it.
    """
    path = PathState.balanced() if path is None else path
    grid = default_grid(kappa) if grid is None else grid
    rho = _pointer_density(pointer, kappa, dim)
    if cap is None:
        cap = pointer_spread(pointer) if not isinstance(pointer, np.ndarray) else float("nan")

    def block(taus, thetas, phis):
        raw = _evaluate(rho, path, kappa, kerr, taus, thetas, phis, threads)
        return _records_from_block(raw, taus, thetas, phis)

    parts = [block(grid.tau_values, grid.theta_values, grid.phi_values)]
    if len(parts[0]) == 0:
        raise EmptyScan(f"every grid point is dark (kappa={kappa})")

    steps = [_axis_step(grid.tau_values), _axis_step(grid.theta_values), _axis_step(grid.phi_values)]
    best = parts[0]
    i = int(np.argmax(np.abs(best.mean_x)))
    centre = (best.tau[i], best.theta[i], best.phi[i])
    best_val = abs(best.mean_x[i])
    for _ in range(refine_rounds):
        taus = _local_axis(grid.tau_values, centre[0], steps[0], 0.0, np.inf)
        thetas = _local_axis(grid.theta_values, centre[1], steps[1], 0.0, np.pi / 2)
        phis = _local_axis(grid.phi_values, centre[2], steps[2], 0.0, np.nextafter(2 * np.pi, 0))
        part = block(taus, thetas, phis)
        parts.append(part)
        if len(part):
            j = int(np.argmax(np.abs(part.mean_x)))
            if abs(part.mean_x[j]) > best_val:
                best_val = abs(part.mean_x[j])
                centre = (part.tau[j], part.theta[j], part.phi[j])
        steps = [s / REFINE_SHRINK for s in steps]

    records = ScanRecords.concat(parts)
    k = int(np.argmax(np.abs(records.mean_x)))
    return ScanReport(
        max_abs_x=float(abs(records.mean_x[k])),
        argmax=(float(records.tau[k]), float(records.theta[k]), float(records.phi[k])),
        probability_at_max=float(records.probability[k]),
        cap=float(cap),
        records=records,
    )


def unconditioned_trajectory(pointer, p, taus, dim=None):
    """Mean mirror position ``<x>(tau)`` with the photon in the coupled arm, no post-selection."""
    rho = _pointer_density(pointer, p.kappa, dim)
    obs = _observable_stack(rho.shape[0])[:2]
    out = []
    for tau in taus:
        t = _branch_tables_plain(rho, p, tau, obs)
        out.append((float(tau), float(t[1].real / t[0].real)))
    return out


def _branch_tables_plain(rho, p, tau, obs):
    d = rho.shape[0]
    rot = free_phases(tau, d)
    rho_r = rot[:, None] * rho * rot.conj()[None, :]
    kick = photon_kick(p.at(tau), d)
    k11 = kick @ rho_r @ kick.conj().T
    pops = np.real(np.diagonal(k11))
    hilbert.check_tail(pops / pops.sum(), f"mirror state at tau={tau:.6g}")
    return np.einsum("qij,ji->q", obs, k11)


class KerrContrast(NamedTuple):
    with_kerr: ScanReport
    without_kerr: ScanReport


def kerr_contrast(pointer, kappa, taus, dim=None, taus_without_kerr=None, refine_rounds=3, threads=1):
    """Scans over ``tau`` at the exact dark port of the balanced input, Kerr on and off.

    Without the Kerr phase the dark-port state is built from the displacement
    alone; with it, the phase can interfere with the displacement amplitude
    and push the conditioned mean up to the pointer spread.
    """
    grid_on = ScanGrid(tuple(taus), (np.pi / 4,), (np.pi,))
    off = taus if taus_without_kerr is None else taus_without_kerr
    grid_off = ScanGrid(tuple(off), (np.pi / 4,), (np.pi,))
    common = dict(dim=dim, refine_rounds=refine_rounds, threads=threads)
    return KerrContrast(
        with_kerr=amplification_scan(pointer, kappa, True, grid_on, **common),
        without_kerr=amplification_scan(pointer, kappa, False, grid_off, **common),
    )


def limit_table(specs):
    """Analytic amplification caps, no dynamics."""
    return [(spec, pointer_spread(spec)) for spec in specs]
