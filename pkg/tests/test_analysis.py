import numpy as np
import pytest
from _oracles import ground_supremum
from optoweak import hilbert
from optoweak.analysis import (
    ScanGrid,
    amplification_scan,
    default_grid,
    kerr_contrast,
    limit_table,
    unconditioned_trajectory,
)
from optoweak.dynamics import CouplingParams, kerr_phase
from optoweak.errors import EmptyScan
from optoweak.pointer_states import FockMixture, Ground, Squeezed, Thermal, make_pointer, pointer_spread
from optoweak.protocol import PathState, PostSelection, condition


def small_grid(kappa, tau_points=120, theta_points=21, phi_points=41):
    return default_grid(kappa, tau_points, theta_points, phi_points)


def test_trajectory_examples():
    p = CouplingParams(0.1)
    traj = dict(unconditioned_trajectory(Ground(), p, [np.pi, 2 * np.pi]))
    assert traj[np.pi] == pytest.approx(0.4, rel=1e-12)
    assert traj[2 * np.pi] == pytest.approx(0.0, abs=1e-12)
    assert dict(unconditioned_trajectory(Thermal(0.5), p, [np.pi]))[np.pi] == pytest.approx(0.4, rel=1e-10)


@pytest.mark.parametrize("spec", [Thermal(0.3), FockMixture((0.1, 0.5, 0.0, 0.4)), Thermal(0.7)])
def test_trajectory_independent_of_diagonal_pointer(spec):
    taus = np.linspace(0, 4 * np.pi, 37)
    p = CouplingParams(0.15)
    ref = unconditioned_trajectory(Ground(), p, taus)
    got = unconditioned_trajectory(spec, p, taus)
    np.testing.assert_allclose([m for _, m in got], [m for _, m in ref], atol=1e-10)
    np.testing.assert_allclose([m for _, m in ref], 2 * 0.15 * (1 - np.cos(taus)), atol=1e-12)


def test_scan_records_agree_with_condition():
    kappa = 0.05
    rho = make_pointer(Thermal(0.5), 48)
    grid = ScanGrid((0.9, 3.0, 31.4), (0.6, np.pi / 4, 0.9), (2.9, np.pi, 3.3))
    rep = amplification_scan(rho, kappa, True, grid, refine_rounds=0)
    assert len(rep.records) == 27
    for tau, theta, phi, prob, mx, mp, p0, p1 in rep.records.rows():
        res = condition(rho, PathState.balanced(), PostSelection(theta, phi), CouplingParams(kappa, True, tau))
        assert prob == pytest.approx(res.probability, rel=1e-10)
        assert mx == pytest.approx(res.mean_x, abs=1e-10)
        assert mp == pytest.approx(res.mean_p, abs=1e-10)
        assert (p0, p1) == pytest.approx(tuple(res.fock_populations[:2]), abs=1e-10)


def test_ground_scan_reaches_vacuum_fluctuation():
    kappa = 0.05
    rep = amplification_scan(Ground(), kappa, True, dim=32)
    assert rep.max_abs_x >= 0.9
    assert rep.cap == 1.0
    sup = ground_supremum(kappa)
    # finite coupling lets the conditioned mean overshoot the asymptotic cap by O(kappa)
    assert sup == pytest.approx((1 + kappa) ** 2, rel=1e-4)
    assert rep.max_abs_x <= sup + 1e-9
    assert rep.max_abs_x >= 0.999 * sup
    assert 0 < rep.probability_at_max <= 1


def test_thermal_scan_reaches_thermal_fluctuation():
    rep = amplification_scan(Thermal(0.5), 0.05, True, dim=60)
    assert 0.9 * np.sqrt(3) <= rep.max_abs_x <= np.sqrt(3) * (1 + 1e-3)
    assert np.abs(rep.records.mean_x).max() <= rep.cap * (1 + 1e-3)


def test_squeezed_scan_reaches_antisqueezed_spread():
    spec = Squeezed(1.0, np.pi)
    rep = amplification_scan(spec, 0.02, True, dim=128)
    assert rep.cap == pytest.approx(np.e)
    assert rep.max_abs_x >= 0.9 * np.e


@pytest.mark.parametrize(
    "spec,kappa,dim",
    [(Thermal(0.3), 0.05, 48), (FockMixture((0.5, 0.0, 0.5)), 0.03, 30), (Squeezed(0.5, np.pi), 0.02, 64)],
)
def test_cap_respected_at_every_grid_point(spec, kappa, dim):
    rep = amplification_scan(spec, kappa, True, small_grid(kappa), dim=dim)
    assert np.abs(rep.records.mean_x).max() <= pointer_spread(spec) * (1 + 1e-3)


def test_ground_scan_respects_exact_supremum_everywhere():
    kappa = 0.05
    rep = amplification_scan(Ground(), kappa, True, small_grid(kappa), dim=32)
    assert np.abs(rep.records.mean_x).max() <= ground_supremum(kappa) + 1e-9


def test_refinement_never_lowers_the_maximum():
    kappa = 0.05
    coarse = small_grid(kappa, 40, 9, 17)
    base = amplification_scan(Ground(), kappa, True, coarse, dim=32, refine_rounds=0)
    refined = amplification_scan(Ground(), kappa, True, coarse, dim=32, refine_rounds=3)
    assert refined.max_abs_x >= base.max_abs_x
    finer = ScanGrid(
        tuple(sorted(set(coarse.tau_values) | set(np.linspace(0, 60, 77)))),
        coarse.theta_values,
        coarse.phi_values,
    )
    assert amplification_scan(Ground(), kappa, True, finer, dim=32, refine_rounds=0).max_abs_x >= base.max_abs_x


def test_amplification_costs_probability():
    kappa = 0.05
    rep = amplification_scan(Thermal(0.5), kappa, True, small_grid(kappa), dim=48, refine_rounds=0)
    absx = np.abs(rep.records.mean_x)
    top = absx >= np.quantile(absx, 0.9)
    assert np.median(rep.records.probability[top]) < np.median(rep.records.probability)


def test_threads_do_not_change_results():
    kappa = 0.05
    a = amplification_scan(Ground(), kappa, True, small_grid(kappa), dim=32, threads=1)
    b = amplification_scan(Ground(), kappa, True, small_grid(kappa), dim=32, threads=4)
    for col in a.records.COLUMNS:
        np.testing.assert_array_equal(getattr(a.records, col), getattr(b.records, col))
    assert a.argmax == b.argmax


def test_argmax_matches_records():
    rep = amplification_scan(Ground(), 0.05, True, small_grid(0.05), dim=32)
    k = int(np.argmax(np.abs(rep.records.mean_x)))
    assert rep.max_abs_x == abs(rep.records.mean_x[k])
    assert rep.argmax == (rep.records.tau[k], rep.records.theta[k], rep.records.phi[k])


def test_kerr_contrast_at_dark_port():
    kappa = 0.05
    res = kerr_contrast(Ground(), kappa, np.linspace(0, 3 / kappa, 600), dim=32)
    assert res.with_kerr.max_abs_x >= 0.9
    tau = res.with_kerr.argmax[0]
    eta = abs(1 - np.exp(-1j * tau))
    assert kerr_phase(1, kappa, tau) == pytest.approx(kappa * eta, rel=0.2)
    no_kerr = kerr_contrast(Ground(), kappa, np.linspace(0, 2 * np.pi, 300), dim=32).without_kerr
    assert no_kerr.max_abs_x <= 4 * kappa
    assert set(res.with_kerr.records.theta) == {np.pi / 4}


def test_kerr_contrast_uncoupled_is_empty():
    with pytest.raises(EmptyScan):
        kerr_contrast(Ground(), 0.0, np.linspace(0, 10, 50), dim=16)


def test_limit_table():
    z = (1e10 - 1) / (1e10 + 1)
    table = dict(limit_table([Ground(), Thermal(z), FockMixture((1.0,)), Thermal(0.5)]))
    assert table[Ground()] == 1.0
    assert table[Thermal(z)] == pytest.approx(1e5, rel=1e-6)
    assert table[FockMixture((1.0,))] == 1.0
    assert table[Thermal(0.5)] == pytest.approx(np.sqrt(3))


def test_grid_validation():
    with pytest.raises(ValueError):
        ScanGrid((), (0.5,), (3.0,))
    with pytest.raises(ValueError):
        ScanGrid((2.0, 1.0), (0.5,), (3.0,))
    with pytest.raises(ValueError):
        ScanGrid((1.0,), (2.0,), (3.0,))
    with pytest.raises(ValueError):
        ScanGrid((1.0,), (0.5,), (7.0,))
    g = default_grid(0.05)
    assert g.shape == (600, 41, 81)
    assert g.tau_values[-1] == pytest.approx(60.0)
