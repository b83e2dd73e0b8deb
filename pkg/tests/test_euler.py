import math

import numpy as np
import pytest

from rotlimit.euler import (FlowState, Hyperviscosity, PositivityError, WeakForms, euler_rhs,
                            integrate, kinetic_energy, measured_energy_tolerance, rest_state,
                            stable_dt, step_rk4, total_energy, total_mass_excess)
from rotlimit.initdata import WellPreparedSpec, make_well_prepared, well_prepared_q0
from rotlimit.spectral import Grid
from rotlimit.thermo import ScalingParams

from conftest import smooth_field


def perturbed_state(grid, params, seed=0, amp=0.05):
    rng = np.random.default_rng(seed)
    rho = params.rho_bar + params.epsilon * amp * smooth_field(grid, rng)
    mom = amp * np.stack([smooth_field(grid, rng) for _ in range(3)])
    rho, mom = grid.project_symmetry(rho, mom)
    return FlowState(grid, rho, rho * mom / rho.mean())


def test_rest_state_rhs_vanishes(grid3d, params):
    drho, dm = euler_rhs(rest_state(grid3d, params), params)
    np.testing.assert_array_equal(drho, 0)
    np.testing.assert_array_equal(dm, 0)


def test_uniform_momentum_rhs_is_coriolis_only(grid2d, params):
    M = 0.3
    mom = np.zeros((3,) + grid2d.shape)
    mom[0] = M
    drho, dm = euler_rhs(FlowState(grid2d, np.ones(grid2d.shape), mom), params)
    np.testing.assert_allclose(drho, 0, atol=1e-14)
    # -(1/eps) b x m with b x m = (-m2, m1, 0) = (0, M, 0)
    np.testing.assert_allclose(dm[0], 0, atol=1e-12)
    np.testing.assert_allclose(dm[1], -M / params.epsilon, rtol=1e-13)
    np.testing.assert_allclose(dm[2], 0, atol=1e-12)


def test_vertical_momentum_has_no_coriolis_part(grid3d, params):
    x, y, _ = grid3d.coords()
    mom = np.zeros((3,) + grid3d.shape)
    mom[2] = np.broadcast_to(0.1 * np.sin(x) * np.cos(y), grid3d.shape)
    st = FlowState(grid3d, np.ones(grid3d.shape), mom)
    full = euler_rhs(st, params)[1]
    no_cor = euler_rhs(st, params, coriolis=False)[1]
    np.testing.assert_allclose(full, no_cor, atol=1e-13)


def test_positivity_error_carries_snapshot(grid2d, params):
    rho = np.ones(grid2d.shape)
    rho[3, 3, 0] = -0.1
    st = FlowState(grid2d, rho, np.zeros((3,) + grid2d.shape))
    with pytest.raises(PositivityError) as info:
        euler_rhs(st, params)
    assert info.value.snapshot is st


def test_total_energy_examples(grid3d, params):
    assert total_energy(rest_state(grid3d, params), params) == 0.0
    mom = np.zeros((3,) + grid3d.shape)
    mom[0], mom[1] = 0.6, 0.8
    st = FlowState(grid3d, np.full(grid3d.shape, 2.0), mom)
    assert kinetic_energy(st) == pytest.approx(grid3d.volume / 4)
    p = ScalingParams(1.0)
    st2 = FlowState(grid3d, np.ones(grid3d.shape), mom)
    assert total_energy(st2, p) == pytest.approx(grid3d.volume / 2)
    assert total_energy(perturbed_state(grid3d, params), params) >= 0


def test_stable_dt_examples():
    g = Grid(64, 64)
    p = ScalingParams(1.0)
    dx = 2 * math.pi / 64
    assert stable_dt(rest_state(g, p), p, 0.5) == pytest.approx(0.5 * dx / (math.sqrt(2) + dx))
    st = perturbed_state(g, ScalingParams(0.2))
    d1 = stable_dt(st, ScalingParams(0.2))
    d2 = stable_dt(st, ScalingParams(0.1))
    assert d1 / 2 <= d2 < d1
    for bad in (0.0, 1.5):
        with pytest.raises(ValueError):
            stable_dt(st, p, bad)


def test_steady_state_preserved(grid3d, params):
    tr = integrate(rest_state(grid3d, params), 1.0, params)
    np.testing.assert_allclose(tr.final.rho, params.rho_bar, atol=1e-13)
    np.testing.assert_allclose(tr.final.mom, 0, atol=1e-13)


def test_inertial_rotation_matches_exact_oracle(params):
    g = Grid(16, 16)
    m0 = np.array([0.1, -0.05])
    mom = np.zeros((3,) + g.shape)
    mom[0], mom[1] = m0
    tr = integrate(FlowState(g, np.ones(g.shape), mom), 0.5, params,
                   sample_interval=0.1, dt_max=params.epsilon / 100)
    for st in tr.snapshots:
        th = -st.time / params.epsilon
        R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        exact = R @ m0
        np.testing.assert_allclose(st.mom[0], exact[0], atol=1e-9)
        np.testing.assert_allclose(st.mom[1], exact[1], atol=1e-9)


def test_mass_conserved_and_residuals_small(grid3d):
    p = ScalingParams(0.2)
    st = perturbed_state(grid3d, p)
    tr = integrate(st, 0.2, p, sample_interval=0.05, symmetry=True)
    m = tr.monitors
    assert np.max(np.abs(m["mass"] - m["mass"][0])) < 1e-10
    assert np.max(m["res_cont"]) < 1e-10
    assert np.max(m["res_mom"]) < 1e-8
    np.testing.assert_allclose(m["t"], [0, 0.05, 0.1, 0.15, 0.2], atol=1e-14)


def test_energy_non_increasing_within_measured_tolerance():
    g = Grid(32, 32)
    p = ScalingParams(0.2)
    st = perturbed_state(g, p, seed=3)
    tol = measured_energy_tolerance(st, 0.3, p, sample_interval=0.05)
    tr = integrate(st, 0.3, p, sample_interval=0.05)
    e = tr.monitors["energy"]
    assert np.all(np.diff(e) <= tol)
    assert tol < 1e-4 * e[0]


def test_hyperviscosity_dissipates_and_is_accounted():
    g = Grid(32, 32)
    p = ScalingParams(0.2)
    st = perturbed_state(g, p, seed=5)
    tr = integrate(st, 0.3, p, sample_interval=0.1, hyperviscosity=True)
    m = tr.monitors
    assert np.all(np.diff(m["energy"]) <= 1e-14 * m["energy"][0])
    assert m["hv_work"][-1] < 0 < m["defect"][-1]
    hv = Hyperviscosity.for_step(g, 1e-3)
    assert hv.nu > 0 and np.all(hv.symbol(g) >= 0)


def test_symmetry_class_preserved(grid3d):
    p = ScalingParams(0.2)
    st = perturbed_state(grid3d, p, seed=2)
    tr = integrate(st, 0.1, p, symmetry=False, monitors=False)
    f = tr.final
    np.testing.assert_allclose(grid3d.parity_part(f.rho, -1), 0, atol=1e-12)
    np.testing.assert_allclose(grid3d.parity_part(f.mom[2], 1), 0, atol=1e-12)


def test_well_prepared_single_mode_is_steady_for_gamma_two():
    # p'(rho)/rho is constant for gamma = 2, so geostrophic balance is exact
    g = Grid(32, 32)
    p = ScalingParams(0.2)
    q0 = well_prepared_q0(g, "mode", 0.05)
    st = make_well_prepared(WellPreparedSpec(q0, p), g)
    drho, dm = euler_rhs(st, p)
    assert np.max(np.abs(drho)) < 1e-14 and np.max(np.abs(dm)) < 1e-12


def test_weak_forms_agree_with_strong_form(grid3d):
    p = ScalingParams(0.3)
    st = perturbed_state(grid3d, p, seed=7)
    wf = WeakForms(grid3d, p)
    drho, dm = euler_rhs(st, p)
    # d/dt <phi, U> computed from the strong rhs equals the weak fluxes
    strong = np.array([grid3d.integrate(phi * drho) for phi in wf.tests]
                      + [grid3d.integrate(phi * dm[c]) for phi in wf.tests for c in (0, 1)])
    # the strong form is dealiased, the quadrature of the weak fluxes is not
    np.testing.assert_allclose(wf.fluxes(st), strong, rtol=1e-6, atol=1e-12)


def test_step_rk4_accumulators(grid2d):
    p = ScalingParams(0.3)
    st = perturbed_state(grid2d, p)
    new, ints = step_rk4(st, 1e-3, p, accumulators=[lambda s: np.array([1.0])])
    assert ints[0][0] == pytest.approx(1e-3)
    assert new.time == pytest.approx(1e-3)
    assert total_mass_excess(new, p) == pytest.approx(total_mass_excess(st, p), abs=1e-14)
