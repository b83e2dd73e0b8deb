"""Scaled relative energy between a flow state and a smooth test state."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .acoustic import AcousticState
from .euler import FlowState
from .spectral import Grid
from .target import TargetState, velocity_from_q
from .thermo import (CutoffChi, DomainError, ScalingParams, convexity_constant,
                     ess_res_split, relative_pressure_potential)


@dataclass
class TestState:
    rtilde: np.ndarray
    utilde: np.ndarray

    __test__ = False  # not a pytest class


@dataclass
class RelativeEnergyReport:
    time: float
    value: float
    ess_velocity: float
    res_kinetic: float
    ess_density: float
    res_mass_pressure: float
    energy_defect: float = 0.0
    coercivity_constant: float = float("nan")

    def as_row(self):
        return asdict(self)


def _check(state: FlowState, test: TestState):
    g = state.grid
    test.rtilde = g.check(test.rtilde)
    test.utilde = g.check(test.utilde, 3)
    if np.min(test.rtilde) <= 0:
        raise DomainError("test density must be positive")
    if np.min(state.rho) <= 0:
        raise DomainError("state density must be positive")


def relative_energy_density(state: FlowState, test: TestState, params: ScalingParams):
    """Pointwise integrand; returns (kinetic part, pressure part without 1/eps^2)."""
    _check(state, test)
    u = state.mom / state.rho
    kin = 0.5 * state.rho * np.sum((u - test.utilde) ** 2, axis=0)
    pot = relative_pressure_potential(state.rho, test.rtilde, params)
    return kin, pot


def relative_energy(state: FlowState, test: TestState, params: ScalingParams) -> float:
    kin, pot = relative_energy_density(state, test, params)
    return state.grid.integrate(kin + pot / params.epsilon ** 2)


def residual_constant(params: ScalingParams, rt_lo: float, rt_hi: float, chi: CutoffChi,
                      n: int = 4001) -> float:
    """inf of E_P(rho | rt) / (1 + rho^gamma) over the residual set and rt in [rt_lo, rt_hi].

    The residual set is ``rho`` outside the plateau of ``chi``.  The infimum is
    taken on a dense log grid reaching far beyond the plateau, together with
    the large-``rho`` limit ``a/(gamma-1)``.
    """
    if not (chi.lower_plateau < rt_lo <= rt_hi < chi.upper_plateau):
        raise DomainError("test density range must sit strictly inside the cutoff plateau")
    low = np.concatenate([[0.0], np.geomspace(1e-8 * chi.lower_plateau, chi.lower_plateau, n)])
    high = np.geomspace(chi.upper_plateau, 1e8 * chi.upper_plateau, n)
    rho = np.concatenate([low, high])[:, None]
    rts = np.linspace(rt_lo, rt_hi, 33)[None, :]
    ratio = relative_pressure_potential(rho, rts, params) / (1 + rho ** params.gamma)
    return float(min(np.min(ratio), params.a / (params.gamma - 1)))


def coercivity_constant(params: ScalingParams, test: TestState, chi: CutoffChi) -> float:
    """c_eps with value >= c_eps * (sum of the four coercivity components).

    Pointwise, with U = max|utilde|:
      ess velocity      <= (8/rho_bar) kinetic       (rho >= rho_bar/4 on supp chi)
      res kinetic       <= 4 kinetic + 2 U^2 [1 + rho^gamma]_res
      ess density       <= eps^2 pressure / c_conv
      res mass/pressure <= eps^2 pressure / c_res
    """
    rt_lo, rt_hi = float(np.min(test.rtilde)), float(np.max(test.rtilde))
    c_conv = convexity_constant(params, min(chi.lower_support, rt_lo), max(chi.upper_support, rt_hi))
    c_res = residual_constant(params, rt_lo, rt_hi, chi)
    umax2 = float(np.max(np.sum(test.utilde ** 2, axis=0)))
    eps2 = params.epsilon ** 2
    k_kin = 8.0 / params.rho_bar + 4.0
    k_pot = eps2 / c_conv + eps2 * (1.0 + 2.0 * umax2) / c_res
    return 1.0 / max(k_kin, k_pot)


def coercivity_components(state: FlowState, test: TestState, params: ScalingParams,
                          chi: CutoffChi | None = None, *, energy_defect: float = 0.0,
                          check: bool = True) -> RelativeEnergyReport:
    chi = chi or CutoffChi(params.rho_bar)
    g = state.grid
    kin, pot = relative_energy_density(state, test, params)
    value = g.integrate(kin + pot / params.epsilon ** 2)
    u = state.mom / state.rho
    rho = state.rho
    ess_v, _ = ess_res_split(np.sum((u - test.utilde) ** 2, axis=0), rho, chi)
    _, res_k = ess_res_split(np.sum(state.mom ** 2, axis=0) / rho, rho, chi)
    ess_d, _ = ess_res_split((rho - test.rtilde) ** 2, rho, chi)
    _, res_p = ess_res_split(1.0 + rho ** params.gamma, rho, chi)
    comps = [g.integrate(c) for c in (ess_v, res_k, ess_d, res_p)]
    c_eps = coercivity_constant(params, test, chi)
    if check and not value >= c_eps * sum(comps) * (1 - 1e-12):
        raise AssertionError(
            f"coercivity violated: E = {value:.6e} < {c_eps:.3e} * {sum(comps):.6e}")
    return RelativeEnergyReport(state.time, value, *comps, energy_defect=energy_defect,
                                coercivity_constant=c_eps)


def _lift_velocity(grid: Grid, v_h):
    return np.concatenate([grid.lift(v_h), np.zeros((1,) + grid.shape)])


def build_well_prepared_test(target: TargetState, params: ScalingParams, grid: Grid) -> TestState:
    """rtilde = rho_bar + eps q, utilde = (v(q), 0), lifted onto ``grid``."""
    rtilde = params.rho_bar + params.epsilon * grid.lift(target.q)
    if np.min(rtilde) <= 0:
        raise DomainError("test density not positive: eps * max|q| too large")
    return TestState(rtilde, _lift_velocity(grid, velocity_from_q(target.q, target.grid, params)))


def build_ill_prepared_test(target: TargetState, acoustic: AcousticState | None,
                            params: ScalingParams, grid: Grid) -> TestState:
    """rtilde = rho_bar + eps (q_delta + s), utilde = (v_delta, 0) + V."""
    test = build_well_prepared_test(target, params, grid) if target is not None else TestState(
        np.full(grid.shape, params.rho_bar), np.zeros((3,) + grid.shape))
    if acoustic is None:
        return test
    if abs(acoustic.time - (target.time if target is not None else acoustic.time)) > 1e-12:
        raise ValueError("target and acoustic states are at different times")
    rtilde = test.rtilde + params.epsilon * acoustic.s
    if np.min(rtilde) <= 0:
        raise DomainError("test density not positive")
    return TestState(rtilde, test.utilde + acoustic.V)
