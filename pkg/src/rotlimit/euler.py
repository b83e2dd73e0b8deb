"""Scaled compressible rotating Euler system, explicit RK4 pseudo-spectral.

    d_t rho + div m = 0
    d_t m + div(m x m / rho) + eps^-2 grad p(rho) + eps^-1 b x m = 0,  b = e3
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .spectral import Grid
from .thermo import (ScalingParams, pressure, pressure_derivative,
                     pressure_potential, pressure_potential_d1)

log = logging.getLogger(__name__)


class PositivityError(RuntimeError):
    """Density reached a non-positive value; ``snapshot`` holds the offending state."""

    def __init__(self, msg, snapshot=None):
        super().__init__(msg)
        self.snapshot = snapshot


@dataclass
class FlowState:
    grid: Grid
    rho: np.ndarray
    mom: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.rho = self.grid.check(self.rho)
        self.mom = self.grid.check(self.mom, 3)

    @property
    def velocity(self):
        return self.mom / self.rho

    def copy(self):
        return FlowState(self.grid, self.rho.copy(), self.mom.copy(), self.time)


def rest_state(grid: Grid, params: ScalingParams) -> FlowState:
    return FlowState(grid, np.full(grid.shape, params.rho_bar), np.zeros((3,) + grid.shape))


def _require_positive(state: FlowState):
    rmin = float(np.min(state.rho))
    if not rmin > 0:
        raise PositivityError(f"density lost positivity (min rho = {rmin:.3e}) at t = {state.time}",
                              snapshot=state)


@dataclass(frozen=True)
class Hyperviscosity:
    """-nu (-Laplacian)^4 damping on rho and m."""

    nu: float

    @classmethod
    def for_step(cls, grid: Grid, dt: float) -> "Hyperviscosity":
        # e-folding time at the dealiasing cutoff equal to dt
        kx, ky, kz = grid.wavenumbers
        kc2 = (np.max(np.abs(kx)) * 2 / 3) ** 2 + (np.max(np.abs(ky)) * 2 / 3) ** 2
        if grid.nz > 1:
            kc2 += (np.max(np.abs(kz)) * 2 / 3) ** 2
        return cls(1.0 / (dt * kc2 ** 4))

    def symbol(self, grid: Grid):
        kx, ky, kz = grid.wavenumbers
        return self.nu * (kx ** 2 + ky ** 2 + kz ** 2) ** 4


def euler_rhs(state: FlowState, params: ScalingParams, *, convection=True, pressure_force=True,
              coriolis=True, hyperviscosity: Hyperviscosity | None = None):
    """Return (d rho/dt, d m/dt); every nonlinear product is dealiased.

    The keyword switches exist so individual terms can be isolated in tests.
    """
    _require_positive(state)
    g = state.grid
    kd = g._kd
    mask = g.dealias_mask
    eps = params.epsilon
    rho, m = state.rho, state.mom

    mh = g.fft(m)
    drho_h = -sum(1j * kd[i] * mh[i] for i in range(3))
    dm_h = np.zeros_like(mh)
    if convection:
        u = m / rho
        for i in range(3):
            for j in range(i, 3):
                fh = g.fft(m[i] * u[j]) * mask
                dm_h[i] -= 1j * kd[j] * fh
                if j != i:
                    dm_h[j] -= 1j * kd[i] * fh
    if pressure_force:
        ph = g.fft(pressure(rho, params) - pressure(params.rho_bar, params)) * mask
        for i in range(3):
            dm_h[i] -= 1j * kd[i] * ph / eps ** 2
    if coriolis:
        # b x m = (-m2, m1, 0)
        dm_h[0] += mh[1] / eps
        dm_h[1] -= mh[0] / eps
    if hyperviscosity is not None:
        damp = hyperviscosity.symbol(g)
        drho_h -= damp * g.fft(rho)
        dm_h -= damp * mh
    return g.ifft(drho_h * mask), g.ifft(dm_h * mask)


def total_energy(state: FlowState, params: ScalingParams) -> float:
    """Integral of |m|^2/(2 rho) + eps^-2 (P(rho) - P(rho_bar) - P'(rho_bar)(rho - rho_bar))."""
    _require_positive(state)
    rb = params.rho_bar
    kin = 0.5 * np.sum(state.mom ** 2, axis=0) / state.rho
    pot = (pressure_potential(state.rho, params) - pressure_potential(rb, params)
           - pressure_potential_d1(rb, params) * (state.rho - rb))
    return state.grid.integrate(kin + pot / params.epsilon ** 2)


def kinetic_energy(state: FlowState) -> float:
    return state.grid.integrate(0.5 * np.sum(state.mom ** 2, axis=0) / state.rho)


def total_mass_excess(state: FlowState, params: ScalingParams) -> float:
    return state.grid.integrate(state.rho - params.rho_bar)


def stable_dt(state: FlowState, params: ScalingParams, cfl: float = 0.5) -> float:
    """dt = cfl h / (max|u| + max sqrt(p'(rho))/eps + h/eps), h the smallest spacing."""
    if not 0 < cfl <= 1:
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")
    _require_positive(state)
    h = state.grid.min_spacing
    umax = float(np.max(np.sqrt(np.sum(state.velocity ** 2, axis=0))))
    cmax = float(np.max(np.sqrt(pressure_derivative(state.rho, params))))
    eps = params.epsilon
    return cfl * h / (umax + cmax / eps + h / eps)


# --- weak-form monitors --------------------------------------------------------

def bump_battery(grid: Grid, count: int = 4, width: float | None = None):
    """Smooth, effectively compactly supported Gaussian bumps on the box."""
    width = width or min(grid.lx, grid.ly) / 10
    x, y, _ = grid.coords()
    centres = [(grid.lx * (0.25 + 0.5 * (i % 2)), grid.ly * (0.25 + 0.5 * (i // 2 % 2)))
               for i in range(count)]
    out = []
    for cx, cy in centres:
        dx = (x - cx + grid.lx / 2) % grid.lx - grid.lx / 2
        dy = (y - cy + grid.ly / 2) % grid.ly - grid.ly / 2
        out.append(np.broadcast_to(np.exp(-(dx ** 2 + dy ** 2) / (2 * width ** 2)), grid.shape).copy())
    return out


class WeakForms:
    """Weak continuity / momentum functionals for a fixed set of test functions.

    ``values(state)`` returns the tested densities and momenta,
    ``fluxes(state)`` the time-derivative integrands; the discrete residual is
    ``[values]_0^t - int_0^t fluxes``.
    """

    def __init__(self, grid: Grid, params: ScalingParams, tests=None, hyperviscosity=None):
        self.grid = grid
        self.params = params
        self.tests = tests if tests is not None else bump_battery(grid)
        self.grads = [grid.grad(phi) for phi in self.tests]
        self.hv = hyperviscosity

    def values(self, state: FlowState):
        g, rb = self.grid, self.params.rho_bar
        cont = [g.integrate((state.rho - rb) * phi) for phi in self.tests]
        mom = [g.integrate(state.mom[c] * phi) for phi in self.tests for c in (0, 1)]
        return np.array(cont + mom)

    def fluxes(self, state: FlowState):
        g, eps = self.grid, self.params.epsilon
        m, rho = state.mom, state.rho
        u = m / rho
        dp = pressure(rho, self.params) - pressure(self.params.rho_bar, self.params)
        cont = [g.integrate(np.sum(m * gp, axis=0)) for gp in self.grads]
        mom = []
        for phi, gp in zip(self.tests, self.grads):
            for c in (0, 1):
                # phi e_c: grad(phi e_c)_{c j} = d_j phi, div(phi e_c) = d_c phi
                conv = np.sum(m[c] * u * gp, axis=0)
                cor = -m[1] * phi if c == 0 else m[0] * phi
                mom.append(g.integrate(conv + dp * gp[c] / eps ** 2 - cor / eps))
        out = np.array(cont + mom)
        if self.hv is not None:
            damp = self.hv.symbol(g)
            hv_rho = g.ifft(-damp * g.fft(rho))
            hv_m = g.ifft(-damp * g.fft(m))
            extra = [g.integrate(hv_rho * phi) for phi in self.tests]
            extra += [g.integrate(hv_m[c] * phi) for phi in self.tests for c in (0, 1)]
            out = out + np.array(extra)
        return out

    def split(self, residual):
        n = len(self.tests)
        return float(np.max(np.abs(residual[:n]))), float(np.max(np.abs(residual[n:])))


def _hv_energy_rate(state: FlowState, params: ScalingParams, hv: Hyperviscosity):
    g = state.grid
    damp = hv.symbol(g)
    hv_rho = g.ifft(-damp * g.fft(state.rho))
    hv_m = g.ifft(-damp * g.fft(state.mom))
    u = state.velocity
    dP = pressure_potential_d1(state.rho, params) - pressure_potential_d1(params.rho_bar, params)
    rate = (np.sum(u * hv_m, axis=0) - 0.5 * np.sum(u ** 2, axis=0) * hv_rho
            + dP * hv_rho / params.epsilon ** 2)
    return g.integrate(rate)


# --- time stepping ------------------------------------------------------------

def step_rk4(state: FlowState, dt: float, params: ScalingParams, *, symmetry=False,
             accumulators=None, **rhs_kw) -> FlowState:
    """One classical RK4 step.

    ``accumulators`` is an optional list of ``f(state) -> array`` whose time
    integrals over the step are returned alongside the new state using the
    same stage weights, i.e. ``(new_state, [integral, ...])``.
    """
    g = state.grid

    def stage(rho, mom, t):
        s = FlowState(g, rho, mom, t)
        return s, euler_rhs(s, params, **rhs_kw)

    s1, (r1, m1) = stage(state.rho, state.mom, state.time)
    s2, (r2, m2) = stage(state.rho + 0.5 * dt * r1, state.mom + 0.5 * dt * m1, state.time + 0.5 * dt)
    s3, (r3, m3) = stage(state.rho + 0.5 * dt * r2, state.mom + 0.5 * dt * m2, state.time + 0.5 * dt)
    s4, (r4, m4) = stage(state.rho + dt * r3, state.mom + dt * m3, state.time + dt)
    rho = state.rho + dt / 6 * (r1 + 2 * r2 + 2 * r3 + r4)
    mom = state.mom + dt / 6 * (m1 + 2 * m2 + 2 * m3 + m4)
    if symmetry:
        rho, mom = g.project_symmetry(rho, mom)
    new = FlowState(g, rho, mom, state.time + dt)
    _require_positive(new)
    if accumulators is None:
        return new
    ints = [dt / 6 * (f(s1) + 2 * f(s2) + 2 * f(s3) + f(s4)) for f in accumulators]
    return new, ints


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)
    monitors: dict = field(default_factory=dict)
    steps: int = 0

    @property
    def times(self):
        return np.array([s.time for s in self.snapshots])

    @property
    def final(self) -> FlowState:
        return self.snapshots[-1]


MONITOR_COLUMNS = ("t", "mass", "energy", "defect", "res_cont", "res_mom", "hv_work")


def integrate(state0: FlowState, t_end: float, params: ScalingParams, *, cfl=0.5,
              sample_interval=None, symmetry=False, hyperviscosity=False, monitors=True,
              keep_snapshots=True, weak_tests=None, dt_max=None, **rhs_kw) -> Trajectory:
    """Advance ``state0`` to ``t_end`` sampling every ``sample_interval``.

    Each sampling interval is split into an integer number of equal steps no
    larger than ``stable_dt`` so that sample times are exact and common across
    runs.  Raises :class:`PositivityError` with the last good state attached.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    interval = sample_interval or t_end
    n_int = max(1, int(round(t_end / interval)))
    interval = t_end / n_int

    state = state0.copy()
    if symmetry:
        state.rho, state.mom = state.grid.project_symmetry(state.rho, state.mom)
    hv = None
    if hyperviscosity:
        hv = Hyperviscosity.for_step(state.grid, min(stable_dt(state, params, cfl), interval))
        rhs_kw["hyperviscosity"] = hv

    traj = Trajectory()
    weak = WeakForms(state.grid, params, weak_tests, hv) if monitors else None
    cols = {c: [] for c in MONITOR_COLUMNS}
    if monitors:
        e0 = total_energy(state, params)
        v0 = weak.values(state)
        flux_int = np.zeros_like(v0)
        hv_work = 0.0
        accs = [weak.fluxes]
        if hv is not None:
            accs.append(lambda s: np.array([_hv_energy_rate(s, params, hv)]))

    def record(s):
        if keep_snapshots or not traj.snapshots:
            traj.snapshots.append(s.copy())
        else:
            traj.snapshots[-1] = s.copy()
        if monitors:
            e = total_energy(s, params)
            rc, rm = weak.split(weak.values(s) - v0 - flux_int)
            for k, v in zip(MONITOR_COLUMNS, (s.time, total_mass_excess(s, params), e, e0 - e,
                                              rc, rm, hv_work)):
                cols[k].append(v)

    record(state)
    for k in range(n_int):
        t_target = (k + 1) * interval
        dt_cfl = stable_dt(state, params, cfl)
        if dt_max is not None:
            dt_cfl = min(dt_cfl, dt_max)
        nsteps = max(1, math.ceil(interval / dt_cfl - 1e-9))
        dt = interval / nsteps
        for _ in range(nsteps):
            try:
                if monitors:
                    state, ints = step_rk4(state, dt, params, symmetry=symmetry,
                                           accumulators=accs, **rhs_kw)
                    flux_int = flux_int + ints[0]
                    if hv is not None:
                        hv_work += float(ints[1][0])
                else:
                    state = step_rk4(state, dt, params, symmetry=symmetry, **rhs_kw)
            except PositivityError as exc:
                if exc.snapshot is None or exc.snapshot.time != state.time:
                    exc.snapshot = state
                raise
            traj.steps += 1
        state.time = t_target
        record(state)
    if monitors:
        traj.monitors = {k: np.array(v) for k, v in cols.items()}
    return traj


def measured_energy_tolerance(state0: FlowState, t_end: float, params: ScalingParams,
                              cfl: float = 0.5, coarse: Trajectory | None = None, **kw) -> float:
    """Time-integration error bound on the energy, from a step-halving comparison.

    Runs at ``cfl`` and ``cfl/2``; the Richardson estimate of the coarse run's
    error for a fourth-order scheme is ``16/15 |E_dt - E_dt/2|``.  A round-off
    floor proportional to the energy scale is added.  ``coarse`` may supply an
    existing run at ``cfl`` with the same sampling.
    """
    a = coarse or integrate(state0, t_end, params, cfl=cfl, keep_snapshots=False, **kw)
    b = integrate(state0, t_end, params, cfl=cfl / 2, keep_snapshots=False, **kw)
    ea, eb = a.monitors["energy"], b.monitors["energy"]
    scale = max(abs(float(ea[0])), 1e-300)
    return float(16 / 15 * np.max(np.abs(ea - eb))) + 1e-13 * scale
