"""Two-dimensional limit system: potential vorticity transport.

The state carries the potential vorticity ``omega = Lap_h q - q / p'(rho_bar)``
and the stream function ``q`` diagnosed from it.  Velocity is recovered from
geostrophic balance, ``v_h = (p'(rho_bar)/rho_bar) perp_grad_h q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import Grid
from .thermo import ScalingParams


class StabilityError(RuntimeError):
    pass


def _horizontal(grid: Grid) -> Grid:
    return grid if grid.nz == 1 else grid.horizontal()


def potential_vorticity(q, grid: Grid, params: ScalingParams):
    return grid.laplacian_h(q) - q / params.sound_speed_sq


def q_from_omega(omega, grid: Grid, params: ScalingParams):
    """Invert omega = Lap_h q - q/p'; unique for every mode since 1/p' > 0."""
    return grid.solve_helmholtz_h(-np.asarray(omega, dtype=float), 1.0 / params.sound_speed_sq)


def velocity_from_q(q, grid: Grid, params: ScalingParams):
    """Horizontal geostrophic velocity, shape (2,) + grid.shape."""
    return params.sound_speed_sq / params.rho_bar * grid.perp_grad_h(q)[:2]


def balance_residual(q, v, grid: Grid, params: ScalingParams) -> float:
    """max |(p'/rho_bar) grad_h q + b x v| (horizontal components)."""
    gq = grid.grad(q)[:2]
    c = params.sound_speed_sq / params.rho_bar
    r1 = c * gq[0] - v[1]
    r2 = c * gq[1] + v[0]
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))


@dataclass
class TargetState:
    grid: Grid
    omega: np.ndarray
    params: ScalingParams
    time: float = 0.0
    q: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.omega = self.grid.check(self.omega)
        if self.q is None:
            self.q = q_from_omega(self.omega, self.grid, self.params)

    @classmethod
    def from_q(cls, grid: Grid, q, params: ScalingParams, time: float = 0.0):
        q = grid.check(q)
        return cls(grid, potential_vorticity(q, grid, params), params, time, q.copy())

    @property
    def velocity(self):
        return velocity_from_q(self.q, self.grid, self.params)

    def copy(self):
        return TargetState(self.grid, self.omega.copy(), self.params, self.time, self.q.copy())


def target_rhs(state: TargetState, params: ScalingParams, *, geostrophic_advection=True):
    """d omega/dt = -(v . grad_h) omega, product dealiased.

    With ``geostrophic_advection`` the advecting field is the balanced velocity
    ``(p'/rho_bar) perp_grad_h q``; otherwise the bare ``perp_grad_h q``.
    """
    g = state.grid
    v = g.perp_grad_h(state.q)[:2]
    if geostrophic_advection:
        v = v * (params.sound_speed_sq / params.rho_bar)
    gw = g.grad(state.omega)
    return g.dealias(-(v[0] * gw[0] + v[1] * gw[1]))


def target_stable_dt(state: TargetState, params: ScalingParams, cfl: float = 0.5,
                     geostrophic_advection=True) -> float:
    v = state.grid.perp_grad_h(state.q)[:2]
    if geostrophic_advection:
        v = v * (params.sound_speed_sq / params.rho_bar)
    vmax = float(np.max(np.sqrt(np.sum(v ** 2, axis=0))))
    if vmax == 0:
        return math.inf
    return cfl * state.grid.min_spacing / vmax


def target_step_rk4(state: TargetState, dt: float, params: ScalingParams, **kw) -> TargetState:
    g = state.grid

    def f(w):
        return target_rhs(TargetState(g, w, params), params, **kw)

    w = state.omega
    k1 = f(w)
    k2 = f(w + 0.5 * dt * k1)
    k3 = f(w + 0.5 * dt * k2)
    k4 = f(w + dt * k3)
    return TargetState(g, w + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4), params, state.time + dt)


def target_energy(state: TargetState, params: ScalingParams) -> float:
    """Integral of |grad_h q|^2 + q^2/p'(rho_bar) over the horizontal box."""
    g = state.grid
    gq = g.grad(state.q)
    return g.integrate(gq[0] ** 2 + gq[1] ** 2 + state.q ** 2 / params.sound_speed_sq)


@dataclass
class TargetTrajectory:
    snapshots: list = field(default_factory=list)
    monitors: dict = field(default_factory=dict)
    steps: int = 0

    @property
    def times(self):
        return np.array([s.time for s in self.snapshots])

    @property
    def final(self) -> TargetState:
        return self.snapshots[-1]


def target_integrate(state0: TargetState, t_end: float, params: ScalingParams, *, cfl=0.5,
                     sample_interval=None, dt=None, keep_snapshots=True,
                     geostrophic_advection=True) -> TargetTrajectory:
    """RK4 integration with exact sample times; a fixed ``dt`` above the CFL limit is refused."""
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    interval = sample_interval or t_end
    n_int = max(1, int(round(t_end / interval)))
    interval = t_end / n_int
    kw = {"geostrophic_advection": geostrophic_advection}

    state = state0.copy()
    traj = TargetTrajectory()
    cols = {"t": [], "energy": [], "omega_max": [], "omega_min": []}

    def record(s):
        if keep_snapshots or not traj.snapshots:
            traj.snapshots.append(s.copy())
        else:
            traj.snapshots[-1] = s.copy()
        cols["t"].append(s.time)
        cols["energy"].append(target_energy(s, params))
        cols["omega_max"].append(float(np.max(s.omega)))
        cols["omega_min"].append(float(np.min(s.omega)))

    record(state)
    for k in range(n_int):
        limit = target_stable_dt(state, params, 1.0, **kw)
        if dt is not None:
            if dt > limit:
                raise StabilityError(f"dt = {dt} exceeds the advective limit {limit}")
            nsteps = max(1, math.ceil(interval / dt - 1e-9))
        else:
            nsteps = max(1, math.ceil(interval / (cfl * limit) - 1e-9)) if math.isfinite(limit) else 1
        h = interval / nsteps
        for _ in range(nsteps):
            state = target_step_rk4(state, h, params, **kw)
            traj.steps += 1
        state.time = (k + 1) * interval
        record(state)
    traj.monitors = {k: np.array(v) for k, v in cols.items()}
    return traj
