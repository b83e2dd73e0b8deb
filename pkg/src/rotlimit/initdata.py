"""Initial data: well-prepared (balanced) and ill-prepared families.

Ill-prepared data is split, after a Fourier low-pass ``[.]_delta``, into a
geostrophic part ``(q0, v0)`` and an acoustic remainder ``(s0, V0)``.  The
geostrophic stream function solves

    -Lap_h q0 + q0/p' = -(rho_bar/p') <curl_h [u0]_delta> + (1/p') <[rho1]_delta>

where ``<.>`` is the vertical average.  This right-hand side is the one that
matches the potential vorticity ``curl_h V - s/rho_bar`` conserved by the
acoustic system, so the geostrophic part lies in the kernel of the acoustic
generator.  ``convention="unscaled"`` reproduces the alternative coefficients
``(+rho_bar, 1/p')`` with ``v0 = perp_grad_h q0`` for comparison.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .euler import FlowState
from .spectral import Grid
from .target import velocity_from_q
from .thermo import DomainError, ScalingParams


@dataclass
class WellPreparedSpec:
    q0: np.ndarray  # horizontal field, shape (nx, ny, 1)
    params: ScalingParams

    @property
    def epsilon(self):
        return self.params.epsilon


@dataclass
class IllPreparedSpec:
    rho1_0: np.ndarray
    u0: np.ndarray
    delta: float
    params: ScalingParams

    @property
    def epsilon(self):
        return self.params.epsilon


@dataclass
class DataDecomposition:
    q0_delta: np.ndarray    # (nx, ny, 1)
    v0_delta: np.ndarray    # (2, nx, ny, 1)
    s0_delta: np.ndarray    # grid.shape
    V0_delta: np.ndarray    # (3,) + grid.shape
    rho1_delta: np.ndarray
    u0_delta: np.ndarray


def make_well_prepared(spec: WellPreparedSpec, grid: Grid) -> FlowState:
    """rho0 = rho_bar + eps q0, m0 = rho0 v0 with v0 in geostrophic balance with q0."""
    p = spec.params
    gh = grid.horizontal()
    q0 = gh.check(spec.q0)
    v_h = velocity_from_q(q0, gh, p)
    v0 = np.concatenate([grid.lift(v_h), np.zeros((1,) + grid.shape)])
    rho0 = p.rho_bar + p.epsilon * grid.lift(q0)
    if np.min(rho0) <= 0:
        raise DomainError("epsilon too large: initial density not positive")
    return FlowState(grid, rho0, rho0 * v0)


def regularize_delta(f, grid: Grid, delta: float):
    """Zero every Fourier mode with |xi| > 1/delta (applied per component)."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    kx, ky, kz = grid.wavenumbers
    keep = (kx ** 2 + ky ** 2 + kz ** 2) <= (1.0 / delta) ** 2
    f = np.asarray(f, dtype=float)
    return grid.ifft(grid.fft(f) * keep)


def default_delta(grid: Grid) -> float:
    """1/delta equal to half the dealiasing cutoff wavenumber."""
    kc = min(2 * np.pi / grid.lx * (grid.nx // 3), 2 * np.pi / grid.ly * (grid.ny // 3))
    return 2.0 / kc


def decompose_ill_prepared(spec: IllPreparedSpec, grid: Grid, convention: str = "balanced"
                           ) -> DataDecomposition:
    p = spec.params
    c2, rb = p.sound_speed_sq, p.rho_bar
    gh = grid.horizontal()
    rho1 = regularize_delta(grid.check(spec.rho1_0), grid, spec.delta)
    u0 = regularize_delta(grid.check(spec.u0, 3), grid, spec.delta)

    curl_avg = grid.vertical_average(grid.curl_h(u0))
    rho_avg = grid.vertical_average(rho1)
    if convention == "balanced":
        rhs = -(rb / c2) * curl_avg + rho_avg / c2
    elif convention == "unscaled":
        rhs = rb * curl_avg + rho_avg / c2
    else:
        raise ValueError(f"unknown convention {convention!r}")
    q0 = gh.solve_helmholtz_h(rhs, 1.0 / c2)
    if convention == "balanced":
        v0 = velocity_from_q(q0, gh, p)
    else:
        v0 = gh.perp_grad_h(q0)[:2]

    s0 = rho1 - grid.lift(q0)
    V0 = u0 - np.concatenate([grid.lift(v0), np.zeros((1,) + grid.shape)])
    return DataDecomposition(q0, v0, s0, V0, rho1, u0)


def make_ill_prepared(spec: IllPreparedSpec, grid: Grid) -> FlowState:
    """rho0 = rho_bar + eps rho1, m0 = rho0 u0; no balance imposed."""
    p = spec.params
    rho0 = p.rho_bar + p.epsilon * grid.check(spec.rho1_0)
    if np.min(rho0) <= 0:
        raise DomainError(
            f"initial density not positive (min {np.min(rho0):.3g}); epsilon too large")
    return FlowState(grid, rho0, rho0 * grid.check(spec.u0, 3))


# --- data families -------------------------------------------------------------

def _random_trig(grid: Grid, rng, nmax: int, zero_mean=True):
    x, y, _ = grid.coords()
    f = np.zeros((grid.nx, grid.ny, 1))
    kx0, ky0 = 2 * np.pi / grid.lx, 2 * np.pi / grid.ly
    for i in range(-nmax, nmax + 1):
        for j in range(0, nmax + 1):
            if (j == 0 and i <= 0) or i * i + j * j > nmax * nmax:
                continue
            a, b = rng.normal(size=2) / (1 + i * i + j * j)
            ph = i * kx0 * x + j * ky0 * y
            f = f + a * np.cos(ph) + b * np.sin(ph)
    if not zero_mean:
        f = f + rng.normal() * 0.1
    return f


def well_prepared_q0(grid: Grid, family: str = "two_mode", amplitude: float = 0.05,
                     seed: int = 0):
    """Horizontal stream function for the well-prepared families."""
    gh = grid.horizontal()
    x, y, _ = gh.coords()
    k1, k2 = 2 * np.pi / grid.lx, 2 * np.pi / grid.ly
    if family == "zero":
        q = np.zeros(gh.shape)
    elif family == "mode":
        q = np.cos(k1 * x) + 0 * y
    elif family == "two_mode":
        q = np.cos(k1 * x) + 0.5 * np.sin(2 * k2 * y)
    elif family == "gaussian":
        sig = min(grid.lx, grid.ly) / 12
        q = np.exp(-((x - grid.lx / 2) ** 2 + (y - grid.ly / 2) ** 2) / (2 * sig ** 2))
    elif family == "random":
        q = _random_trig(gh, np.random.default_rng(seed), 4)
    else:
        raise ValueError(f"unknown well-prepared family {family!r}")
    q = np.broadcast_to(q, gh.shape).astype(float)
    m = np.max(np.abs(q))
    return q if m == 0 else amplitude * q / m


PULSE_WIDTH = 1.5
WELL_FAMILIES = ("zero", "mode", "two_mode", "gaussian", "random")
ILL_FAMILIES = ("zero", "two_mode", "random", "pulse")


def ill_prepared_fields(grid: Grid, family: str = "two_mode", amplitude: float = 0.05,
                        seed: int = 0):
    """(rho1_0, u0) for the ill-prepared families, in the slip-symmetric class."""
    x, y, z = grid.coords()
    k1, k2 = 2 * np.pi / grid.lx, 2 * np.pi / grid.ly
    shp = grid.shape
    if family == "zero":
        return np.zeros(shp), np.zeros((3,) + shp)
    if family == "two_mode":
        rho1 = np.sin(k1 * x) + 0.5 * np.cos(2 * k2 * y)
        u1 = np.cos(k2 * y) + 0.6 * np.sin(k1 * x)
        u2 = 0.8 * np.sin(k1 * x) - 0.4 * np.cos(2 * k2 * y)
        u3 = np.zeros(shp)
    elif family == "random":
        rng = np.random.default_rng(seed)
        gh = grid.horizontal()
        rho1 = _random_trig(gh, rng, 3)
        u1 = _random_trig(gh, rng, 3)
        u2 = _random_trig(gh, rng, 3)
        u3 = np.zeros(shp)
        scale = max(np.max(np.abs(a)) for a in (rho1, u1, u2))
        rho1, u1, u2 = rho1 / scale, u1 / scale, u2 / scale
    elif family == "pulse":
        # density bump at rest in the box centre; drives the dispersion runs
        r2 = (x - grid.lx / 2) ** 2 + (y - grid.ly / 2) ** 2
        rho1 = np.exp(-r2 / (2 * PULSE_WIDTH ** 2))
        u1 = u2 = u3 = np.zeros(shp)
    else:
        raise ValueError(f"unknown ill-prepared family {family!r}")
    if grid.nz >= 4 and family != "pulse":
        cz, sz = np.cos(2 * np.pi * z), np.sin(2 * np.pi * z)
        rho1 = rho1 + 0.3 * np.cos(k1 * x) * cz
        u1 = u1 + 0.3 * np.sin(k2 * y) * cz
        u3 = u3 + 0.3 * np.sin(k1 * x) * sz
    rho1 = amplitude * np.broadcast_to(rho1, shp)
    u0 = amplitude * np.stack([np.broadcast_to(u, shp) for u in (u1, u2, u3)])
    return rho1.astype(float), u0.astype(float)
