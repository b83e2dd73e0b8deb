"""Barotropic pressure law, pressure potential and the ess/res cutoff."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class DimensionError(ValueError):
    """Fields do not live on a common grid."""


@dataclass(frozen=True)
class ScalingParams:
    epsilon: float = 0.1
    a: float = 1.0
    gamma: float = 2.0
    rho_bar: float = 1.0
    sound_speed_sq: float = field(init=False)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if not self.a > 0:
            raise DomainError(f"a must be positive, got {self.a}")
        if not self.gamma > 1:
            raise DomainError(f"gamma must exceed 1, got {self.gamma}")
        if not self.rho_bar > 0:
            raise DomainError(f"rho_bar must be positive, got {self.rho_bar}")
        object.__setattr__(
            self, "sound_speed_sq",
            self.a * self.gamma * self.rho_bar ** (self.gamma - 1.0))

    def with_epsilon(self, epsilon: float) -> "ScalingParams":
        return ScalingParams(epsilon, self.a, self.gamma, self.rho_bar)


def _check_nonneg(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise DomainError("density must be non-negative")
    return rho


def pressure(rho, params: ScalingParams):
    """p(rho) = a rho^gamma."""
    rho = _check_nonneg(rho)
    return params.a * rho ** params.gamma


def pressure_derivative(rho, params: ScalingParams):
    rho = _check_nonneg(rho)
    return params.a * params.gamma * rho ** (params.gamma - 1.0)


def pressure_potential(rho, params: ScalingParams):
    """Closed form of ``rho * int_{rho_bar}^{rho} p(z)/z^2 dz``.

    Continuous at rho = 0 where it vanishes.
    """
    rho = _check_nonneg(rho)
    a, g, rb = params.a, params.gamma, params.rho_bar
    return a / (g - 1.0) * (rho ** g - rho * rb ** (g - 1.0))


def pressure_potential_d1(rho, params: ScalingParams):
    """P'(rho)."""
    rho = _check_nonneg(rho)
    a, g, rb = params.a, params.gamma, params.rho_bar
    return a / (g - 1.0) * (g * rho ** (g - 1.0) - rb ** (g - 1.0))


def pressure_potential_d2(rho, params: ScalingParams):
    """P''(rho) = p'(rho)/rho."""
    rho = _check_nonneg(rho)
    return params.a * params.gamma * rho ** (params.gamma - 2.0)


def relative_pressure_potential(rho, rtilde, params: ScalingParams):
    """P(rho) - P(rtilde) - P'(rtilde)(rho - rtilde); non-negative by convexity."""
    rtilde = np.asarray(rtilde, dtype=float)
    if np.any(rtilde <= 0):
        raise DomainError("reference density must be strictly positive")
    rho = _check_nonneg(rho)
    # the linear part of P cancels; with rho = rtilde (1 + x) what remains is
    # a/(g-1) rtilde^g ((1+x)^g - 1 - g x), evaluated without the O(1) cancellation
    g = params.gamma
    x = rho / rtilde - 1.0
    with np.errstate(divide="ignore"):
        core = np.expm1(g * np.log1p(x)) - g * x
    core = np.where(x == -1.0, g - 1.0, core)
    return np.maximum(params.a / (g - 1.0) * rtilde ** g * core, 0.0)


def convexity_constant(params: ScalingParams, lo: float, hi: float) -> float:
    """Half the minimum of P'' on [lo, hi].

    P'' = a*gamma*rho^(gamma-2) is monotone, so the minimum sits at an endpoint.
    """
    if not 0 < lo <= hi:
        raise DomainError("need 0 < lo <= hi")
    return 0.5 * float(min(pressure_potential_d2(lo, params),
                           pressure_potential_d2(hi, params)))


def _smooth_step(x):
    # 0 for x <= 0, 1 for x >= 1, C-infinity in between
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        y = 1.0 - x
        g = np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)
    return f / (f + g)


@dataclass(frozen=True)
class CutoffChi:
    """Smooth cutoff: 1 on [rho_bar/2, 2 rho_bar], 0 outside (rho_bar/4, 4 rho_bar)."""

    rho_bar: float

    @property
    def lower_plateau(self) -> float:
        return 0.5 * self.rho_bar

    @property
    def upper_plateau(self) -> float:
        return 2.0 * self.rho_bar

    @property
    def lower_support(self) -> float:
        return 0.25 * self.rho_bar

    @property
    def upper_support(self) -> float:
        return 4.0 * self.rho_bar

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        rise = _smooth_step((rho - self.lower_support)
                            / (self.lower_plateau - self.lower_support))
        fall = _smooth_step((self.upper_support - rho)
                            / (self.upper_support - self.upper_plateau))
        return rise * fall


def ess_res_split(h_field, rho_field, chi: CutoffChi):
    """Return (chi(rho) H, (1 - chi(rho)) H)."""
    h_field = np.asarray(h_field, dtype=float)
    rho_field = np.asarray(rho_field, dtype=float)
    if h_field.shape != rho_field.shape:
        raise DimensionError(
            f"shape mismatch: H {h_field.shape} vs rho {rho_field.shape}")
    c = chi(rho_field)
    ess = c * h_field
    return ess, h_field - ess
