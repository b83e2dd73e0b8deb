"""Linear Rossby-acoustic system, propagated exactly mode by mode.

    eps d_t s + rho_bar div V = 0
    eps d_t V + (p'(rho_bar)/rho_bar) grad s + b x V = 0

In the scaled variable ``w = (c/rho_bar) s`` (``c^2 = p'(rho_bar)``) the
generator becomes ``-i H(xi)`` with ``H`` Hermitian, so ``exp(-i H t)`` is
computed from a batched ``eigh`` and is unitary in the energy norm.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import Grid
from .thermo import DomainError, ScalingParams


@dataclass
class AcousticState:
    grid: Grid
    s: np.ndarray
    V: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.s = self.grid.check(self.s)
        self.V = self.grid.check(self.V, 3)

    def copy(self):
        return AcousticState(self.grid, self.s.copy(), self.V.copy(), self.time)


def acoustic_mode_matrix(xi, params: ScalingParams):
    """A(xi) with d/dt (s^, V^) = A (s^, V^)."""
    xi = np.asarray(xi, dtype=float)
    eps, rb, c2 = params.epsilon, params.rho_bar, params.sound_speed_sq
    A = np.zeros((4, 4), dtype=complex)
    A[0, 1:] = -1j * rb * xi
    A[1:, 0] = -1j * c2 / rb * xi
    # -b x V = (V2, -V1, 0)
    A[1, 2] = 1.0
    A[2, 1] = -1.0
    return A / eps


def _hermitian_symbols(kx, ky, kz, params: ScalingParams):
    c = np.sqrt(params.sound_speed_sq)
    shape = np.broadcast(kx, ky, kz).shape
    H = np.zeros(shape + (4, 4), dtype=complex)
    for i, k in enumerate((kx, ky, kz)):
        kb = np.broadcast_to(k, shape)
        H[..., 0, i + 1] = c * kb
        H[..., i + 1, 0] = c * kb
    # -i J with J V = (-V2, V1, 0)
    H[..., 1, 2] = 1j
    H[..., 2, 1] = -1j
    return H / params.epsilon


def acoustic_frequencies(xi, params: ScalingParams):
    """Real eigenfrequencies of the mode ``xi`` (ascending)."""
    xi = np.asarray(xi, dtype=float)
    H = _hermitian_symbols(xi[0], xi[1], xi[2], params)
    return np.linalg.eigvalsh(H)


@lru_cache(maxsize=8)
def _eigensystem(grid: Grid, params: ScalingParams):
    kx, ky, kz = grid.wavenumbers
    return np.linalg.eigh(_hermitian_symbols(kx, ky, kz, params))


def _to_scaled_hat(state: AcousticState, params: ScalingParams):
    g = state.grid
    c = np.sqrt(params.sound_speed_sq)
    z = np.stack([g.fft(c / params.rho_bar * state.s)] + [g.fft(state.V[i]) for i in range(3)])
    return np.moveaxis(z, 0, -1)


def _from_scaled_hat(zh, grid: Grid, params: ScalingParams, time: float):
    c = np.sqrt(params.sound_speed_sq)
    z = np.moveaxis(zh, -1, 0)
    s = grid.ifft(z[0]) * params.rho_bar / c
    V = np.stack([grid.ifft(z[i]) for i in (1, 2, 3)])
    return AcousticState(grid, s, V, time)


def acoustic_propagate(state0: AcousticState, t: float, params: ScalingParams) -> AcousticState:
    """Exact solution at ``state0.time + t``."""
    lam, U = _eigensystem(state0.grid, params)
    zh = _to_scaled_hat(state0, params)
    coef = np.einsum("...ji,...j->...i", U.conj(), zh)
    coef = coef * np.exp(-1j * lam * t)
    zt = np.einsum("...ij,...j->...i", U, coef)
    return _from_scaled_hat(zt, state0.grid, params, state0.time + t)


def fast_part_norm(state: AcousticState, params: ScalingParams, rel_tol: float = 1e-9) -> float:
    """Energy norm of the projection onto non-zero-frequency eigenspaces."""
    g = state.grid
    lam, U = _eigensystem(g, params)
    zh = _to_scaled_hat(state, params)
    coef = np.einsum("...ji,...j->...i", U.conj(), zh)
    fast = np.where(np.abs(lam) > rel_tol / params.epsilon, coef, 0.0)
    back = np.einsum("...ij,...j->...i", U, fast)
    fs = _from_scaled_hat(back, g, params, state.time)
    return float(np.sqrt(acoustic_energy(fs, params)))


def acoustic_energy(state: AcousticState, params: ScalingParams) -> float:
    """Integral of (p'/rho_bar^2) s^2 + |V|^2."""
    w = params.sound_speed_sq / params.rho_bar ** 2
    return state.grid.integrate(w * state.s ** 2 + np.sum(state.V ** 2, axis=0))


def local_decay_profile(trajectory, subdomain, params: ScalingParams | None = None):
    """Sup norms of s and V on ``subdomain = (x0, x1, y0, y1)`` along a trajectory.

    Returns a dict of arrays ``t, local_sup_s, local_sup_V`` and, when
    ``params`` is given, ``global_energy``.
    """
    trajectory = list(trajectory)
    if not trajectory:
        return {k: np.array([]) for k in ("t", "local_sup_s", "local_sup_V", "global_energy")}
    g = trajectory[0].grid
    x0, x1, y0, y1 = subdomain
    if not (0 <= x0 < x1 <= g.lx and 0 <= y0 < y1 <= g.ly):
        raise DomainError(f"subdomain {subdomain} outside the box [0,{g.lx}]x[0,{g.ly}]")
    x, y, _ = g.coords()
    sel = np.broadcast_to((x >= x0) & (x <= x1) & (y >= y0) & (y <= y1), g.shape)
    out = {"t": [], "local_sup_s": [], "local_sup_V": [], "global_energy": []}
    for st in trajectory:
        out["t"].append(st.time)
        out["local_sup_s"].append(float(np.max(np.abs(st.s[sel]))))
        vmag = np.sqrt(np.sum(st.V ** 2, axis=0))
        out["local_sup_V"].append(float(np.max(vmag[sel])))
        out["global_energy"].append(acoustic_energy(st, params) if params else np.nan)
    return {k: np.array(v) for k, v in out.items()}


def central_unit_subdomain(grid: Grid):
    cx, cy = grid.lx / 2, grid.ly / 2
    return (cx - 0.5, cx + 0.5, cy - 0.5, cy + 0.5)
