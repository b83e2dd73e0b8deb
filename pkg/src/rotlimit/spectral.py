"""Periodic pseudo-spectral grid on [0, lx) x [0, ly) x [0, 1).

Fields are plain ``numpy`` arrays of shape ``grid.shape`` (scalars) or
``(ncomp,) + grid.shape`` (vectors).  Horizontal (x3-independent) fields use
a grid with ``nz == 1``; they broadcast against any 3D grid of the same
horizontal resolution.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .thermo import DimensionError, DomainError

log = logging.getLogger(__name__)

LZ = 1.0
_AXES = (-3, -2, -1)


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    nz: int = 1
    lx: float = 2 * np.pi
    ly: float = 2 * np.pi

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise DomainError("nx, ny must be at least 4")
        if not all(_is_pow2(n) for n in (self.nx, self.ny, self.nz)):
            raise DomainError("mode counts must be powers of two")
        if not (self.lx > 0 and self.ly > 0):
            raise DomainError("box periods must be positive")

    # geometry -------------------------------------------------------------
    @property
    def lz(self) -> float:
        return LZ

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (self.lx / self.nx, self.ly / self.ny, LZ / self.nz)

    @property
    def min_spacing(self) -> float:
        """Smallest spacing over the axes that actually resolve variation."""
        dx, dy, dz = self.spacing
        return min(dx, dy) if self.nz == 1 else min(dx, dy, dz)

    @property
    def volume(self) -> float:
        return self.lx * self.ly * LZ

    def horizontal(self) -> "Grid":
        return Grid(self.nx, self.ny, 1, self.lx, self.ly)

    def coords(self):
        """Node coordinates as broadcastable arrays (x1, x2, x3)."""
        dx, dy, dz = self.spacing
        x = (np.arange(self.nx) * dx)[:, None, None]
        y = (np.arange(self.ny) * dy)[None, :, None]
        z = (np.arange(self.nz) * dz)[None, None, :]
        return x, y, z

    def mesh(self):
        x, y, z = self.coords()
        return np.broadcast_arrays(x, y, z)

    # wavenumbers ----------------------------------------------------------
    @cached_property
    def _k(self):
        kx = 2 * np.pi * np.fft.fftfreq(self.nx, self.lx / self.nx)
        ky = 2 * np.pi * np.fft.fftfreq(self.ny, self.ly / self.ny)
        kz = 2 * np.pi * np.fft.rfftfreq(self.nz, LZ / self.nz)
        return kx[:, None, None], ky[None, :, None], kz[None, None, :]

    @cached_property
    def _kd(self):
        # derivative wavenumbers: Nyquist entries zeroed so odd derivatives stay real
        kx, ky, kz = (k.copy() for k in self._k)
        kx[self.nx // 2] = 0.0
        ky[:, self.ny // 2] = 0.0
        if self.nz > 1:
            kz[..., -1] = 0.0
        return kx, ky, kz

    @property
    def wavenumbers(self):
        return self._k

    @cached_property
    def k2_h(self):
        kx, ky, _ = self._k
        return kx ** 2 + ky ** 2 + 0.0 * self._k[2]

    @cached_property
    def dealias_mask(self):
        """True on modes kept by the 2/3 rule (|n| <= N/3 on every axis)."""
        nx = np.fft.fftfreq(self.nx, 1.0 / self.nx)[:, None, None]
        ny = np.fft.fftfreq(self.ny, 1.0 / self.ny)[None, :, None]
        nz = np.fft.rfftfreq(self.nz, 1.0 / self.nz)[None, None, :]
        return ((np.abs(nx) <= self.nx / 3) & (np.abs(ny) <= self.ny / 3)
                & (np.abs(nz) <= self.nz / 3))

    # transforms -----------------------------------------------------------
    def check(self, f, ncomp: int | None = None):
        f = np.asarray(f, dtype=float)
        want = self.shape if ncomp is None else (ncomp,) + self.shape
        if f.shape != want:
            raise DimensionError(f"field shape {f.shape} does not match grid {want}")
        return f

    def fft(self, f):
        return np.fft.rfftn(f, axes=_AXES)

    def ifft(self, fh):
        return np.fft.irfftn(fh, s=self.shape, axes=_AXES)

    def dealias(self, f):
        return self.ifft(self.fft(f) * self.dealias_mask)

    def is_dealiased(self, f, tol: float = 1e-12) -> bool:
        fh = self.fft(f)
        scale = max(np.max(np.abs(fh)), 1.0)
        return bool(np.max(np.abs(fh * ~self.dealias_mask)) <= tol * scale)

    def integrate(self, f):
        """Integral over the box (spectral mean times volume)."""
        return float(np.mean(f)) * self.volume

    # differential operators -----------------------------------------------
    def grad(self, f):
        f = self.check(f)
        fh = self.fft(f)
        return np.stack([self.ifft(1j * k * fh) for k in self._kd])

    def div(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[0] not in (2, 3):
            raise DimensionError("vector field needs 2 or 3 components")
        v = self.check(v, v.shape[0])
        acc = sum(1j * k * self.fft(v[i]) for i, k in enumerate(self._kd[: v.shape[0]]))
        return self.ifft(acc)

    def laplacian_h(self, f):
        f = self.check(f)
        return self.ifft(-self.k2_h * self.fft(f))

    def curl_h(self, v):
        v = np.asarray(v, dtype=float)
        v = self.check(v, v.shape[0])
        kx, ky, _ = self._kd
        return self.ifft(1j * kx * self.fft(v[1]) - 1j * ky * self.fft(v[0]))

    def perp_grad_h(self, f):
        """(-d2 f, d1 f, 0)."""
        f = self.check(f)
        fh = self.fft(f)
        kx, ky, _ = self._kd
        return np.stack([self.ifft(-1j * ky * fh), self.ifft(1j * kx * fh), np.zeros(self.shape)])

    def solve_helmholtz_h(self, f, alpha: float, return_projection: bool = False):
        """Solve (-Laplacian_h + alpha) q = f mode by mode.

        For alpha == 0 the horizontal mean of ``f`` is projected out first and
        the result has zero horizontal mean.
        """
        if alpha < 0:
            raise DomainError(f"alpha must be non-negative, got {alpha}")
        f = self.check(f)
        fh = self.fft(f)
        denom = self.k2_h + alpha
        removed = 0.0
        if alpha == 0:
            zero = self.k2_h == 0
            removed = float(np.max(np.abs(fh[np.broadcast_to(zero, fh.shape)]))) / f.size
            if removed > 0:
                log.debug("solve_helmholtz_h: projected out mean of size %.3e", removed)
            fh = np.where(zero, 0.0, fh)
            denom = np.where(zero, 1.0, denom)
        q = self.ifft(fh / denom)
        return (q, removed) if return_projection else q

    # vertical structure ---------------------------------------------------
    def vertical_average(self, f):
        """Mean over x3 (exact for periodic samples); returns shape (nx, ny, 1)."""
        f = np.asarray(f, dtype=float)
        if f.shape[-3:] != self.shape:
            raise DimensionError(f"field shape {f.shape} does not match grid {self.shape}")
        return f.mean(axis=-1, keepdims=True)

    def lift(self, f_h):
        """Broadcast a horizontal field to this grid, x3-independently."""
        f_h = np.asarray(f_h, dtype=float)
        if f_h.shape[-3:] != (self.nx, self.ny, 1):
            raise DimensionError(f"horizontal field shape {f_h.shape} incompatible with {self.shape}")
        return np.broadcast_to(f_h, f_h.shape[:-3] + self.shape).copy()

    def reflect_z(self, f):
        """f(x_h, -x3) sampled on the grid."""
        idx = (-np.arange(self.nz)) % self.nz
        return np.take(f, idx, axis=-1)

    def parity_part(self, f, parity: int):
        """Even (parity=+1) or odd (parity=-1) part in x3."""
        return 0.5 * (f + parity * self.reflect_z(f))

    def project_symmetry(self, rho, mom):
        """Project onto the slip-symmetric class: rho, m_h even and m3 odd in x3."""
        rho = self.check(rho)
        mom = self.check(mom, 3)
        m = np.stack([self.parity_part(mom[0], 1), self.parity_part(mom[1], 1),
                      self.parity_part(mom[2], -1)])
        return self.parity_part(rho, 1), m
