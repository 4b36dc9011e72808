"""Uniform periodic discretization of the unit circle with spectral operators.

The grid covers [0, 2*pi) with no duplicated endpoint. Derivatives and the
diffusion propagator act mode-by-mode through the real FFT; integration is
the rectangle rule, which is spectrally accurate for smooth periodic data.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class CircleGrid:
    """Collocation grid theta_j = 2*pi*j/n_theta, j = 0..n_theta-1."""

    n_theta: int

    def __post_init__(self) -> None:
        if self.n_theta % 2 != 0 or self.n_theta < 8:
            raise ValueError(f"n_theta must be even and >= 8, got {self.n_theta}")

    @property
    def d_theta(self) -> float:
        return TWO_PI / self.n_theta

    @cached_property
    def theta(self) -> FloatArray:
        th = np.arange(self.n_theta) * self.d_theta
        th.setflags(write=False)
        return th

    @cached_property
    def cos_theta(self) -> FloatArray:
        c = np.cos(self.theta)
        c.setflags(write=False)
        return c

    @cached_property
    def sin_theta(self) -> FloatArray:
        s = np.sin(self.theta)
        s.setflags(write=False)
        return s

    @cached_property
    def wavenumbers(self) -> FloatArray:
        """Nonnegative mode numbers 0..n/2 of the real FFT."""
        k = np.arange(self.n_theta // 2 + 1, dtype=np.float64)
        k.setflags(write=False)
        return k

    @cached_property
    def _ik_first(self) -> NDArray[np.complex128]:
        # Nyquist mode derivative set to zero: keeps real fields real and
        # makes the discrete d/dtheta exactly skew-symmetric.
        ik = 1j * self.wavenumbers
        ik = ik.copy()
        ik[-1] = 0.0
        ik.setflags(write=False)
        return ik

    @cached_property
    def _minus_k2(self) -> FloatArray:
        m = -self.wavenumbers**2
        m.setflags(write=False)
        return m

    @cached_property
    def dealias_keep(self) -> NDArray[np.bool_]:
        """2/3-rule mask over rfft modes (True = keep)."""
        keep = self.wavenumbers <= self.n_theta / 3.0
        keep.setflags(write=False)
        return keep

    # -- array-level operators (hot path; Field wrappers below) --

    def deriv(self, values: FloatArray) -> FloatArray:
        """Spectral d/dtheta of one sample row."""
        return np.fft.irfft(self._ik_first * np.fft.rfft(values), n=self.n_theta)

    def deriv2(self, values: FloatArray) -> FloatArray:
        """Spectral d^2/dtheta^2 of one sample row."""
        return np.fft.irfft(self._minus_k2 * np.fft.rfft(values), n=self.n_theta)

    def deriv_rows(self, rows: FloatArray) -> FloatArray:
        """Spectral d/dtheta applied to every row of a stacked array."""
        return np.fft.irfft(self._ik_first[None, :] * np.fft.rfft(rows, axis=1), n=self.n_theta, axis=1)

    def quad(self, values: FloatArray) -> float:
        """Integral over the circle (rectangle rule on the periodic grid)."""
        return float(values.sum()) * self.d_theta

    def quad_rows(self, rows: FloatArray) -> FloatArray:
        """Row-wise circle integral of a stacked (n_rows, n_theta) array."""
        return rows.sum(axis=-1) * self.d_theta

    def heat_multiplier(self, diffusion: float, dt: float) -> FloatArray:
        """rfft-mode factors exp(-D k^2 dt) of the exact diffusion propagator."""
        if diffusion < 0.0:
            raise ValueError(f"diffusion coefficient must be >= 0, got {diffusion}")
        if dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {dt}")
        return np.exp(self._minus_k2 * (diffusion * dt))


@dataclass(frozen=True)
class Field:
    """One real-valued sample on a CircleGrid (density, adjoint, control slice).

    Value type: the sample array is copied on construction and locked
    read-only, so Fields are safe to share across threads.
    """

    grid: CircleGrid
    values: FloatArray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.float64)
        if v.shape != (self.grid.n_theta,):
            raise ValueError(
                f"Field length {v.shape} does not match grid n_theta={self.grid.n_theta}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("Field values must all be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: CircleGrid, fn) -> "Field":
        return cls(grid, np.asarray(fn(grid.theta), dtype=np.float64))

    @classmethod
    def constant(cls, grid: CircleGrid, value: float) -> "Field":
        return cls(grid, np.full(grid.n_theta, value))


def require_same_grid(*fields: Field) -> CircleGrid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ValueError("fields live on different grids")
    return grid


def ddtheta(f: Field) -> Field:
    """Spectral derivative; exact for resolved modes, Nyquist mode dropped."""
    return Field(f.grid, f.grid.deriv(f.values))


def d2dtheta2(f: Field) -> Field:
    """Spectral second derivative (multiplier -k^2, Nyquist included)."""
    return Field(f.grid, f.grid.deriv2(f.values))


def integrate(f: Field) -> float:
    """Integral of f over the circle."""
    return f.grid.quad(f.values)


def diffuse(f: Field, diffusion: float, dt: float) -> Field:
    """Propagate f through the heat semigroup exp(D dt d^2/dtheta^2).

    Mode 0 is untouched, so the integral of f is preserved exactly; D = 0 is
    the exact identity.
    """
    mult = f.grid.heat_multiplier(diffusion, dt)
    if diffusion == 0.0:
        return f
    return Field(f.grid, np.fft.irfft(mult * np.fft.rfft(f.values), n=f.grid.n_theta))


def random_bandlimited(
    grid: CircleGrid,
    rng: np.random.Generator,
    k_max: int | None = None,
    scale: float = 1.0,
) -> Field:
    """Random smooth field with spectral content confined below k_max.

    Normalized so the sample RMS equals `scale` regardless of resolution.
    Used by property tests and control perturbations; band-limiting keeps
    every spectral identity exact at any tested resolution.
    """
    if k_max is None:
        k_max = grid.n_theta // 4
    k_max = min(k_max, grid.n_theta // 2 - 1)
    coef = np.zeros(grid.n_theta // 2 + 1, dtype=np.complex128)
    coef[: k_max + 1] = rng.standard_normal(k_max + 1) + 1j * rng.standard_normal(k_max + 1)
    coef[0] = coef[0].real
    values = np.fft.irfft(coef, n=grid.n_theta)
    rms = float(np.sqrt(np.mean(values**2)))
    return Field(grid, values * (scale / rms))
