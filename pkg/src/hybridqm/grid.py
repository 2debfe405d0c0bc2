"""Uniform periodic grid and the unitary Fourier transform pair.

Position samples sit at ``x_j = x_min + j*dx``; momentum samples use the
FFT ordering of ``k = 2*pi*fftfreq(n, dx)``.  Momentum-space values are
normalised as samples of the continuum unitary transform

    psi~(k) = (2 pi)^(-1/2) * integral psi(x) exp(-i k x) dx,

so that Parseval reads ``sum |psi|^2 dx == sum |psi~|^2 dk`` with no extra
bookkeeping.  Internally this is numpy's ``norm="ortho"`` FFT times a
constant and an ``exp(-i k x_min)`` phase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, ConsistencyError, ShapeError

#: Relative edge amplitude above which periodic images are considered to leak.
LEAK_THRESHOLD = 1e-8


@dataclass(frozen=True)
class Grid1D:
    """Uniform position grid with its conjugate wavenumber grid.

    Immutable; the coordinate arrays are computed lazily and cached.
    """

    n_points: int
    x_min: float
    x_max: float

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 16 or n & (n - 1):
            raise ConfigurationError(
                f"n_points must be a power of two >= 16, got {n!r}", field="grid.n_points")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ConfigurationError("grid bounds must be finite", field="grid.x_min")
        if self.x_max <= self.x_min:
            raise ConfigurationError(
                f"x_max ({self.x_max}) must exceed x_min ({self.x_min})", field="grid.x_max")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @property
    def dk(self) -> float:
        return 2.0 * math.pi / (self.n_points * self.dx)

    @property
    def k_max(self) -> float:
        return math.pi / self.dx

    @cached_property
    def x(self) -> np.ndarray:
        x = self.x_min + self.dx * np.arange(self.n_points)
        x.flags.writeable = False
        return x

    @cached_property
    def k_values(self) -> np.ndarray:
        k = 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)
        k.flags.writeable = False
        return k

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(-i k x_min) times the ortho-FFT -> continuum-transform scale
        scale = math.sqrt(self.n_points) * self.dx / math.sqrt(2.0 * math.pi)
        ph = scale * np.exp(-1j * self.k_values * self.x_min)
        ph.flags.writeable = False
        return ph

    def mode_index(self, k: float, tol: float = 1e-9) -> int:
        """Return the FFT-ordered index of the grid mode equal to ``k``.

        Raises ``ConfigurationError`` if ``k`` is not a grid mode.
        """
        m = k / self.dk
        mi = int(round(m))
        if abs(m - mi) > tol or not (-self.n_points // 2 <= mi < self.n_points // 2):
            raise ConfigurationError(f"k={k!r} is not a mode of this grid (dk={self.dk!r})")
        return mi % self.n_points

    def forward(self, values_x: np.ndarray) -> np.ndarray:
        """Position samples -> momentum samples."""
        values_x = self._check(values_x)
        return np.fft.fft(values_x, norm="ortho") * self._phase

    def inverse(self, values_k: np.ndarray) -> np.ndarray:
        """Momentum samples -> position samples."""
        values_k = self._check(values_k)
        return np.fft.ifft(values_k / self._phase, norm="ortho")

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        """Discrete position-space inner product ``sum conj(f) g dx``."""
        return complex(np.vdot(f, g)) * self.dx

    def norm(self, f: np.ndarray) -> float:
        return math.sqrt(float(np.vdot(f, f).real) * self.dx)

    def _check(self, a):
        a = np.asarray(a)
        if a.shape != (self.n_points,):
            raise ShapeError(f"expected {self.n_points} samples, got shape {a.shape}")
        return a


def make_grid(n_points: int, x_min: float, x_max: float) -> Grid1D:
    return Grid1D(int(n_points) if isinstance(n_points, (int, np.integer)) else n_points,
                  float(x_min), float(x_max))


class SpectralField:
    """Complex samples on a grid, held in position and/or momentum form.

    Either representation may be supplied; the other is computed on first
    access and cached.  Fields are treated as values: operations return new
    instances and never mutate the stored arrays.
    """

    __slots__ = ("grid", "_x", "_k")

    def __init__(self, grid: Grid1D, values_x=None, values_k=None):
        if values_x is None and values_k is None:
            raise ValueError("SpectralField needs values_x or values_k")
        self.grid = grid
        self._x = None if values_x is None else self._freeze(grid._check(values_x))
        self._k = None if values_k is None else self._freeze(grid._check(values_k))

    @staticmethod
    def _freeze(a):
        a = np.array(a, dtype=complex)
        a.flags.writeable = False
        return a

    @classmethod
    def from_x(cls, grid, values_x):
        return cls(grid, values_x=values_x)

    @classmethod
    def from_k(cls, grid, values_k):
        return cls(grid, values_k=values_k)

    @property
    def values_x(self) -> np.ndarray:
        if self._x is None:
            self._x = self._freeze(self.grid.inverse(self._k))
        return self._x

    @property
    def values_k(self) -> np.ndarray:
        if self._k is None:
            self._k = self._freeze(self.grid.forward(self._x))
        return self._k

    def check_consistency(self, rtol: float = 1e-10) -> None:
        """Raise ``ConsistencyError`` if both cached forms disagree."""
        if self._x is None or self._k is None:
            return
        ref = max(np.linalg.norm(self._x), 1e-300)
        err = np.linalg.norm(self.grid.inverse(self._k) - self._x)
        if err > rtol * ref:
            raise ConsistencyError(f"cached representations differ (rel. error {err / ref:.3e})")

    def norm(self) -> float:
        return self.grid.norm(self.values_x)

    def inner(self, other: "SpectralField") -> complex:
        _same_grid(self, other)
        return self.grid.inner(self.values_x, other.values_x)

    def scaled(self, c) -> "SpectralField":
        if self._x is not None:
            return SpectralField(self.grid, values_x=c * self._x)
        return SpectralField(self.grid, values_k=c * self._k)

    def __add__(self, other):
        _same_grid(self, other)
        return SpectralField(self.grid, values_x=self.values_x + other.values_x)

    def __sub__(self, other):
        _same_grid(self, other)
        return SpectralField(self.grid, values_x=self.values_x - other.values_x)

    def __repr__(self):
        return f"SpectralField(n_points={self.grid.n_points}, norm={self.norm():.6g})"


def _same_grid(a, b):
    if a.grid != b.grid:
        raise ShapeError("fields live on different grids")


def forward(psi: SpectralField) -> SpectralField:
    """Return a field whose canonical data is the momentum representation."""
    return SpectralField(psi.grid, values_k=psi.values_k)


def inverse(phi: SpectralField) -> SpectralField:
    return SpectralField(phi.grid, values_x=phi.values_x)


def apply_multiplier(psi: SpectralField, sigma) -> SpectralField:
    """Apply the Fourier multiplier ``sigma(k)`` (sampled on ``k_values``)."""
    sigma = np.asarray(sigma)
    if sigma.shape != (psi.grid.n_points,):
        raise ShapeError(
            f"multiplier has shape {sigma.shape}, grid has {psi.grid.n_points} points")
    return SpectralField(psi.grid, values_k=sigma * psi.values_k)


def boundary_leak(psi: SpectralField, edge_points: int = 4) -> float:
    """Largest edge amplitude relative to the peak amplitude.

    Values above ``LEAK_THRESHOLD`` mean the periodic box is no longer a
    faithful stand-in for the real line.
    """
    a = np.abs(psi.values_x)
    peak = a.max()
    if peak == 0.0:
        return 0.0
    edge = max(a[:edge_points].max(), a[-edge_points:].max())
    return float(edge / peak)
