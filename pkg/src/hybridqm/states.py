"""Wavefunctions on a :class:`~hybridqm.grid.Grid1D` and their moments."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .errors import ConfigurationError
from .grid import Grid1D, SpectralField
from .symbols import HybridParams, hybrid_symbol

#: Fraction of spectral weight in the k = 0 bin above which log-moments are unreliable.
LOG_BIN_LIMIT = 1e-3


class WaveFunction:
    """Normalised state on a grid.

    Parameters
    ----------
    field : SpectralField
        Samples of the state.  Rescaled to unit norm unless ``normalize``
        is False, in which case the norm must already be within
        ``norm_tolerance`` of one.
    norm_tolerance : float
        Allowed deviation of ``||psi||^2`` from one.
    """

    __slots__ = ("field", "norm_tolerance")

    def __init__(self, field: SpectralField, norm_tolerance: float = 1e-10, normalize: bool = True):
        nrm = field.norm()
        if not np.isfinite(nrm) or nrm == 0.0:
            raise ConfigurationError("cannot normalise a zero or non-finite state")
        if normalize:
            field = field.scaled(1.0 / nrm)
        elif abs(nrm * nrm - 1.0) > norm_tolerance:
            raise ConfigurationError(f"state norm^2 = {nrm * nrm!r} is not 1 within {norm_tolerance}")
        self.field = field
        self.norm_tolerance = norm_tolerance

    @property
    def grid(self) -> Grid1D:
        return self.field.grid

    @property
    def values_x(self) -> np.ndarray:
        return self.field.values_x

    @property
    def values_k(self) -> np.ndarray:
        return self.field.values_k

    def norm(self) -> float:
        return self.field.norm()

    def density_k(self) -> np.ndarray:
        return np.abs(self.values_k) ** 2

    def __repr__(self):
        return f"WaveFunction(n_points={self.grid.n_points}, norm={self.norm():.12f})"


def from_x(grid: Grid1D, values_x, normalize: bool = True) -> WaveFunction:
    return WaveFunction(SpectralField.from_x(grid, values_x), normalize=normalize)


def from_spectrum(grid: Grid1D, values_k, normalize: bool = True) -> WaveFunction:
    """State with the given momentum samples (FFT ordering of ``grid.k_values``)."""
    return WaveFunction(SpectralField.from_k(grid, values_k), normalize=normalize)


def gaussian(grid: Grid1D, center_x: float, center_k: float, sigma: float) -> WaveFunction:
    """Minimum-uncertainty packet ``exp(-(x-x0)^2/(4 sigma^2) + i k0 x)``.

    ``sigma`` is the position standard deviation, so the canonical momentum
    spread is ``hbar / (2 sigma)``.
    """
    if not (sigma >= 4.0 * grid.dx):
        raise ConfigurationError(
            f"sigma={sigma} is below 4*dx={4 * grid.dx:.4g}; refine the grid",
            field="state.sigma")
    if sigma > grid.length / 8.0:
        raise ConfigurationError(
            f"sigma={sigma} exceeds (x_max - x_min)/8 = {grid.length / 8:.4g}; widen the box",
            field="state.sigma")
    x = grid.x
    psi = np.exp(-((x - center_x) ** 2) / (4.0 * sigma * sigma) + 1j * center_k * x)
    return from_x(grid, psi)


def two_mode_superposition(grid: Grid1D, k1: float, k2: float, phase: float = 0.0) -> WaveFunction:
    """Equal-weight superposition of the plane waves ``k1`` and ``k2``.

    Both must be exact grid modes.  The state is built directly in the
    momentum representation so it occupies exactly two bins.
    """
    i1 = grid.mode_index(k1)
    i2 = grid.mode_index(k2)
    if i1 == i2:
        raise ConfigurationError("two_mode needs distinct modes", field="state.k2_index")
    amp = 1.0 / math.sqrt(2.0 * grid.dk)
    phi = np.zeros(grid.n_points, dtype=complex)
    phi[i1] = amp
    phi[i2] = amp * np.exp(1j * phase)
    return from_spectrum(grid, phi, normalize=False)


def plane_wave(grid: Grid1D, k: float) -> WaveFunction:
    phi = np.zeros(grid.n_points, dtype=complex)
    phi[grid.mode_index(k)] = 1.0 / math.sqrt(grid.dk)
    return from_spectrum(grid, phi, normalize=False)


@dataclass(frozen=True)
class MomentSet:
    """Position, canonical-momentum and hybrid-momentum moments of a state.

    ``p2, p4, p6`` are raw moments of ``hbar k``.  ``log_p`` is
    ``<ln(|p|/p_ref)>`` and ``log_p_weighted`` is
    ``<(p/hbar)^2 ln(|p|/p_ref)>``.
    """

    mean_x: float
    var_x: float
    mean_p_std: float
    var_p_std: float
    p2: float
    p4: float
    p6: float
    mean_p_hybrid: float
    var_p_hybrid: float
    log_p: float
    log_p_weighted: float
    p_ref: float
    k0_weight: float = 0.0
    log_reliable: bool = True

    @property
    def dx(self) -> float:
        return math.sqrt(self.var_x)

    @property
    def dp_std(self) -> float:
        return math.sqrt(self.var_p_std)

    @property
    def dp_hybrid(self) -> float:
        return math.sqrt(self.var_p_hybrid)


def _zero_index(grid: Grid1D) -> int:
    return 0  # FFT ordering puts k = 0 first


def log_moment(psi: WaveFunction, hbar: float, p_ref: float) -> tuple[float, float]:
    """``<ln(hbar |k| / p_ref)>`` with the k = 0 singularity handled.

    The k = 0 sample is dropped and replaced by the endpoint corrections
    for a logarithmic singularity, ``rho(0) dk ln(dk / 2 pi)`` and a
    ``dk^3`` curvature term, which make the rule accurate to ``O(dk^5)``
    for smooth densities.  Returns the moment and the fraction of weight
    sitting in the k = 0 bin.
    """
    grid = psi.grid
    rho = psi.density_k()
    dk = grid.dk
    total = rho.sum() * dk
    k = grid.k_values
    i0 = _zero_index(grid)
    mask = np.ones(grid.n_points, dtype=bool)
    mask[i0] = False
    # next endpoint term: zeta'(-2) rho''(0) dk^3, with zeta'(-2) = -zeta(3)/(4 pi^2)
    d2 = (rho[i0 + 1] - 2.0 * rho[i0] + rho[i0 - 1]) / dk ** 2
    lnk = ((rho[mask] * np.log(np.abs(k[mask]))).sum() * dk + rho[i0] * dk * math.log(dk / (2 * math.pi))
           - float(zeta(3.0)) / (4 * math.pi ** 2) * d2 * dk ** 3)
    val = lnk / total + math.log(hbar / p_ref)
    return float(val), float(rho[i0] * dk / total)


def moments(psi: WaveFunction, params: HybridParams, p_ref: float | None = None) -> MomentSet:
    """All moments needed by the uncertainty and speed-limit bounds.

    ``p_ref`` defaults to ``hbar / Delta x``, the natural momentum scale of
    a Gaussian packet.
    """
    grid = psi.grid
    hbar = params.hbar
    dx_, dk = grid.dx, grid.dk
    rx = np.abs(psi.values_x) ** 2
    nx = rx.sum() * dx_
    x = grid.x
    mean_x = float((rx * x).sum() * dx_ / nx)
    var_x = float(max((rx * (x - mean_x) ** 2).sum() * dx_ / nx, 0.0))

    rho = psi.density_k()
    w = rho * dk / (rho.sum() * dk)
    p = hbar * grid.k_values
    mean_p = float((w * p).sum())
    p2 = float((w * p ** 2).sum())
    p4 = float((w * p ** 4).sum())
    p6 = float((w * p ** 6).sum())
    var_p = float(max((w * (p - mean_p) ** 2).sum(), 0.0))

    pi = hybrid_symbol(params, grid.k_values)
    mean_pi = float((w * pi).sum())
    var_pi = float(max((w * (pi - mean_pi) ** 2).sum(), 0.0))

    if p_ref is None:
        p_ref = hbar / math.sqrt(var_x) if var_x > 0 else hbar
    if not p_ref > 0:
        raise ConfigurationError("p_ref must be positive", field="p_ref")
    log_p, k0w = log_moment(psi, hbar, p_ref)
    k = grid.k_values
    with np.errstate(divide="ignore", invalid="ignore"):
        lw = np.where(k == 0.0, 0.0, k ** 2 * np.log(hbar * np.abs(k) / p_ref))
    log_w = float((w * lw).sum())
    return MomentSet(mean_x=mean_x, var_x=var_x, mean_p_std=mean_p, var_p_std=var_p,
                     p2=p2, p4=p4, p6=p6, mean_p_hybrid=mean_pi, var_p_hybrid=var_pi,
                     log_p=log_p, log_p_weighted=log_w, p_ref=float(p_ref),
                     k0_weight=k0w, log_reliable=k0w <= LOG_BIN_LIMIT)


def random_state(grid: Grid1D, rng: np.random.Generator, width: float | None = None) -> WaveFunction:
    """Random normalised state: complex white noise under a Gaussian envelope.

    ``width`` is the envelope standard deviation (default an eighth of the
    box), which keeps the state clear of the periodic edges.
    """
    if width is None:
        width = grid.length / 16.0
    c = 0.5 * (grid.x_min + grid.x_max)
    env = np.exp(-((grid.x - c) ** 2) / (4.0 * width * width))
    noise = rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)
    return from_x(grid, env * noise)
