"""Discretised hybrid operators acting on grid wavefunctions.

Momentum-diagonal operators are Fourier multipliers; ``x`` and ``V(x)``
act pointwise.  Mixed products are applied representation by
representation, so nothing here builds a dense matrix.
"""
from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import zeta

from .errors import BoundaryLeakWarning, ConfigurationError, ShapeError
from .grid import LEAK_THRESHOLD, Grid1D, SpectralField, apply_multiplier, boundary_leak
from .states import WaveFunction
from .symbols import (HybridParams, commutator_multiplier, group_velocity, hybrid_symbol,
                      kinetic_symbol, power_symbol)

#: Environment variable used by the self-test fault injection.
FAULT_ENV = "HYBRIDQM_FAULT"


@dataclass(frozen=True, eq=False)
class Potential:
    """Real potential sampled on the grid."""

    grid: Grid1D
    samples: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.shape != (self.grid.n_points,):
            raise ShapeError(f"potential has shape {s.shape}, grid has {self.grid.n_points} points")
        if not np.all(np.isfinite(s)):
            raise ConfigurationError("potential samples must be finite", field="potential")
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @property
    def lower_bound(self) -> float:
        return float(self.samples.min())

    def is_zero(self) -> bool:
        return not np.any(self.samples)


def zero_potential(grid: Grid1D) -> Potential:
    return Potential(grid, np.zeros(grid.n_points), "none")


def constant_potential(grid: Grid1D, value: float) -> Potential:
    return Potential(grid, np.full(grid.n_points, float(value)), "constant")


def harmonic(grid: Grid1D, omega: float, mass: float = 1.0, center: float = 0.0) -> Potential:
    """``m omega^2 (x - center)^2 / 2``."""
    return Potential(grid, 0.5 * mass * omega ** 2 * (grid.x - center) ** 2, "harmonic")


def quartic(grid: Grid1D, lam: float, center: float = 0.0) -> Potential:
    """``lam (x - center)^4``."""
    if lam < 0:
        raise ConfigurationError("quartic lambda must be non-negative", field="potential.lambda")
    return Potential(grid, lam * (grid.x - center) ** 4, "quartic")


def square_well(grid: Grid1D, depth: float, width: float, center: float = 0.0) -> Potential:
    """``-depth`` inside ``|x - center| < width/2``, zero outside."""
    if width <= 0:
        raise ConfigurationError("well width must be positive", field="potential.width")
    inside = np.abs(grid.x - center) < 0.5 * width
    return Potential(grid, np.where(inside, -float(depth), 0.0), "well")


def table_potential(grid: Grid1D, path) -> Potential:
    """Two-column text table ``x V`` linearly interpolated onto the grid."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"potential table {str(path)!r} not found", field="potential.file")
    try:
        data = np.loadtxt(path, ndmin=2)
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse potential table: {exc}", field="potential.file") from exc
    if data.shape[1] != 2 or data.shape[0] < 2:
        raise ConfigurationError("potential table needs two columns and at least two rows",
                                 field="potential.file")
    order = np.argsort(data[:, 0])
    xt, vt = data[order, 0], data[order, 1]
    if grid.x[0] < xt[0] or grid.x[-1] > xt[-1]:
        raise ConfigurationError(
            f"grid [{grid.x[0]:.6g}, {grid.x[-1]:.6g}] extends outside table range "
            f"[{xt[0]:.6g}, {xt[-1]:.6g}]", field="potential.file")
    return Potential(grid, np.interp(grid.x, xt, vt), "table")


def _singular_bin_multiplier(params: HybridParams, dk: float) -> float:
    """Value of ``M(hbar k)`` on a grid cell sitting on a zero of the sine.

    Near such a zero ``|A sin| ~ hbar |eps/(q-1)| |k - k_n|``, an integrable
    ``|k|^b`` singularity with ``b = alpha/2 - 1``.  The bin value is the
    generalised Euler-Maclaurin endpoint weight ``-2 zeta(-b) dk^b`` so that
    rectangle-rule spectral means of ``M`` stay accurate to high order; for
    ``alpha = 2`` it reduces to one.
    """
    b = 0.5 * params.alpha - 1.0
    slope = params.hbar * abs(params.jacobian())
    return 0.5 * params.alpha * slope ** b * (-2.0 * float(zeta(-b))) * dk ** b if b else 1.0


@dataclass(frozen=True, eq=False)
class HybridOperatorSet:
    """Sampled symbols of the hybrid operators on one grid.

    ``m_symbol`` is the commutator multiplier ``M(hbar k)``; ``dpi_symbol``
    is the exact derivative ``dPi/dp`` that the discrete commutator
    ``[x, p]`` realises.  Grid cells sitting on a zero of the deformed sine
    carry a finite quadrature weight for the integrable singularity when
    ``alpha < 2``.
    """

    params: HybridParams
    grid: Grid1D
    pi_symbol: np.ndarray
    kinetic_sym: np.ndarray
    vg_symbol: np.ndarray
    m_symbol: np.ndarray
    dpi_symbol: np.ndarray

    def check(self, psi) -> SpectralField:
        f = psi.field if isinstance(psi, WaveFunction) else psi
        if f.grid != self.grid:
            raise ShapeError("state and operators live on different grids")
        return f


def build_operators(params: HybridParams, grid: Grid1D) -> HybridOperatorSet:
    """Sample every symbol on ``grid.k_values``.

    Raises ``ConfigurationError`` if the grid covers more than the principal
    band but samples the band period with fewer than 16 points.
    """
    eps = abs(params.eps())
    if eps * grid.k_max > math.pi:
        period = 2.0 * math.pi / eps
        if grid.dk > period / 16.0:
            need_len = 16.0 * eps
            n_sugg = 1 << max(4, math.ceil(math.log2(need_len / grid.dx)))
            raise ConfigurationError(
                f"band period 2*pi/|ln q| = {period:.4g} is sampled with dk = {grid.dk:.4g} "
                f"(> period/16); use a box of length >= {need_len:.4g}, e.g. n_points = {n_sugg} "
                f"at the current dx", field="grid.n_points")
    k = grid.k_values
    pi = hybrid_symbol(params, k)
    kin = kinetic_symbol(params, k)
    if os.environ.get(FAULT_ENV) == "kinetic_asymmetry":
        kin = kin + 1e-3j * kin
    vg = group_velocity(params, k)

    half = k * (0.5 * params.eps())
    s = np.sin(half)
    zero = np.abs(s) < 1e-12
    with np.errstate(divide="ignore"):
        m = np.asarray(commutator_multiplier(params, params.hbar * k), dtype=float)
    if params.alpha < 2.0 and np.any(zero):
        m = np.where(zero, _singular_bin_multiplier(params, grid.dk) * np.sign(np.cos(half)), m)
    # on the principal band dPi/dp = jacobian * M; sgn(k) sgn(sin) restores odd bands
    sk = np.where(k == 0.0, 1.0, np.sign(k))
    ss = np.where(zero, sk, np.sign(s * params.eps()))
    dpi = m * params.jacobian() * sk * ss
    for a in (pi, kin, vg, m, dpi):
        a.flags.writeable = False
    return HybridOperatorSet(params, grid, pi, kin, vg, m, dpi)


def apply_momentum(ops: HybridOperatorSet, psi) -> SpectralField:
    return apply_multiplier(ops.check(psi), ops.pi_symbol)


def apply_momentum_power(ops: HybridOperatorSet, psi, order: float) -> SpectralField:
    """``p_{q,order}`` with the same sign convention as the momentum symbol."""
    return apply_multiplier(ops.check(psi), power_symbol(ops.params, ops.grid.k_values, order))


def apply_kinetic(ops: HybridOperatorSet, psi) -> SpectralField:
    return apply_multiplier(ops.check(psi), ops.kinetic_sym)


def apply_potential(ops: HybridOperatorSet, V: Potential | None, psi) -> SpectralField:
    f = ops.check(psi)
    if V is None:
        return SpectralField.from_x(ops.grid, np.zeros(ops.grid.n_points))
    if V.grid != ops.grid:
        raise ShapeError("potential and operators live on different grids")
    return SpectralField.from_x(ops.grid, V.samples * f.values_x)


def apply_hamiltonian(ops: HybridOperatorSet, V: Potential | None, psi) -> SpectralField:
    f = ops.check(psi)
    kf = apply_kinetic(ops, f)
    if V is None:
        return kf
    return SpectralField.from_x(ops.grid, kf.values_x + apply_potential(ops, V, f).values_x)


def apply_velocity(ops: HybridOperatorSet, psi) -> SpectralField:
    return apply_multiplier(ops.check(psi), ops.vg_symbol)


def commutator_x_p(ops: HybridOperatorSet, psi) -> SpectralField:
    """``(x p - p x) psi`` computed by mixed-representation application.

    Emits :class:`BoundaryLeakWarning` when ``psi`` does not decay at the
    box edges, where the periodic ``x`` is discontinuous.
    """
    f = ops.check(psi)
    if boundary_leak(f) > LEAK_THRESHOLD:
        warnings.warn("state reaches the box edge; commutator unreliable", BoundaryLeakWarning,
                      stacklevel=2)
    x = ops.grid.x
    xp = x * apply_momentum(ops, f).values_x
    px = apply_momentum(ops, SpectralField.from_x(ops.grid, x * f.values_x)).values_x
    return SpectralField.from_x(ops.grid, xp - px)


def semigroup_remainder(params: HybridParams, grid: Grid1D, beta: float, gamma: float, psi) -> float:
    """``|| p_beta p_gamma psi - p_(beta+gamma) psi ||``."""
    if not (beta > 0 and gamma > 0 and beta + gamma <= 2.0):
        raise ConfigurationError(f"need beta, gamma > 0 and beta + gamma <= 2, got {beta}, {gamma}")
    f = psi.field if isinstance(psi, WaveFunction) else psi
    if f.grid != grid:
        raise ShapeError("state is not on the given grid")
    k = grid.k_values
    comp = power_symbol(params, k, beta) * power_symbol(params, k, gamma)
    direct = power_symbol(params, k, beta + gamma)
    diff = (comp - direct) * f.values_k
    return math.sqrt(float(np.vdot(diff, diff).real) * grid.dk)


def force_field(ops: HybridOperatorSet, V: Potential, psi) -> SpectralField:
    """``F psi = (i/hbar) [V, p] psi``, which tends to ``-V'(x) psi`` as q -> 1, alpha -> 2."""
    f = ops.check(psi)
    vp = V.samples * apply_momentum(ops, f).values_x
    pv = apply_momentum(ops, SpectralField.from_x(ops.grid, V.samples * f.values_x)).values_x
    return SpectralField.from_x(ops.grid, (1j / ops.params.hbar) * (vp - pv))


def kernel_column(ops: HybridOperatorSet, x_index: int) -> np.ndarray:
    """Kinetic kernel ``K(x, x_index)``: the operator applied to a grid delta ``1/dx``."""
    n = ops.grid.n_points
    if not (0 <= x_index < n):
        raise IndexError(f"x_index {x_index} outside [0, {n})")
    imp = np.zeros(n, dtype=complex)
    imp[x_index] = 1.0 / ops.grid.dx
    return apply_kinetic(ops, SpectralField.from_x(ops.grid, imp)).values_x.copy()


def expectation(ops: HybridOperatorSet, psi, applied: SpectralField) -> complex:
    f = ops.check(psi)
    return ops.grid.inner(f.values_x, applied.values_x)


def hermiticity_defect(grid: Grid1D, op, f: SpectralField, g: SpectralField) -> float:
    """``|<f, A g> - <A f, g>| / (||f|| ||g||)`` for a linear map ``op``."""
    lhs = grid.inner(f.values_x, op(g).values_x)
    rhs = grid.inner(op(f).values_x, g.values_x)
    return abs(lhs - rhs) / (f.norm() * g.norm())
