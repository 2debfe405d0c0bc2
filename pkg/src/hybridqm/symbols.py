"""Closed-form symbols of the hybrid (q, alpha) calculus.

All functions accept scalars or numpy arrays for the wavenumber/momentum
argument and broadcast element-wise.  The fractional power of the
deformed sine is taken on its magnitude with the sign carried by
``sgn(k)``, which keeps the momentum symbol real and odd on every band.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError

#: Below this ``|q - 1|`` the amplitude ``2 hbar / (q - 1)`` is built from ``expm1(ln q)``.
NEAR_DEGENERATE = 1e-6
#: Smallest admissible ``|q - 1|``.
MIN_DEFORMATION = 1e-10
#: Curvature magnitude below which the effective mass is reported as infinite.
FLAT_CURVATURE = 1e-14


@dataclass(frozen=True)
class HybridParams:
    """Deformation ``q``, fractional order ``alpha`` and the units ``hbar``, ``mass``."""

    q: float
    alpha: float
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        for name in ("q", "alpha", "hbar", "mass"):
            v = getattr(self, name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v):
                raise ConfigurationError(f"{name} must be a finite real number, got {v!r}",
                                         field=f"params.{name}")
        if self.q <= 0:
            raise ConfigurationError(f"q must be positive, got {self.q}", field="params.q")
        if abs(self.q - 1.0) < MIN_DEFORMATION:
            raise ConfigurationError(
                "q must differ from 1 by at least 1e-10 (HybridParams invariant q != 1); "
                "approach the undeformed limit with q = 1 +/- eta", field="params.q")
        if not (1.0 < self.alpha <= 2.0):
            raise ConfigurationError(f"alpha must lie in (1, 2], got {self.alpha}",
                                     field="params.alpha")
        if self.hbar <= 0:
            raise ConfigurationError("hbar must be positive", field="params.hbar")
        if self.mass <= 0:
            raise ConfigurationError("mass must be positive", field="params.mass")

    def eps(self) -> float:
        """``ln q``."""
        return math.log1p(self.q - 1.0)

    def delta(self) -> float:
        """``2 - alpha``."""
        return 2.0 - self.alpha

    def d_alpha(self) -> float:
        return (2.0 * self.mass) ** (-self.alpha / 2.0)

    def q_minus_one(self) -> float:
        if abs(self.q - 1.0) < NEAR_DEGENERATE:
            return math.expm1(self.eps())
        return self.q - 1.0

    def amplitude(self) -> float:
        """Signed prefactor ``2 hbar / (q - 1)`` of the deformed sine."""
        return 2.0 * self.hbar / self.q_minus_one()

    def e_max(self) -> float:
        """Upper edge of the kinetic spectrum."""
        return self.d_alpha() * abs(self.amplitude()) ** self.alpha

    def jacobian(self) -> float:
        """``ln q / (q - 1)``: slope of ``(2 hbar/(q-1)) sin(p ln q / 2 hbar)`` at ``p = 0``."""
        return self.eps() / self.q_minus_one()

    def band_edge(self) -> float:
        """Wavenumber ``pi / |ln q|`` where the deformed sine peaks."""
        return math.pi / abs(self.eps())

    def with_(self, **changes) -> "HybridParams":
        return replace(self, **changes)


def _sine(p: HybridParams, k):
    """``A sin(k ln q / 2)`` and ``cos(k ln q / 2)``."""
    half = np.asarray(k, dtype=float) * (0.5 * p.eps())
    return p.amplitude() * np.sin(half), np.cos(half)


def power_symbol(p: HybridParams, k, order: float):
    """``|A sin(k ln q / 2)|^(order/2) sgn(k)`` for an arbitrary positive order."""
    base, _ = _sine(p, k)
    return np.abs(base) ** (0.5 * order) * np.sign(k)


def hybrid_symbol(p: HybridParams, k):
    """Hybrid momentum symbol ``Pi(k)``; odd in ``k`` and bounded by ``|A|^(alpha/2)``."""
    return power_symbol(p, k, p.alpha)


def kinetic_symbol(p: HybridParams, k):
    """Dispersion ``E(k) = D_alpha |A sin(k ln q / 2)|^alpha``.

    Identical to ``D_alpha [2 hbar^2 (1 - cos(k ln q)) / (q-1)^2]^(alpha/2)``
    but evaluated through the half-angle sine to avoid cancellation near
    ``k = 0``.
    """
    base, _ = _sine(p, k)
    return p.d_alpha() * np.abs(base) ** p.alpha


def group_velocity(p: HybridParams, k):
    """``dE/d(hbar k)``; zero at the band minima (where ``alpha < 2`` makes E a cusp)."""
    base, c = _sine(p, k)
    a = p.alpha
    mag = np.abs(base)
    with np.errstate(divide="ignore", invalid="ignore"):
        dEdk = p.d_alpha() * a * mag ** (a - 1.0) * np.sign(base) * p.amplitude() * c * (0.5 * p.eps())
    dEdk = np.where(mag == 0.0, 0.0, dEdk)
    return dEdk / p.hbar


def _curvature_k(p: HybridParams, k):
    base, c = _sine(p, k)
    a = p.alpha
    mag = np.abs(base)
    A = p.amplitude()
    with np.errstate(divide="ignore", invalid="ignore"):
        if a == 2.0:
            inner = (A * A) * (c * c) - mag ** 2
        else:
            inner = (a - 1.0) * (A * A) * (c * c) * mag ** (a - 2.0) - mag ** a
    return p.d_alpha() * a * (0.5 * p.eps()) ** 2 * inner, mag


class EffectiveMass(NamedTuple):
    """Signed effective mass with a flag for non-finite curvature inverses.

    ``singular`` is set where the band is flat (``value = +/-inf``) or at
    a fractional cusp (curvature diverges, ``value = 0``).
    """

    value: object
    singular: object


def effective_mass(p: HybridParams, k) -> EffectiveMass:
    """``(d^2E / dp^2)^-1`` from the analytic second derivative."""
    d2k, mag = _curvature_k(p, k)
    d2p = d2k / p.hbar ** 2
    cusp = (mag == 0.0) & (p.alpha < 2.0)
    flat = (np.abs(d2p) < FLAT_CURVATURE) & ~cusp
    with np.errstate(divide="ignore", invalid="ignore"):
        m = 1.0 / d2p
    m = np.where(flat, np.copysign(np.inf, d2p), m)
    m = np.where(cusp, 0.0, m)
    singular = flat | cusp
    if np.ndim(m) == 0:
        return EffectiveMass(float(m), bool(singular))
    return EffectiveMass(m, singular)


def commutator_multiplier(p: HybridParams, momentum):
    """``M(p) = (alpha/2) |A sin(p ln q / 2 hbar)|^(alpha/2 - 1) cos(p ln q / 2 hbar)``.

    The value is ``inf`` where the sine vanishes and ``alpha < 2`` (the
    multiplier diverges like ``|p|^(alpha/2 - 1)``); use
    :func:`multiplier_diverges` to test for it.  For ``alpha = 2`` this is
    ``cos(p ln q / 2 hbar)`` exactly.
    """
    k = np.asarray(momentum, dtype=float) / p.hbar
    base, c = _sine(p, k)
    a = p.alpha
    if a == 2.0:
        return 1.0 * c
    with np.errstate(divide="ignore"):
        return 0.5 * a * np.abs(base) ** (0.5 * a - 1.0) * c


def multiplier_diverges(p: HybridParams, momentum):
    base, _ = _sine(p, np.asarray(momentum, dtype=float) / p.hbar)
    return (p.alpha < 2.0) & (base == 0.0)


def commutator_symbol(p: HybridParams, momentum):
    """Exact derivative ``dPi/dp`` of the implemented momentum symbol.

    This is what ``[x, p_hybrid] / (i hbar)`` realises as a multiplier.  On
    the principal band it equals ``jacobian() * M(p)``: the product rule
    leaves a constant factor ``ln q / (q - 1)`` which ``M`` does not carry.
    """
    k = np.asarray(momentum, dtype=float) / p.hbar
    base, _ = _sine(p, k)
    sk = np.where(k == 0.0, 1.0, np.sign(k))
    sb = np.where(base == 0.0, sk, np.sign(base))
    return commutator_multiplier(p, momentum) * p.jacobian() * sb * sk


class LimitSymbols(NamedTuple):
    fqm: object   # (hbar |k|)^(alpha/2) sgn(k), the q -> 1 limit
    qqm: object   # (2 hbar/(q-1)) sin(k ln q / 2), the alpha -> 2 limit


def limit_symbols(p: HybridParams, k) -> LimitSymbols:
    k = np.asarray(k, dtype=float)
    fqm = (p.hbar * np.abs(k)) ** (0.5 * p.alpha) * np.sign(k)
    base, _ = _sine(p, k)
    return LimitSymbols(fqm=fqm, qqm=base)
