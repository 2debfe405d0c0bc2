"""Weak-deformation series in ``eps = ln q`` and ``delta = 2 - alpha``.

These closed forms serve as cross-oracles for the exact spectral
computations.  Terms containing ``ln(2m)`` or ``ln(|p|/p0)`` depend on the
unit system; they are evaluated with ``mass`` and ``p0`` in the units
supplied.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .states import MomentSet
from .symbols import HybridParams, kinetic_symbol
from .uncertainty import RegimeWarning, bound_series

EXPANSION_LIMIT = 0.5


@dataclass(frozen=True)
class ExpansionInput:
    eps: float
    delta: float
    moments: MomentSet | None = None
    mass: float = 1.0
    hbar: float = 1.0

    @classmethod
    def from_params(cls, params: HybridParams, moments: MomentSet | None = None) -> "ExpansionInput":
        return cls(params.eps(), params.delta(), moments, params.mass, params.hbar)

    @property
    def in_regime(self) -> bool:
        return abs(self.eps) <= EXPANSION_LIMIT and 0.0 <= self.delta <= EXPANSION_LIMIT

    def _warn(self):
        if not self.in_regime:
            warnings.warn(f"eps={self.eps:.3g}, delta={self.delta:.3g} outside series regime",
                          RegimeWarning, stacklevel=3)

    def _need_moments(self) -> MomentSet:
        if self.moments is None:
            raise ValueError("this series needs a MomentSet")
        return self.moments


def dispersion_series(inp: ExpansionInput, p):
    """``(p^2/2m)[1 - eps + eps^2 (7/12 - p^2/12 hbar^2) + (delta/2) ln(2m) + delta eps/2]``."""
    inp._warn()
    p = np.asarray(p, dtype=float)
    e, d, m, h = inp.eps, inp.delta, inp.mass, inp.hbar
    br = 1.0 - e + e * e * (7.0 / 12.0 - p * p / (12.0 * h * h)) + 0.5 * d * math.log(2 * m) + 0.5 * d * e
    return p * p / (2.0 * m) * br


class OrderEstimate(NamedTuple):
    error: float
    error_half: float
    ratio: float
    order: float


def dispersion_order(p: float, eps: float = 0.05, hbar: float = 1.0, mass: float = 1.0,
                     alpha: float = 2.0) -> OrderEstimate:
    """Series-vs-exact error at ``eps`` and ``eps/2`` and the implied order."""
    errs = []
    for e in (eps, 0.5 * eps):
        params = HybridParams(math.exp(e), alpha, hbar, mass)
        exact = float(kinetic_symbol(params, p / hbar))
        errs.append(abs(float(dispersion_series(ExpansionInput.from_params(params), p)) - exact))
    r = errs[0] / errs[1]
    return OrderEstimate(errs[0], errs[1], r, math.log2(r))


class VarianceSeries(NamedTuple):
    general: float          # from <p^2>, <p^4>, <p^6>
    gaussian: float         # general form with <p^4> = 3 dp^4, <p^6> = 15 dp^6 substituted
    gaussian_closed: float   # stated closed form, with 3 dp^2/hbar^2 in the eps^2 bracket
    gaussian_regime: bool   # moments satisfy the two identities within 5 %


def _variance_general(p2, p4, p6, e, d, m, h):
    c = p4 - p2 * p2
    return (c / (4 * m * m) + e * e / (24 * m * m) * (7 * c - (p6 - p2 * p4) / (h * h))
            + d * math.log(2 * m) / (4 * m * m) * c)


def energy_variance_series(inp: ExpansionInput) -> VarianceSeries:
    """Kinetic-energy variance to ``O(eps^2, delta)`` for a state with ``<p> = 0``."""
    inp._warn()
    mo = inp._need_moments()
    e, d, m, h = inp.eps, inp.delta, inp.mass, inp.hbar
    general = _variance_general(mo.p2, mo.p4, mo.p6, e, d, m, h)
    dp2 = mo.p2
    gauss = _variance_general(dp2, 3 * dp2 ** 2, 15 * dp2 ** 3, e, d, m, h)
    closed = dp2 ** 2 / (2 * m * m) * (1 + e * e / 6 * (7 - 3 * dp2 / (h * h)) + d * math.log(2 * m))
    ok = (dp2 > 0 and abs(mo.p4 / (3 * dp2 ** 2) - 1) <= 0.05
          and abs(mo.p6 / (15 * dp2 ** 3) - 1) <= 0.05)
    return VarianceSeries(general, gauss, closed, bool(ok))


def qsl_reference_time(inp: ExpansionInput) -> float:
    """``pi m hbar / (2 dp^2)``."""
    mo = inp._need_moments()
    return math.pi * inp.mass * inp.hbar / (2.0 * mo.var_p_std)


def qsl_series(inp: ExpansionInput) -> float:
    """``tau_QM [1 - (eps^2/6)<p^4>/dp^4 + (delta/2) dp^2 <ln(|p|/p0)>/dp^4]``.

    The bracket is evaluated verbatim; its logarithmic term carries units
    of inverse momentum squared, so it is only meaningful in units where the
    momentum scale is one.
    """
    inp._warn()
    mo = inp._need_moments()
    dp2 = mo.var_p_std
    if not dp2 > 0:
        raise ValueError("qsl_series needs a non-zero momentum spread")
    br = 1.0 - inp.eps ** 2 / 6.0 * mo.p4 / dp2 ** 2 + 0.5 * inp.delta * dp2 * mo.log_p / dp2 ** 2
    return qsl_reference_time(inp) * br


def uncertainty_series(inp: ExpansionInput, variant: str = "stated") -> float:
    """Same contract as :func:`hybridqm.uncertainty.expanded_bound`."""
    inp._warn()
    return bound_series(inp.eps, inp.delta, inp.hbar, inp._need_moments(), variant)
