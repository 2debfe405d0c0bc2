"""Digamma function for real arguments."""
from __future__ import annotations

import math

# Bernoulli coefficients B_{2n}/(2n) for the asymptotic tail
_ASYMPTOTIC = (1.0 / 12, -1.0 / 120, 1.0 / 252, -1.0 / 240, 1.0 / 132,
               -691.0 / 32760, 1.0 / 12)


def digamma(x: float) -> float:
    """Logarithmic derivative of the gamma function, ``psi(x)``.

    Uses the upward recurrence ``psi(x) = psi(x + 1) - 1/x`` until the
    argument reaches 6, then the asymptotic series

        psi(x) ~ ln x - 1/(2x) - sum_n B_2n / (2n x^2n).

    Negative non-integer arguments go through the reflection formula.
    Accuracy is near machine precision for ``x > 0``.

    Raises
    ------
    ValueError
        At the poles ``x = 0, -1, -2, ...``.
    """
    x = float(x)
    if x <= 0.0:
        if x == math.floor(x):
            raise ValueError(f"digamma has a pole at {x}")
        return digamma(1.0 - x) - math.pi / math.tan(math.pi * x)
    acc = 0.0
    while x < 6.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    tail = 0.0
    for c in reversed(_ASYMPTOTIC):
        tail = (tail + c) * inv2
    return acc + math.log(x) - 0.5 / x - tail
