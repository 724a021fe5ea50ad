"""Special functions used by the closed-form entropy evaluations."""

from __future__ import annotations

import math

EULER_GAMMA = 0.57721566490153286061

# Bernoulli-number coefficients of the asymptotic digamma series,
# B_2k / (2k) for k = 1..7.
_ASYMPTOTIC = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def digamma(x: float) -> float:
    """psi(x) for real x > 0.

    Shifts the argument above 10 with psi(x) = psi(x + 1) - 1/x, then sums
    the asymptotic expansion. Absolute error stays below 1e-13 on (0, inf).
    """
    if not x > 0.0:
        raise ValueError(f"digamma is only implemented for x > 0, got {x!r}")
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    term = inv2
    for c in _ASYMPTOTIC:
        series += c * term
        term *= inv2
    return acc + math.log(x) - 0.5 / x - series


def harmonic(x: float) -> float:
    """Generalized harmonic number H_x = psi(x + 1) + Euler's constant."""
    return digamma(x + 1.0) + EULER_GAMMA


def log_beta(alpha) -> float:
    """log of the multivariate Beta function, in nats."""
    return sum(math.lgamma(a) for a in alpha) - math.lgamma(sum(alpha))
