"""Exponential integral E1 and the scaled form exp(x) * E1(x)."""
from __future__ import annotations

import math

EULER_GAMMA = 0.57721566490153286061
_EPS = 1e-16
_MAX_ITER = 10_000


def _e1_series(x: float) -> float:
    # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k * k!)
    total = 0.0
    term = 1.0
    for k in range(1, _MAX_ITER):
        term *= -x / k
        delta = term / k
        total += delta
        if abs(delta) <= _EPS * abs(total):
            break
    return -EULER_GAMMA - math.log(x) - total


def _scaled_e1_cf(x: float) -> float:
    # exp(x) E1(x) by the modified Lentz continued fraction
    # 1/(x+1- 1/(x+3- 4/(x+5- ...)))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) <= _EPS:
            return h
    raise ArithmeticError(f"E1 continued fraction did not converge at x={x!r}")


def exp1(x: float) -> float:
    """Exponential integral ``E1(x) = int_x^inf exp(-t)/t dt`` for ``x > 0``."""
    if x < 0.0 or math.isnan(x):
        raise ValueError(f"E1 is implemented for x >= 0 only, got {x!r}")
    if x == 0.0:
        return math.inf
    if x <= 1.0:
        return _e1_series(x)
    return math.exp(-x) * _scaled_e1_cf(x)


def exp1_scaled(x: float) -> float:
    """``exp(x) * E1(x)``, finite for large ``x`` where the factors over/underflow."""
    if x < 0.0 or math.isnan(x):
        raise ValueError(f"E1 is implemented for x >= 0 only, got {x!r}")
    if x == 0.0:
        return math.inf
    if x <= 1.0:
        return math.exp(x) * _e1_series(x)
    return _scaled_e1_cf(x)
