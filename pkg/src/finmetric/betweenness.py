"""Triple exponents, the betweenness exponent, and snowflake transforms.

For a triangle with legs ``a = d(x, z)``, ``b = d(z, y)`` and base
``c = d(x, y)`` the triple exponent is the unique ``s >= 1`` solving
``(a/c)**s + (b/c)**s = 1`` when both legs are strictly shorter than the
base, and ``inf`` otherwise.  The betweenness exponent of a space is the
minimum over all triples; it is ``inf`` exactly for ultrametric spaces.

Extended values in ``[1, inf]`` are plain floats with ``math.inf`` as the
infinite marker.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .core import (
    DEFAULT_TOL,
    CheckReport,
    DomainError,
    FiniteMetricSpace,
    ToleranceConfig,
    closed_ball,
    diameter,
    distance_breakpoints,
)

INFINITE = math.inf

__all__ = [
    "INFINITE",
    "TripleExponentResult",
    "SnowflakeError",
    "triple_exponent",
    "betweenness_exponent",
    "snowflake",
    "ball_diameter_check",
    "ball_diameter_factor",
    "ext_to_json",
    "ext_from_json",
]


class TripleExponentResult(NamedTuple):
    exponent: float
    residual: float


class SnowflakeError(DomainError):
    """Raised when ``d**t`` is not a metric; ``triple`` is ``(x, z, y)``."""

    def __init__(self, message: str, triple: tuple[int, int, int]):
        super().__init__(message)
        self.triple = triple


def _excess(s: float, p: float, q: float) -> float:
    return p ** s + q ** s - 1.0


def triple_exponent(a: float, b: float, c: float,
                    tol: ToleranceConfig = DEFAULT_TOL) -> TripleExponentResult:
    """Solve ``a**s + b**s = c**s`` for ``s >= 1`` by bisection.

    ``a + b`` may fall short of ``c`` by at most ``rel_tol * c`` (rounding from
    constructors); such near-degenerate triangles return 1.
    """
    if not (a > 0 and b > 0 and c > 0):
        raise DomainError(f"triangle sides must be positive, got {(a, b, c)}")
    if a + b < c * (1.0 - tol.rel_tol):
        raise DomainError(f"not a triangle: {a} + {b} < {c}")
    big = max(a, b)
    if big >= c:
        return TripleExponentResult(INFINITE, 0.0)
    if a + b <= c:
        return TripleExponentResult(1.0, 0.0)

    p, q = a / c, b / c
    lo = 1.0
    # at hi the larger ratio alone contributes 1/2, the smaller at most 1/2
    hi = max(1.0, math.log(2.0) / math.log(c / big))
    f_hi = _excess(hi, p, q)
    if f_hi == 0.0:
        return TripleExponentResult(hi, 0.0)
    mid = 0.5 * (lo + hi)
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        f_mid = _excess(mid, p, q)
        if f_mid == 0.0:
            break
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol.root_tol * hi and abs(f_mid) <= tol.root_tol:
            mid = 0.5 * (lo + hi)
            break
    return TripleExponentResult(mid, abs(_excess(mid, p, q)))


def betweenness_exponent(space: FiniteMetricSpace, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Minimum triple exponent over all triples of distinct points."""
    best, _ = _min_triple(space, tol)
    return best


def _min_triple(space: FiniteMetricSpace, tol: ToleranceConfig):
    d = space.dist
    n = space.n
    best = INFINITE
    arg = None
    for x in range(n):
        for y in range(x + 1, n):
            c = d[x, y]
            for z in range(n):
                if z == x or z == y:
                    continue
                a, b = d[x, z], d[z, y]
                if max(a, b) >= c:
                    continue
                # the excess is decreasing in s: nonnegative at best means s >= best
                if best < INFINITE and _excess(best, a / c, b / c) >= 0.0:
                    continue
                s = triple_exponent(float(a), float(b), float(c), tol).exponent
                if s < best:
                    best, arg = s, (x, z, y)
    return best, arg


def snowflake(space: FiniteMetricSpace, t: float,
              tol: ToleranceConfig = DEFAULT_TOL) -> FiniteMetricSpace:
    """The space with every distance raised to the power ``t``."""
    if not t > 0:
        raise DomainError(f"snowflake exponent must be positive, got {t}")
    if t > 1.0:
        t0 = betweenness_exponent(space, tol)
        if t > t0 * (1.0 + tol.rel_tol):
            triple = _first_broken_triangle(space, t, tol)
            raise SnowflakeError(
                f"d**{t} is not a metric (betweenness exponent {t0}); triple {triple} fails", triple)
    return FiniteMetricSpace(np.power(space.dist, t), space.labels, tol)


def _first_broken_triangle(space: FiniteMetricSpace, t: float, tol: ToleranceConfig):
    powered = np.power(space.dist, t)
    n = space.n
    for x in range(n):
        for y in range(x + 1, n):
            for z in range(n):
                if z in (x, y):
                    continue
                lhs = powered[x, y]
                if lhs > (powered[x, z] + powered[z, y]) + tol.rel_tol * lhs:
                    return (x, z, y)
    # only reachable when t barely exceeds t0 and the slack absorbs it
    return (0, 0, 0)


def ball_diameter_factor(t0: float) -> float:
    """``2 ** (1 / t0)`` with the convention ``2 ** (1 / inf) = 1``."""
    return 1.0 if math.isinf(t0) else 2.0 ** (1.0 / t0)


def ball_diameter_check(space: FiniteMetricSpace, tol: ToleranceConfig = DEFAULT_TOL) -> CheckReport:
    """Every closed ball at a breakpoint radius has diameter within the bound."""
    t0 = betweenness_exponent(space, tol)
    factor = ball_diameter_factor(t0)
    radii = distance_breakpoints(space, None, tol)
    checked = 0
    for center in range(space.n):
        for r in radii:
            ball = closed_ball(space, center, r)
            diam = diameter(space, ball)
            checked += 1
            if diam > factor * r + tol.rel_tol * r:
                return CheckReport(False, {"center": center, "r": r, "diam": diam},
                                   {"t0": t0, "factor": factor, "balls_checked": checked})
    return CheckReport(True, None, {"t0": t0, "factor": factor, "balls_checked": checked})


def ext_to_json(value: float) -> float | str:
    return "inf" if math.isinf(value) else float(value)


def ext_from_json(value: float | str) -> float:
    if value == "inf":
        return INFINITE
    value = float(value)
    if not value >= 1.0:
        raise DomainError(f"extended value must lie in [1, inf], got {value}")
    return value
