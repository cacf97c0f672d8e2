"""Metrics on the product of two finite metric spaces.

A :class:`ProductSpace` fixes the enumeration ``k = i * n_y + j`` for the
point ``(x_i, y_j)``.  Every predicate here is an exhaustive scan over
configurations of point pairs, described by their partial distances
``(d_X(x1, x2), d_Y(y1, y2))``.  Scans larger than ``pair_budget``
comparisons are sampled with a fixed seed and flagged non-exhaustive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import (
    DEFAULT_TOL,
    CheckReport,
    DomainError,
    FiniteMetricSpace,
    MetricValidationError,
    StructuralInputError,
    ToleranceConfig,
    _as_square,
    dedup_sorted,
    validate_metric,
)

__all__ = [
    "ProductSpace",
    "FactorTable",
    "PropertyWitness",
    "DEFAULT_PAIR_BUDGET",
    "product_p",
    "product_custom",
    "is_partial_distance_preserving",
    "is_distance_increasing",
    "sandwich_check",
    "quasi_monotone_check",
    "factor_function",
    "swap_symmetry_check",
    "min_condition_check",
    "dominates_chebyshev",
    "below_taxicab",
]

DEFAULT_PAIR_BUDGET = 4_000_000
_SAMPLE_SEED = 20240601


@dataclass(frozen=True)
class PropertyWitness:
    """A replayable counterexample: product indices and the offending values."""

    kind: str
    points: tuple[int, ...]
    values: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "points": list(self.points), "values": list(self.values)}


class ProductSpace:
    """Two factors and a metric on their product, row-major in the first factor."""

    __slots__ = ("factor_x", "factor_y", "product")

    def __init__(self, factor_x: FiniteMetricSpace, factor_y: FiniteMetricSpace,
                 product: FiniteMetricSpace):
        if product.n != factor_x.n * factor_y.n:
            raise DomainError(
                f"product has {product.n} points, expected {factor_x.n} * {factor_y.n}")
        object.__setattr__(self, "factor_x", factor_x)
        object.__setattr__(self, "factor_y", factor_y)
        object.__setattr__(self, "product", product)

    def __setattr__(self, name, value):
        raise AttributeError("ProductSpace is immutable")

    def __repr__(self) -> str:
        return f"ProductSpace({self.factor_x.n} x {self.factor_y.n})"

    @property
    def shape(self) -> tuple[int, int]:
        return self.factor_x.n, self.factor_y.n

    def index(self, i: int, j: int) -> int:
        return i * self.factor_y.n + j

    def coords(self, k: int) -> tuple[int, int]:
        return divmod(k, self.factor_y.n)

    @property
    def dist(self) -> np.ndarray:
        return self.product.dist

    def partial_x(self) -> np.ndarray:
        """``d_X`` of the first coordinates, for every pair of product points."""
        return np.kron(self.factor_x.dist, np.ones((self.factor_y.n, self.factor_y.n)))

    def partial_y(self) -> np.ndarray:
        return np.kron(np.ones((self.factor_x.n, self.factor_x.n)), self.factor_y.dist)

    def chebyshev(self) -> np.ndarray:
        return np.maximum(self.partial_x(), self.partial_y())

    def taxicab(self) -> np.ndarray:
        return self.partial_x() + self.partial_y()


def _product_labels(x: FiniteMetricSpace, y: FiniteMetricSpace) -> list[str]:
    return [f"({a},{b})" for a in x.labels for b in y.labels]


def product_p(X: FiniteMetricSpace, Y: FiniteMetricSpace, p: float,
              tol: ToleranceConfig = DEFAULT_TOL) -> ProductSpace:
    """The ``l_p`` combination of the factor metrics, ``p`` in ``[1, inf]``."""
    p = float(p)
    if not p >= 1.0:
        raise DomainError(f"p must lie in [1, inf], got {p}")
    dx = np.kron(X.dist, np.ones((Y.n, Y.n)))
    dy = np.kron(np.ones((X.n, X.n)), Y.dist)
    if math.isinf(p):
        d = np.maximum(dx, dy)
    elif p == 1.0:
        d = dx + dy
    else:
        d = (dx ** p + dy ** p) ** (1.0 / p)
    return ProductSpace(X, Y, FiniteMetricSpace(d, _product_labels(X, Y), tol))


def product_custom(X: FiniteMetricSpace, Y: FiniteMetricSpace, matrix: Any,
                   tol: ToleranceConfig = DEFAULT_TOL) -> ProductSpace:
    """Wrap an explicit ``(n_x n_y)``-square matrix; raises if it is not a metric."""
    matrix = _as_square(matrix)
    size = X.n * Y.n
    if matrix.shape != (size, size):
        raise StructuralInputError(f"product matrix must be {size} x {size}, got shape {matrix.shape}")
    report = validate_metric(matrix, tol)
    if not report.ok:
        raise MetricValidationError(report)
    return ProductSpace(X, Y, FiniteMetricSpace(matrix, _product_labels(X, Y), tol, validate=False))


def _close(a: float, b: float, tol: ToleranceConfig) -> bool:
    return abs(a - b) <= tol.rel_tol * max(abs(a), abs(b))


def is_partial_distance_preserving(P: ProductSpace, tol: ToleranceConfig = DEFAULT_TOL) -> CheckReport:
    """Slices ``X x {y}`` and ``{x} x Y`` are isometric copies of the factors."""
    d = P.dist
    nx, ny = P.shape
    for y in range(ny):
        for i1 in range(nx):
            for i2 in range(i1 + 1, nx):
                k, l = P.index(i1, y), P.index(i2, y)
                want = P.factor_x.dist[i1, i2]
                if not _close(d[k, l], want, tol):
                    return CheckReport(False, PropertyWitness(
                        "not-partial-preserving", (k, l), (float(d[k, l]), float(want))))
    for x in range(nx):
        for j1 in range(ny):
            for j2 in range(j1 + 1, ny):
                k, l = P.index(x, j1), P.index(x, j2)
                want = P.factor_y.dist[j1, j2]
                if not _close(d[k, l], want, tol):
                    return CheckReport(False, PropertyWitness(
                        "not-partial-preserving", (k, l), (float(d[k, l]), float(want))))
    return CheckReport(True)


def _pair_table(P: ProductSpace):
    """Unordered point pairs ``k <= l`` (diagonal included) with their keys."""
    N = P.product.n
    k, l = np.triu_indices(N)
    dx = P.partial_x()[k, l]
    dy = P.partial_y()[k, l]
    return k, l, dx, dy, P.dist[k, l]


def _comparable_scan(table, pair_budget: int, visit) -> bool:
    """Feed ``visit`` blocks of comparable configurations ``(p, q)``.

    ``p`` is comparable to ``q`` when both partial distances of ``p`` are at
    most those of ``q``.  ``visit(rows, cols)`` gets index arrays into the pair
    table and returns True to stop early.  Returns whether the scan was
    exhaustive.
    """
    _, _, dx, dy, _ = table
    M = dx.size
    exhaustive = M * M <= pair_budget
    if exhaustive:
        rows_all = np.arange(M)
    else:
        rng = np.random.default_rng(_SAMPLE_SEED)
        rows_all = np.sort(rng.choice(M, size=max(1, pair_budget // M), replace=False))
    chunk = max(1, 2_000_000 // M)
    for start in range(0, rows_all.size, chunk):
        rows = rows_all[start:start + chunk]
        comp = (dx[rows, None] <= dx[None, :]) & (dy[rows, None] <= dy[None, :])
        r, c = np.nonzero(comp)
        if visit(rows[r], c):
            break
    return exhaustive


def is_distance_increasing(P: ProductSpace, tol: ToleranceConfig = DEFAULT_TOL,
                           pair_budget: int = DEFAULT_PAIR_BUDGET) -> CheckReport:
    """Monotone in both partial distances simultaneously.

    The witness lists the two configurations as product indices
    ``(k1, l1, k2, l2)`` with values ``(dx1, dy1, d1, dx2, dy2, d2)`` where
    ``d1 > d2`` although ``(dx1, dy1) <= (dx2, dy2)``.
    """
    table = _pair_table(P)
    k, l, dx, dy, d = table
    found: list = []

    def visit(p, q):
        bad = d[p] > d[q] + tol.rel_tol * np.maximum(d[p], d[q])
        if bad.any():
            t = np.flatnonzero(bad)
            # lexicographically first (p, q)
            order = np.lexsort((q[t], p[t]))
            found.append((int(p[t][order[0]]), int(q[t][order[0]])))
            return True
        return False

    exhaustive = _comparable_scan(table, pair_budget, visit)
    if found:
        a, b = found[0]
        witness = PropertyWitness(
            "not-distance-increasing",
            (int(k[a]), int(l[a]), int(k[b]), int(l[b])),
            (float(dx[a]), float(dy[a]), float(d[a]), float(dx[b]), float(dy[b]), float(d[b])))
        return CheckReport(False, witness, exhaustive=exhaustive)
    return CheckReport(True if exhaustive else None, exhaustive=exhaustive)


def dominates_chebyshev(P: ProductSpace, tol: ToleranceConfig = DEFAULT_TOL) -> CheckReport:
    """``d_inf <= d`` pointwise."""
    return _pointwise(P, P.chebyshev(), "below", tol)


def below_taxicab(P: ProductSpace, tol: ToleranceConfig = DEFAULT_TOL) -> CheckReport:
    """``d <= d_1`` pointwise."""
    return _pointwise(P, P.taxicab(), "above", tol)


def _pointwise(P: ProductSpace, ref: np.ndarray, side: str, tol: ToleranceConfig) -> CheckReport:
    d = P.dist
    scale = tol.rel_tol * np.maximum(np.abs(d), np.abs(ref))
    bad = (d < ref - scale) if side == "below" else (d > ref + scale)
    witnesses = [PropertyWitness("sandwich-violation", (int(k), int(l)), (float(d[k, l]), float(ref[k, l])))
                 for k, l in zip(*np.nonzero(np.triu(bad, 1)))]
    return CheckReport(not witnesses, witnesses or None)


def sandwich_check(P: ProductSpace, tol: ToleranceConfig = DEFAULT_TOL) -> CheckReport:
    """``d_inf <= d <= d_1`` on every pair; the witness lists every violation.

    Each witness carries values ``(d_inf, d, d_1)``.
    """
    d = P.dist
    lo, hi = P.chebyshev(), P.taxicab()
    slack = tol.rel_tol * np.maximum(np.abs(d), hi)
    bad = np.triu((d < lo - slack) | (d > hi + slack), 1)
    witnesses = [PropertyWitness("sandwich-violation", (int(k), int(l)),
                                 (float(lo[k, l]), float(d[k, l]), float(hi[k, l])))
                 for k, l in zip(*np.nonzero(bad))]
    N = P.product.n
    return CheckReport(not witnesses, witnesses or None, {"pairs_checked": N * (N - 1) // 2})


def quasi_monotone_check(P: ProductSpace, tol: ToleranceConfig = DEFAULT_TOL,
                         pair_budget: int = DEFAULT_PAIR_BUDGET) -> CheckReport:
    """``d(p) <= 2 d(q)`` for comparable configurations; reports the worst ratio.

    Configurations ``q`` with ``d(q) = 0`` are skipped (then ``p`` is
    degenerate too whenever the sandwich holds).
    """
    table = _pair_table(P)
    k, l, dx, dy, d = table
    best = {"ratio": 0.0, "pair": None}

    def visit(p, q):
        keep = d[q] > 0
        p, q = p[keep], q[keep]
        if p.size:
            ratios = d[p] / d[q]
            t = int(np.argmax(ratios))
            if ratios[t] > best["ratio"]:
                best["ratio"], best["pair"] = float(ratios[t]), (int(p[t]), int(q[t]))
        return False

    exhaustive = _comparable_scan(table, pair_budget, visit)
    ratio = best["ratio"]
    witness = None
    holds = ratio <= 2.0 * (1.0 + tol.rel_tol)
    if best["pair"] is not None and not holds:
        a, b = best["pair"]
        witness = PropertyWitness("quasi-monotone-ratio", (int(k[a]), int(l[a]), int(k[b]), int(l[b])),
                                  (float(d[a]), float(d[b]), ratio))
    verdict: bool | None = holds if (exhaustive or not holds) else None
    return CheckReport(verdict, witness, {"max_ratio": ratio}, exhaustive=exhaustive)


@dataclass(frozen=True)
class FactorTable:
    """The metric as a function of the two partial distances."""

    entries: dict
    domain_x: tuple[float, ...]
    domain_y: tuple[float, ...]

    def __call__(self, dx: float, dy: float) -> float:
        return self.entries[(dx, dy)]

    def to_list(self) -> list[dict]:
        return [{"dx": a, "dy": b, "d": v} for (a, b), v in sorted(self.entries.items())]

    def to_dict(self) -> dict:
        return {"table": self.to_list()}


def _bucket(values: np.ndarray, tol: ToleranceConfig) -> tuple[list[float], np.ndarray]:
    reps = dedup_sorted(np.unique(values), tol.rel_tol)
    arr = np.asarray(reps)
    idx = np.searchsorted(arr, values, side="right") - 1
    return reps, np.clip(idx, 0, len(reps) - 1)


def factor_function(P: ProductSpace, tol: ToleranceConfig = DEFAULT_TOL) -> FactorTable | PropertyWitness:
    """Tabulate ``d`` against ``(d_X, d_Y)``, or show two pairs that disagree.

    The witness holds product indices ``(k1, l1, k2, l2)`` and values
    ``(dx, dy, d1, d2)`` for two pairs with the same key and ``d1 != d2``.
    """
    k, l, dx, dy, d = _pair_table(P)
    reps_x, bx = _bucket(dx, tol)
    reps_y, by = _bucket(dy, tol)
    first: dict[tuple[int, int], int] = {}
    for t in range(d.size):
        key = (int(bx[t]), int(by[t]))
        s = first.setdefault(key, t)
        if s != t and not _close(d[s], d[t], tol):
            return PropertyWitness("no-factor-function", (int(k[s]), int(l[s]), int(k[t]), int(l[t])),
                                   (reps_x[key[0]], reps_y[key[1]], float(d[s]), float(d[t])))
    entries = {(reps_x[a], reps_y[b]): float(d[t]) for (a, b), t in first.items()}
    return FactorTable(entries, tuple(reps_x), tuple(reps_y))


def _cross_configs(P: ProductSpace):
    """``((x1, y1), (x2, y2))`` and its swap ``((x2, y1), (x1, y2))`` for all
    ``x1 <= x2`` and ``y1 <= y2``, as product index arrays."""
    nx, ny = P.shape
    i1, i2 = np.triu_indices(nx)
    j1, j2 = np.triu_indices(ny)
    I1, J1 = np.meshgrid(i1, j1, indexing="ij")
    I2, J2 = np.meshgrid(i2, j2, indexing="ij")
    I1, I2, J1, J2 = (a.ravel() for a in (I1, I2, J1, J2))
    return I1 * ny + J1, I2 * ny + J2, I2 * ny + J1, I1 * ny + J2, I1, I2, J1, J2


def swap_symmetry_check(P: ProductSpace, tol: ToleranceConfig = DEFAULT_TOL) -> CheckReport:
    """``d((x1,y1),(x2,y2)) = d((x2,y1),(x1,y2))`` for all coordinate pairs.

    Witness points are ``(k1, l1, k2, l2)``, values the two distances.
    """
    a, b, c, e, *_ = _cross_configs(P)
    d = P.dist
    first, second = d[a, b], d[c, e]
    bad = np.abs(first - second) > tol.rel_tol * np.maximum(first, second)
    if bad.any():
        t = int(np.flatnonzero(bad)[0])
        return CheckReport(False, PropertyWitness(
            "swap-asymmetry", (int(a[t]), int(b[t]), int(c[t]), int(e[t])),
            (float(first[t]), float(second[t]))))
    return CheckReport(True)


def min_condition_check(P: ProductSpace, tol: ToleranceConfig = DEFAULT_TOL) -> CheckReport:
    """The shorter of a configuration and its swap equals the Chebyshev distance.

    Witness values are ``(d, d_swapped, d_inf)``.
    """
    a, b, c, e, I1, I2, J1, J2 = _cross_configs(P)
    d = P.dist
    low = np.minimum(d[a, b], d[c, e])
    cheb = np.maximum(P.factor_x.dist[I1, I2], P.factor_y.dist[J1, J2])
    bad = np.abs(low - cheb) > tol.rel_tol * np.maximum(low, cheb)
    if bad.any():
        t = int(np.flatnonzero(bad)[0])
        return CheckReport(False, PropertyWitness(
            "min-condition-violation", (int(a[t]), int(b[t]), int(c[t]), int(e[t])),
            (float(d[a[t], b[t]]), float(d[c[t], e[t]]), float(cheb[t]))))
    return CheckReport(True)
