"""Generators, the worked fixtures, and randomized theorem suites.

Every suite returns a :class:`SuiteReport`.  A ``fail`` verdict always
carries at least one replayable witness in ``witnesses``; informative
counterexamples that a theorem *predicts* (for instance the triple proving a
space is not ultrametric) go to ``evidence`` instead.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .betweenness import betweenness_exponent
from .core import (
    DEFAULT_TOL,
    DomainError,
    FiniteMetricSpace,
    ToleranceConfig,
    _jsonable,
    dedup_sorted,
    epsilon_grid,
    is_ultrametric,
    restrict,
)
from .coverpack import (
    DEFAULT_LIMITS,
    SolverLimits,
    ThresholdGraphs,
    bits_of,
    chain_classical,
    chain_refined,
    covering_number,
    packing_number,
    popcount,
    profile_counts,
    solve_max_independent,
    solve_min_cover,
)
from .products import (
    ProductSpace,
    dominates_chebyshev,
    below_taxicab,
    is_partial_distance_preserving,
    min_condition_check,
    product_custom,
    swap_symmetry_check,
)

__all__ = [
    "GeneratorConfig",
    "SuiteReport",
    "WitnessRecord",
    "MULTIPLICATIVITY_MODES",
    "gen_random_metric",
    "gen_random_ultrametric",
    "gen_example_3_3",
    "fixture_fig1",
    "fixture_fig2",
    "enumerate_subsets",
    "check_theorem_1_6",
    "witness_non_ultrametric",
    "check_theorem_2_8",
    "check_product_multiplicativity",
    "check_chain_suite",
]

MODES = ("euclidean", "range12", "dendrogram")
MULTIPLICATIVITY_MODES = ("packing", "covering", "equality", "prop34", "cor38", "remark310")


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    seed: int = 0
    mode: str = "euclidean"
    dim: int = 2

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "euclidean" and self.dim < 1:
            raise DomainError(f"dim must be >= 1, got {self.dim}")


@dataclass
class SuiteReport:
    suite: str
    verdict: str = "pass"
    cases_run: int = 0
    witnesses: list = field(default_factory=list)
    evidence: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return {"pass": 0, "fail": 1, "indeterminate": 2}[self.verdict]

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "verdict": self.verdict,
            "cases_run": self.cases_run,
            "witnesses": _jsonable(self.witnesses),
            "evidence": _jsonable(self.evidence),
            "details": _jsonable(self.details),
        }


@dataclass(frozen=True)
class WitnessRecord:
    """Points ``a, b, c`` with ``d(a, b) > eps = max(d(a, c), d(b, c))``."""

    a: int
    b: int
    c: int
    eps: float
    N: int
    M: int

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "eps": self.eps, "N": self.N, "M": self.M}


# --------------------------------------------------------------------------
# generators and fixtures

def gen_random_metric(cfg: GeneratorConfig, points=None) -> FiniteMetricSpace:
    """Random space: uniform points in the unit cube, or entries uniform in [1, 2].

    ``points`` overrides the sampled coordinates in euclidean mode.
    """
    if cfg.mode == "dendrogram":
        return gen_random_ultrametric(cfg)
    rng = np.random.default_rng(cfg.seed)
    if cfg.mode == "euclidean":
        pts = rng.random((cfg.n, cfg.dim)) if points is None else np.asarray(points, dtype=float)
        return FiniteMetricSpace.from_points(pts, "euclidean")
    d = np.zeros((cfg.n, cfg.n))
    iu = np.triu_indices(cfg.n, k=1)
    d[iu] = rng.uniform(1.0, 2.0, size=iu[0].size)
    return FiniteMetricSpace(d + d.T)


def gen_random_ultrametric(cfg: GeneratorConfig) -> FiniteMetricSpace:
    """Cophenetic distances of a random binary merge tree.

    Merge heights are distinct draws from (0, 1] applied in increasing order;
    the distance of two leaves is the height where their clusters merge.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    heights = np.sort(1.0 - rng.random(n - 1))  # in (0, 1]
    while np.unique(heights).size < heights.size:
        heights = np.sort(1.0 - rng.random(n - 1))
    clusters = [[i] for i in range(n)]
    d = np.zeros((n, n))
    for h in heights:
        a, b = sorted(rng.choice(len(clusters), size=2, replace=False))
        left, right = clusters[a], clusters[b]
        d[np.ix_(left, right)] = h
        d[np.ix_(right, left)] = h
        clusters[a] = left + right
        del clusters[b]
    return FiniteMetricSpace(d)


def gen_example_3_3(cardinality: int, t: float) -> FiniteMetricSpace:
    """Point 0 is at distance 1 from all others; the others are ``2**(1/t)`` apart."""
    if cardinality < 3:
        raise DomainError(f"cardinality must be >= 3, got {cardinality}")
    if not t >= 1.0:
        raise DomainError(f"t must be >= 1, got {t}")
    far = 2.0 ** (1.0 / t)
    d = np.full((cardinality, cardinality), far)
    d[0, :] = d[:, 0] = 1.0
    np.fill_diagonal(d, 0.0)
    return FiniteMetricSpace(d, ["a"] + [f"p{i}" for i in range(1, cardinality)])


def _line_space(n: int, prefix: str) -> FiniteMetricSpace:
    idx = np.arange(n, dtype=float)
    return FiniteMetricSpace(np.abs(idx[:, None] - idx[None, :]), [f"{prefix}{i + 1}" for i in range(n)])


FIG1_MATRIX = (
    (0, 1, 2, 1, 1, 2, 2, 2, 2),
    (1, 0, 1, 1, 1, 2, 2, 2, 2),
    (2, 1, 0, 2, 2, 1, 2, 2, 2),
    (1, 1, 2, 0, 1, 2, 1, 2, 2),
    (1, 1, 2, 1, 0, 1, 2, 1, 2),
    (2, 2, 1, 2, 1, 0, 2, 2, 1),
    (2, 2, 2, 1, 2, 2, 0, 1, 2),
    (2, 2, 2, 2, 1, 2, 1, 0, 1),
    (2, 2, 2, 2, 2, 1, 2, 1, 0),
)


def fixture_fig1() -> ProductSpace:
    """3 x 3 product that satisfies the sandwich bounds but is not distance-increasing."""
    return product_custom(_line_space(3, "x"), _line_space(3, "y"), FIG1_MATRIX)


def fixture_fig2(a: float) -> ProductSpace:
    """2 x 2 product of unit two-point spaces; ``a`` is the (x1,y1)-(x2,y2) distance."""
    a = float(a)
    if not 1.0 <= a <= 2.0:
        raise DomainError(f"a must lie in [1, 2], got {a}")
    m = [[0, 1, 1, a], [1, 0, 1, 1], [1, 1, 0, 1], [a, 1, 1, 0]]
    return product_custom(_line_space(2, "x"), _line_space(2, "y"), m)


# --------------------------------------------------------------------------
# subset enumeration

def _size_lex_key(bits: int) -> tuple:
    return (popcount(bits), [i for i in range(bits.bit_length()) if bits >> i & 1])


def enumerate_subsets(n: int, budget: int, seed: int = 0) -> tuple[list[int], bool]:
    """Nonempty subsets of ``range(n)`` as bitmasks, by size then lexicographic.

    All of them when ``2**n <= budget``; otherwise every subset of size at
    most 3 plus ``budget`` random ones.  Returns ``(subsets, exhaustive)``.
    """
    if 2 ** n <= budget:
        subsets = list(range(1, 2 ** n))
        exhaustive = True
    else:
        small = {bits_of(c) for k in (1, 2, 3) for c in itertools.combinations(range(n), k)}
        rng = np.random.default_rng(seed)
        for row in rng.random((budget, n)) < 0.5:
            b = bits_of(np.flatnonzero(row).tolist())
            if b:
                small.add(b)
        subsets = list(small)
        exhaustive = False
    subsets.sort(key=_size_lex_key)
    return subsets, exhaustive


def _indices(bits: int) -> list[int]:
    return [i for i in range(bits.bit_length()) if bits >> i & 1]


def _grid_for(dist: np.ndarray, bits: int, tol: ToleranceConfig) -> list[float]:
    idx = _indices(bits)
    if len(idx) < 2:
        return epsilon_grid([])
    sub = dist[np.ix_(idx, idx)]
    return epsilon_grid(dedup_sorted(np.unique(sub[np.triu_indices(len(idx), 1)]), tol.rel_tol))


# --------------------------------------------------------------------------
# ultrametric characterization

def witness_non_ultrametric(space: FiniteMetricSpace,
                            limits: SolverLimits = DEFAULT_LIMITS) -> WitnessRecord:
    """Exact covering and packing numbers on the first ultra-triangle violation."""
    report = is_ultrametric(space)
    if report.verdict:
        raise DomainError("space is ultrametric; no witness exists")
    a, b, c = report.witness
    eps = float(max(space.dist[a, c], space.dist[b, c]))
    tri = space.mask((a, b, c))
    n = covering_number(space, tri, tri, eps, limits).count
    m = packing_number(space, tri, eps, limits).count
    return WitnessRecord(a, b, c, eps, n, m)


def check_theorem_1_6(space: FiniteMetricSpace, subset_budget: int = 4096,
                      limits: SolverLimits = DEFAULT_LIMITS, seed: int = 0,
                      tol: ToleranceConfig = DEFAULT_TOL) -> SuiteReport:
    """Ultrametric spaces have equal covering and packing counts everywhere.

    Ultrametric input: all four counts of every sampled subset agree at each
    grid ``eps``.  Otherwise: the witness triple separates them (N <= 1 < 2 <= M).
    """
    report = SuiteReport("thm1.6")
    ultra = is_ultrametric(space).verdict
    report.details["ultrametric"] = ultra
    if not ultra:
        w = witness_non_ultrametric(space, limits)
        report.cases_run = 1
        report.evidence.append(w)
        if not (w.N <= 1 < 2 <= w.M):
            report.verdict = "fail"
            report.witnesses.append(w)
        return report

    graphs = ThresholdGraphs(space)
    full = (1 << space.n) - 1
    subsets, exhaustive = enumerate_subsets(space.n, subset_budget, seed)
    report.details["exhaustive"] = exhaustive
    indeterminate = False
    for w_bits in subsets:
        for eps in _grid_for(space.dist, w_bits, tol):
            rec = profile_counts(graphs, w_bits, full, eps, limits)
            report.cases_run += 1
            if not rec.optimal:
                indeterminate = True
                continue
            if not rec.M == rec.N_ambient == rec.N == rec.Mhat:
                report.verdict = "fail"
                report.witnesses.append({"W": _indices(w_bits), "eps": eps,
                                         "counts": {"M": rec.M, "N_ambient": rec.N_ambient,
                                                    "N": rec.N, "Mhat": rec.Mhat}})
                return report
    if indeterminate:
        report.verdict = "indeterminate"
    return report


def check_chain_suite(space: FiniteMetricSpace, which: str = "classical", subset_budget: int = 4096,
                      limits: SolverLimits = DEFAULT_LIMITS, seed: int = 0,
                      tol: ToleranceConfig = DEFAULT_TOL) -> SuiteReport:
    """Run the classical three-term or refined five-term chain on sampled subsets."""
    if which not in ("classical", "refined"):
        raise DomainError(f"unknown chain {which!r}")
    report = SuiteReport("eq1.1" if which == "classical" else "lemma3.2")
    graphs = ThresholdGraphs(space)
    t0 = betweenness_exponent(space, tol) if which == "refined" else None
    subsets, exhaustive = enumerate_subsets(space.n, subset_budget, seed)
    report.details["exhaustive"] = exhaustive
    indeterminate = False
    for w_bits in subsets:
        w = space.mask(_indices(w_bits))
        for eps in _grid_for(space.dist, w_bits, tol):
            if which == "classical":
                check = chain_classical(space, w, eps, limits, graphs=graphs)
            else:
                check = chain_refined(space, w, eps, None, limits, tol, graphs=graphs, t0=t0)
            report.cases_run += 1
            if check.verdict is None:
                indeterminate = True
            elif not check.verdict:
                report.verdict = "fail"
                report.witnesses.append(check.witness)
                return report
    if indeterminate:
        report.verdict = "indeterminate"
    return report


# --------------------------------------------------------------------------
# products

def _premise_failure(report: SuiteReport, check, what: str) -> SuiteReport:
    report.verdict = "fail"
    report.details["precondition_failed"] = what
    witness = check.witness
    report.witnesses.extend(witness if isinstance(witness, list) else [witness])
    return report


def _equals_chebyshev(P: ProductSpace, tol: ToleranceConfig) -> bool:
    cheb = P.chebyshev()
    return bool(np.all(np.abs(P.dist - cheb) <= tol.rel_tol * np.maximum(P.dist, cheb)))


def check_theorem_2_8(P: ProductSpace, tol: ToleranceConfig = DEFAULT_TOL) -> SuiteReport:
    """Under the premises, the product is ultrametric iff both factors are and
    the metric is the Chebyshev combination."""
    report = SuiteReport("thm2.8")
    pdp = is_partial_distance_preserving(P, tol)
    if not pdp.verdict:
        return _premise_failure(report, pdp, "partial distance-preserving")
    lower = dominates_chebyshev(P, tol)
    if not lower.verdict:
        return _premise_failure(report, lower, "d_inf <= d")

    product_ultra = is_ultrametric(P.product)
    ux = is_ultrametric(P.factor_x).verdict
    uy = is_ultrametric(P.factor_y).verdict
    is_cheb = _equals_chebyshev(P, tol)
    left = bool(product_ultra.verdict)
    right = bool(ux and uy and is_cheb)
    report.cases_run = 2
    report.details.update({"product_ultrametric": left, "x_ultrametric": ux,
                           "y_ultrametric": uy, "equals_chebyshev": is_cheb})
    if not left:
        report.evidence.append({"triple": list(product_ultra.witness)})
    if left != right:
        report.verdict = "fail"
        report.witnesses.append({"left": left, "right": right,
                                 "triple": list(product_ultra.witness) if not left else None})
    # product ultrametric => factors ultrametric
    report.cases_run += 1
    if left and not (ux and uy):
        report.verdict = "fail"
        report.witnesses.append({"factors_ultrametric": [ux, uy]})
    return report


class _FactorCounts:
    """Packing and covering numbers of factor subsets, memoized by (bits, eps)."""

    def __init__(self, space: FiniteMetricSpace, limits: SolverLimits):
        self.graphs = ThresholdGraphs(space)
        self.limits = limits
        self.memo: dict = {}

    def pack(self, bits: int, eps: float) -> tuple[int, bool]:
        key = ("M", bits, eps)
        if key not in self.memo:
            m, ok, _ = solve_max_independent(bits, self.graphs.conflicts(eps), self.limits)
            self.memo[key] = (popcount(m), ok)
        return self.memo[key]

    def cover(self, bits: int, eps: float) -> tuple[int, bool]:
        key = ("N", bits, eps)
        if key not in self.memo:
            balls = self.graphs.balls(eps)
            own = _indices(bits)
            chosen, ok, _ = solve_min_cover(bits, own, [balls[i] for i in own], self.limits)
            self.memo[key] = (len(chosen), ok)
        return self.memo[key]


def _subset_pairs(nx: int, ny: int, budget: int, seed: int) -> tuple[list[tuple[int, int]], bool]:
    if 2 ** nx * 2 ** ny <= budget:
        xs = enumerate_subsets(nx, 2 ** nx)[0]
        ys = enumerate_subsets(ny, 2 ** ny)[0]
        return [(w, z) for w in xs for z in ys], True
    small_x = [bits_of(c) for k in (1, 2) for c in itertools.combinations(range(nx), k)]
    small_y = [bits_of(c) for k in (1, 2) for c in itertools.combinations(range(ny), k)]
    pairs = {(w, z) for w in small_x for z in small_y}
    rng = np.random.default_rng(seed)
    for _ in range(budget):
        w = bits_of(np.flatnonzero(rng.random(nx) < 0.5).tolist())
        z = bits_of(np.flatnonzero(rng.random(ny) < 0.5).tolist())
        if w and z:
            pairs.add((w, z))
    return sorted(pairs, key=lambda p: (_size_lex_key(p[0]), _size_lex_key(p[1]))), False


def check_product_multiplicativity(P: ProductSpace, mode: str = "packing", subset_budget: int = 1 << 14,
                                   limits: SolverLimits = DEFAULT_LIMITS, seed: int = 0,
                                   tol: ToleranceConfig = DEFAULT_TOL) -> SuiteReport:
    """Multiplicativity of covering/packing numbers on products of subsets.

    Modes and the relation asserted between the aggregate case verdict and
    ultrametricity of the product:

    ``packing``   M(WxZ) = M(W) M(Z); equivalent to ultrametricity when both
                  factors are ultrametric, implied by it otherwise.
    ``covering``  N(WxZ) = N(W) N(Z); implied by ultrametricity.  With
                  ultrametric factors, holding everywhere forces the
                  min-condition on the product.
    ``equality``  M(WxZ) = N(WxZ); implied by ultrametricity.
    ``prop34``    M(WxZ) = N(WxZ) and packing; equivalent to ultrametricity.
    ``cor38``     covering, for swap-symmetric products of ultrametric
                  factors; equivalent to ultrametricity.
    ``remark310`` no enumeration: given d_inf <= d, partial distance-preserving
                  iff d <= d_1.
    """
    if mode not in MULTIPLICATIVITY_MODES:
        raise DomainError(f"mode must be one of {MULTIPLICATIVITY_MODES}, got {mode!r}")
    report = SuiteReport(f"multiplicativity:{mode}")

    lower = dominates_chebyshev(P, tol)
    if not lower.verdict:
        return _premise_failure(report, lower, "d_inf <= d")
    if mode == "remark310":
        pdp = bool(is_partial_distance_preserving(P, tol).verdict)
        upper = bool(below_taxicab(P, tol).verdict)
        report.cases_run = 1
        report.details.update({"partial_distance_preserving": pdp, "below_taxicab": upper})
        if pdp != upper:
            report.verdict = "fail"
            report.witnesses.append({"partial_distance_preserving": pdp, "below_taxicab": upper})
        return report

    pdp = is_partial_distance_preserving(P, tol)
    if not pdp.verdict:
        return _premise_failure(report, pdp, "partial distance-preserving")
    ux = bool(is_ultrametric(P.factor_x).verdict)
    uy = bool(is_ultrametric(P.factor_y).verdict)
    if mode == "cor38":
        swap = swap_symmetry_check(P, tol)
        if not swap.verdict:
            return _premise_failure(report, swap, "swap symmetry")
        if not (ux and uy):
            report.verdict = "fail"
            report.details["precondition_failed"] = "ultrametric factors"
            report.witnesses.append({"x_ultrametric": ux, "y_ultrametric": uy,
                                     "x_triple": is_ultrametric(P.factor_x).witness,
                                     "y_triple": is_ultrametric(P.factor_y).witness})
            return report

    product_ultra = is_ultrametric(P.product)
    pu = bool(product_ultra.verdict)
    report.details.update({"product_ultrametric": pu, "x_ultrametric": ux, "y_ultrametric": uy})

    fx = _FactorCounts(P.factor_x, limits)
    fy = _FactorCounts(P.factor_y, limits)
    prod = _FactorCounts(P.product, limits)
    nx, ny = P.shape
    pairs, exhaustive = _subset_pairs(nx, ny, subset_budget, seed)
    report.details["exhaustive"] = exhaustive
    report.details["pairs"] = len(pairs)

    aggregate = True
    indeterminate = False
    counterexample = None
    for w, z in pairs:
        wi, zi = _indices(w), _indices(z)
        wz = bits_of(i * ny + j for i in wi for j in zi)
        bps = []
        for dist, bits in ((P.factor_x.dist, w), (P.factor_y.dist, z), (P.dist, wz)):
            idx = _indices(bits)
            if len(idx) > 1:
                bps.extend(dist[np.ix_(idx, idx)][np.triu_indices(len(idx), 1)].tolist())
        for eps in epsilon_grid(dedup_sorted(bps, tol.rel_tol)):
            report.cases_run += 1
            case = _case(mode, fx, fy, prod, w, z, wz, eps)
            if case is None:
                indeterminate = True
                continue
            holds, counts = case
            if not holds:
                aggregate = False
                counterexample = {"W": wi, "Z": zi, "eps": eps, "counts": counts}
                break
        if not aggregate:
            break

    report.details["aggregate"] = aggregate if (counterexample or not indeterminate) else None
    if counterexample:
        report.evidence.append(counterexample)
    if indeterminate and aggregate:
        report.verdict = "indeterminate"
        return report

    if mode in ("prop34", "cor38") or (mode == "packing" and ux and uy):
        expected_equiv = True
    else:
        expected_equiv = False
    ok = (aggregate == pu) if expected_equiv else (aggregate or not pu)
    if pu and not (ux and uy):
        ok = False
    if not ok:
        report.verdict = "fail"
        if counterexample and pu:
            report.witnesses.append(counterexample)
        else:
            report.witnesses.append({"product_ultrametric": pu, "aggregate": aggregate,
                                     "triple": list(product_ultra.witness) if not pu else None})
        return report

    if mode == "covering" and ux and uy and aggregate:
        mc = min_condition_check(P, tol)
        report.cases_run += 1
        report.details["min_condition"] = mc.verdict
        if not mc.verdict:
            report.verdict = "fail"
            report.witnesses.append(mc.witness)
    return report


def _case(mode: str, fx: _FactorCounts, fy: _FactorCounts, prod: _FactorCounts,
          w: int, z: int, wz: int, eps: float):
    """``(holds, counts)`` for one ``(W, Z, eps)``; None if a count is a bound."""
    counts: dict = {}
    ok = True
    if mode in ("packing", "prop34"):
        (mw, a), (mz, b), (mwz, c) = fx.pack(w, eps), fy.pack(z, eps), prod.pack(wz, eps)
        ok = ok and a and b and c
        counts.update({"M_W": mw, "M_Z": mz, "M_WZ": mwz})
    if mode in ("covering", "cor38"):
        (nw, a), (nz, b), (nwz, c) = fx.cover(w, eps), fy.cover(z, eps), prod.cover(wz, eps)
        ok = ok and a and b and c
        counts.update({"N_W": nw, "N_Z": nz, "N_WZ": nwz})
    if mode in ("equality", "prop34"):
        (mwz, a), (nwz, b) = prod.pack(wz, eps), prod.cover(wz, eps)
        ok = ok and a and b
        counts.update({"M_WZ": mwz, "N_WZ": nwz})
    if not ok:
        return None
    holds = True
    if mode in ("packing", "prop34"):
        holds = holds and counts["M_WZ"] == counts["M_W"] * counts["M_Z"]
    if mode in ("covering", "cor38"):
        holds = holds and counts["N_WZ"] == counts["N_W"] * counts["N_Z"]
    if mode in ("equality", "prop34"):
        holds = holds and counts["M_WZ"] == counts["N_WZ"]
    return holds, counts
