"""Exact covering and packing numbers of finite point sets.

Three exact solvers over Python-int bitsets:

* minimum set cover (covering numbers, centers restricted to a set ``A``),
* maximum independent set of the threshold graph (packing numbers),
* minimum independent dominating set of the threshold graph (the smallest
  inclusion-maximal distinguishable set).

The threshold graph at scale ``eps`` joins distinct points with
``d <= eps``; its independent sets are the ``eps``-distinguishable sets
(pairwise ``d > eps``).  Both comparisons are exact on the stored doubles.
"""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .betweenness import ball_diameter_factor, betweenness_exponent
from .core import (
    DEFAULT_TOL,
    CheckReport,
    DomainError,
    FiniteMetricSpace,
    InfeasibleError,
    SubsetMask,
    ToleranceConfig,
    as_mask,
    distance_breakpoints,
    epsilon_grid,
    restrict,
)

__all__ = [
    "SolverLimits",
    "DEFAULT_LIMITS",
    "CoverResult",
    "PackResult",
    "ProfileRecord",
    "ThresholdGraphs",
    "covering_number",
    "packing_number",
    "min_maximal_packing",
    "chain_classical",
    "chain_refined",
    "entropy_profile",
    "profile_to_csv",
    "profile_to_json",
    "profile_counts",
    "solve_min_cover",
    "solve_max_independent",
    "solve_min_independent_dominating",
]


@dataclass(frozen=True)
class SolverLimits:
    max_nodes: int = 10_000_000
    time_budget: float = 30.0

    def __post_init__(self):
        if self.max_nodes <= 0 or self.time_budget <= 0:
            raise DomainError("solver limits must be positive")


DEFAULT_LIMITS = SolverLimits()


@dataclass(frozen=True)
class CoverResult:
    count: int
    centers: SubsetMask
    optimal: bool
    nodes_explored: int

    def to_dict(self) -> dict:
        return {"count": self.count, "centers": self.centers.to_list(),
                "optimal": self.optimal, "nodes_explored": self.nodes_explored}


@dataclass(frozen=True)
class PackResult:
    count: int
    points: SubsetMask
    optimal: bool
    nodes_explored: int

    def to_dict(self) -> dict:
        return {"count": self.count, "points": self.points.to_list(),
                "optimal": self.optimal, "nodes_explored": self.nodes_explored}


@dataclass(frozen=True)
class ProfileRecord:
    eps: float
    N: int
    M: int
    Mhat: int
    N_ambient: int
    optimal: bool

    def to_dict(self) -> dict:
        return {"eps": self.eps, "N": self.N, "M": self.M, "Mhat": self.Mhat,
                "N_ambient": self.N_ambient, "optimal": self.optimal}


class _Budget:
    __slots__ = ("nodes", "max_nodes", "deadline", "exhausted")

    def __init__(self, limits: SolverLimits):
        self.nodes = 0
        self.max_nodes = limits.max_nodes
        self.deadline = time.monotonic() + limits.time_budget
        self.exhausted = False

    def tick(self) -> bool:
        """Count one node; True once the budget is spent."""
        self.nodes += 1
        if self.nodes >= self.max_nodes:
            self.exhausted = True
        elif not self.nodes & 1023 and time.monotonic() > self.deadline:
            self.exhausted = True
        return self.exhausted


def _bits(mask: int) -> Iterable[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


def _bool_rows_to_ints(rows: np.ndarray) -> tuple[int, ...]:
    packed = np.packbits(rows, axis=1, bitorder="little")
    return tuple(int.from_bytes(r.tobytes(), "little") for r in packed)


def bits_of(indices: Iterable[int]) -> int:
    out = 0
    for i in indices:
        out |= 1 << i
    return out


def popcount(mask: int) -> int:
    return _popcount(mask)


class ThresholdGraphs:
    """Per-``eps`` closed-ball bitsets of one space, cached.

    ``balls(eps)[i]`` has bit ``j`` set iff ``d(i, j) <= eps``; the conflict
    neighbourhood of ``i`` is that mask without bit ``i``.
    """

    def __init__(self, space: FiniteMetricSpace):
        self.space = space
        self._cache: dict[float, tuple[int, ...]] = {}

    def balls(self, eps: float) -> tuple[int, ...]:
        eps = float(eps)
        hit = self._cache.get(eps)
        if hit is None:
            hit = _bool_rows_to_ints(self.space.dist <= eps)
            self._cache[eps] = hit
        return hit

    def conflicts(self, eps: float) -> tuple[int, ...]:
        return tuple(b & ~(1 << i) for i, b in enumerate(self.balls(eps)))


# --------------------------------------------------------------------------
# minimum set cover

def solve_min_cover(universe: int, candidates: Sequence[int], sets: Sequence[int],
                    limits: SolverLimits = DEFAULT_LIMITS) -> tuple[list[int], bool, int]:
    """Minimum number of ``sets`` whose union contains ``universe``.

    ``candidates[j]`` labels ``sets[j]``.  Returns ``(chosen labels, optimal,
    nodes)``.  Raises :class:`InfeasibleError` if the union misses a point.
    """
    if universe == 0:
        return [], True, 0
    union = 0
    for s in sets:
        union |= s
    missing = universe & ~union
    if missing:
        orphan = (missing & -missing).bit_length() - 1
        raise InfeasibleError(f"point {orphan} is not covered by any candidate ball", orphan)

    # drop dominated sets; among equal sets keep the lowest label
    order = sorted(range(len(sets)), key=lambda j: (-_popcount(sets[j] & universe), candidates[j]))
    kept_sets: list[int] = []
    kept_labels: list[int] = []
    for j in order:
        s = sets[j] & universe
        if s and not any(s & ~k == 0 for k in kept_sets):
            kept_sets.append(s)
            kept_labels.append(candidates[j])
    m = len(kept_sets)

    elements = list(_bits(universe))
    cands_of = {e: 0 for e in elements}
    for j, s in enumerate(kept_sets):
        for e in _bits(s):
            cands_of[e] |= 1 << j

    # greedy incumbent
    best: list[int] = []
    left = universe
    while left:
        j = max(range(m), key=lambda k: (_popcount(kept_sets[k] & left), -k))
        best.append(j)
        left &= ~kept_sets[j]

    budget = _Budget(limits)

    def lower_bound(uncovered: int, avail: int) -> int:
        used = 0
        independent = 0
        biggest = 0
        for j in _bits(avail):
            size = _popcount(kept_sets[j] & uncovered)
            if size > biggest:
                biggest = size
        for e in _bits(uncovered):
            c = cands_of[e] & avail
            if not c & used:
                independent += 1
                used |= c
        return max(independent, -(-_popcount(uncovered) // biggest))

    def search(uncovered: int, avail: int, chosen: list[int]) -> None:
        nonlocal best
        if budget.tick():
            return
        chosen = list(chosen)
        # forced-element propagation, and pick the most constrained element
        while True:
            branch_c = 0
            branch_n = m + 1
            forced = 0
            for e in _bits(uncovered):
                c = cands_of[e] & avail
                if not c:
                    return
                k = _popcount(c)
                if k == 1:
                    forced = c
                    break
                if k < branch_n:
                    branch_n, branch_c = k, c
            if not forced:
                break
            j = forced.bit_length() - 1
            chosen.append(j)
            uncovered &= ~kept_sets[j]
            avail &= ~forced
            if len(chosen) >= len(best):
                return
        if not uncovered:
            if len(chosen) < len(best):
                best = chosen
            return
        if len(chosen) + lower_bound(uncovered, avail) >= len(best):
            return
        options = sorted(_bits(branch_c), key=lambda j: (-_popcount(kept_sets[j] & uncovered), j))
        for j in options:
            search(uncovered & ~kept_sets[j], avail & ~(1 << j), chosen + [j])
            # later branches exclude sets already tried for this element
            avail &= ~(1 << j)
            if budget.exhausted or len(chosen) + 1 >= len(best):
                break

    search(universe, (1 << m) - 1, [])
    return sorted(kept_labels[j] for j in best), not budget.exhausted, budget.nodes


# --------------------------------------------------------------------------
# maximum independent set

def _clique_cover_size(vertices: int, adj: Sequence[int]) -> int:
    """Greedy partition of ``vertices`` into cliques of the conflict graph.

    An independent set meets each clique at most once, so the count bounds it.
    """
    count = 0
    rest = vertices
    while rest:
        v = (rest & -rest).bit_length() - 1
        clique = 1 << v
        cand = adj[v] & rest
        while cand:
            u = (cand & -cand).bit_length() - 1
            clique |= 1 << u
            cand &= adj[u]
        rest &= ~clique
        count += 1
    return count


def solve_max_independent(vertices: int, adj: Sequence[int],
                          limits: SolverLimits = DEFAULT_LIMITS) -> tuple[int, bool, int]:
    """Maximum independent set of the graph ``adj`` restricted to ``vertices``.

    Returns ``(bitmask, optimal, nodes)``.
    """
    # greedy incumbent: repeatedly take a minimum-degree vertex
    best = 0
    rest = vertices
    while rest:
        v = min(_bits(rest), key=lambda u: (_popcount(adj[u] & rest), u))
        best |= 1 << v
        rest &= ~(adj[v] | 1 << v)
    best_size = _popcount(best)
    budget = _Budget(limits)

    def search(cand: int, chosen: int, size: int) -> None:
        nonlocal best, best_size
        if budget.tick():
            return
        # degree <= 1 vertices belong to some maximum independent set
        reduced = True
        while reduced and cand:
            reduced = False
            for v in _bits(cand):
                nb = adj[v] & cand
                if nb & (nb - 1) == 0:
                    chosen |= 1 << v
                    size += 1
                    cand &= ~(nb | 1 << v)
                    reduced = True
                    break
        if not cand:
            if size > best_size:
                best, best_size = chosen, size
            return
        if size + _clique_cover_size(cand, adj) <= best_size:
            return
        v = max(_bits(cand), key=lambda u: (_popcount(adj[u] & cand), -u))
        search(cand & ~(adj[v] | 1 << v), chosen | 1 << v, size + 1)
        search(cand & ~(1 << v), chosen, size)

    search(vertices, 0, 0)
    return best, not budget.exhausted, budget.nodes


# --------------------------------------------------------------------------
# minimum independent dominating set

def solve_min_independent_dominating(vertices: int, adj: Sequence[int],
                                     limits: SolverLimits = DEFAULT_LIMITS) -> tuple[int, bool, int]:
    """Smallest inclusion-maximal independent set within ``vertices``.

    Returns ``(bitmask, optimal, nodes)``.
    """
    closed = {v: (adj[v] | 1 << v) & vertices for v in _bits(vertices)}

    best = 0
    undominated = vertices
    while undominated:
        v = max(_bits(undominated), key=lambda u: (_popcount(closed[u] & undominated), -u))
        best |= 1 << v
        undominated &= ~closed[v]
    best_size = _popcount(best)
    budget = _Budget(limits)

    def search(undom: int, avail: int, chosen: int, size: int) -> None:
        nonlocal best, best_size
        if budget.tick():
            return
        if not undom:
            if size < best_size:
                best, best_size = chosen, size
            return
        if size + 1 >= best_size:
            return
        widest = 0
        pick_opts = 0
        pick_n = len(closed) + 1
        for u in _bits(undom):
            opts = closed[u] & avail
            if not opts:
                return
            k = _popcount(opts)
            if k < pick_n:
                pick_n, pick_opts = k, opts
        for v in _bits(avail):
            w = _popcount(closed[v] & undom)
            if w > widest:
                widest = w
        if size + -(-_popcount(undom) // widest) >= best_size:
            return
        options = sorted(_bits(pick_opts), key=lambda v: (-_popcount(closed[v] & undom), v))
        for v in options:
            search(undom & ~closed[v], avail & ~closed[v], chosen | 1 << v, size + 1)
            avail &= ~(1 << v)
            if budget.exhausted:
                break

    search(vertices, vertices, 0, 0)
    return best, not budget.exhausted, budget.nodes


# --------------------------------------------------------------------------
# public operations

def _nonempty_bits(space: FiniteMetricSpace, subset, what: str) -> SubsetMask:
    mask = as_mask(space, subset)
    if not len(mask):
        raise DomainError(f"{what} must be nonempty")
    return mask


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return eps


def covering_number(space: FiniteMetricSpace, W, A, eps: float,
                    limits: SolverLimits = DEFAULT_LIMITS, *,
                    graphs: ThresholdGraphs | None = None) -> CoverResult:
    """Fewest centers from ``A`` whose closed ``eps``-balls cover ``W``.

    ``None`` for ``W`` or ``A`` means the whole space; pass ``A=W`` for
    centers drawn from ``W`` itself.
    """
    eps = _check_eps(eps)
    w = _nonempty_bits(space, W, "W")
    a = _nonempty_bits(space, A, "A")
    balls = (graphs or ThresholdGraphs(space)).balls(eps)
    labels = a.to_list()
    chosen, optimal, nodes = solve_min_cover(w.bits, labels, [balls[i] for i in labels], limits)
    return CoverResult(len(chosen), space.mask(chosen), optimal, nodes)


def packing_number(space: FiniteMetricSpace, W, eps: float,
                   limits: SolverLimits = DEFAULT_LIMITS, *,
                   graphs: ThresholdGraphs | None = None) -> PackResult:
    """Largest ``eps``-distinguishable subset of ``W``."""
    eps = _check_eps(eps)
    w = _nonempty_bits(space, W, "W")
    adj = (graphs or ThresholdGraphs(space)).conflicts(eps)
    bits, optimal, nodes = solve_max_independent(w.bits, adj, limits)
    return PackResult(_popcount(bits), SubsetMask.from_bits(bits, space.n), optimal, nodes)


def min_maximal_packing(space: FiniteMetricSpace, W, eps: float,
                        limits: SolverLimits = DEFAULT_LIMITS, *,
                        graphs: ThresholdGraphs | None = None) -> PackResult:
    """Smallest ``eps``-distinguishable subset of ``W`` that cannot be enlarged."""
    eps = _check_eps(eps)
    w = _nonempty_bits(space, W, "W")
    adj = (graphs or ThresholdGraphs(space)).conflicts(eps)
    bits, optimal, nodes = solve_min_independent_dominating(w.bits, adj, limits)
    return PackResult(_popcount(bits), SubsetMask.from_bits(bits, space.n), optimal, nodes)


def _chain_verdict(counts: Sequence[int], optimal: bool) -> bool | None:
    # counts that are only bounds cannot decide the chain either way
    if not optimal:
        return None
    return all(x <= y for x, y in zip(counts, counts[1:]))


def chain_classical(space: FiniteMetricSpace, W, eps: float,
                    limits: SolverLimits = DEFAULT_LIMITS, *,
                    graphs: ThresholdGraphs | None = None) -> CheckReport:
    """``M_{2 eps}(W) <= N_eps(W) <= M_eps(W)``."""
    graphs = graphs or ThresholdGraphs(space)
    w = _nonempty_bits(space, W, "W")
    m2 = packing_number(space, w, 2 * eps, limits, graphs=graphs)
    n1 = covering_number(space, w, w, eps, limits, graphs=graphs)
    m1 = packing_number(space, w, eps, limits, graphs=graphs)
    optimal = m2.optimal and n1.optimal and m1.optimal
    counts = (m2.count, n1.count, m1.count)
    verdict = _chain_verdict(counts, optimal)
    data = {"eps": eps, "M_2eps": counts[0], "N_eps": counts[1], "M_eps": counts[2], "optimal": optimal}
    witness = None if verdict is not False else {"W": w.to_list(), "eps": eps, "counts": list(counts)}
    return CheckReport(verdict, witness, data)


def chain_refined(space: FiniteMetricSpace, W, eps: float, ambient=None,
                  limits: SolverLimits = DEFAULT_LIMITS, tol: ToleranceConfig = DEFAULT_TOL, *,
                  graphs: ThresholdGraphs | None = None, t0: float | None = None) -> CheckReport:
    """The five-term chain relating packing and covering numbers of ``W``.

    ``M*_{f eps}(W) <= N^X_eps(W) <= N_eps(W) <= Mhat_eps(W) <= M*_eps(W)``
    where ``X`` is ``ambient`` and ``f = 2 ** (1 / t0(X))``.
    """
    graphs = graphs or ThresholdGraphs(space)
    w = _nonempty_bits(space, W, "W")
    x = _nonempty_bits(space, ambient, "ambient")
    if not w.indices <= x.indices:
        raise DomainError("W must be a subset of the ambient set")
    if t0 is None:
        t0 = betweenness_exponent(restrict(space, x), tol)
    factor = ball_diameter_factor(t0)
    results = [
        packing_number(space, w, factor * eps, limits, graphs=graphs),
        covering_number(space, w, x, eps, limits, graphs=graphs),
        covering_number(space, w, w, eps, limits, graphs=graphs),
        min_maximal_packing(space, w, eps, limits, graphs=graphs),
        packing_number(space, w, eps, limits, graphs=graphs),
    ]
    optimal = all(r.optimal for r in results)
    counts = [r.count for r in results]
    verdict = _chain_verdict(counts, optimal)
    names = ("M_scaled", "N_ambient", "N", "Mhat", "M")
    data = {"eps": eps, "t0": t0, "factor": factor, "optimal": optimal, **dict(zip(names, counts))}
    witness = None if verdict is not False else {"W": w.to_list(), "eps": eps, "counts": counts}
    return CheckReport(verdict, witness, data)


def entropy_profile(space: FiniteMetricSpace, W=None, limits: SolverLimits = DEFAULT_LIMITS,
                    ambient=None, tol: ToleranceConfig = DEFAULT_TOL, *,
                    graphs: ThresholdGraphs | None = None) -> list[ProfileRecord]:
    """Covering and packing counts of ``W`` across its breakpoint grid.

    Sampled at every breakpoint, every gap midpoint and half the smallest
    breakpoint, ascending in ``eps``.
    """
    graphs = graphs or ThresholdGraphs(space)
    w = _nonempty_bits(space, W, "W")
    x = _nonempty_bits(space, ambient, "ambient")
    return [profile_counts(graphs, w.bits, x.bits, eps, limits)
            for eps in epsilon_grid(distance_breakpoints(space, w, tol))]


def profile_counts(graphs: ThresholdGraphs, w_bits: int, ambient_bits: int, eps: float,
                   limits: SolverLimits = DEFAULT_LIMITS) -> ProfileRecord:
    """One profile record straight from bitsets (no mask objects)."""
    balls = graphs.balls(eps)
    adj = graphs.conflicts(eps)
    own = list(_bits(w_bits))
    amb = list(_bits(ambient_bits))
    n_own, ok1, _ = solve_min_cover(w_bits, own, [balls[i] for i in own], limits)
    n_amb, ok2, _ = solve_min_cover(w_bits, amb, [balls[i] for i in amb], limits)
    m, ok3, _ = solve_max_independent(w_bits, adj, limits)
    mh, ok4, _ = solve_min_independent_dominating(w_bits, adj, limits)
    return ProfileRecord(eps, len(n_own), _popcount(m), _popcount(mh), len(n_amb),
                         ok1 and ok2 and ok3 and ok4)


PROFILE_HEADER = ("eps", "N", "M", "Mhat", "N_ambient", "optimal")


def profile_to_csv(records: Sequence[ProfileRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PROFILE_HEADER)
    for r in records:
        writer.writerow([repr(r.eps), r.N, r.M, r.Mhat, r.N_ambient, str(r.optimal).lower()])
    return buf.getvalue()


def profile_to_json(records: Sequence[ProfileRecord]) -> str:
    return json.dumps([r.to_dict() for r in records], sort_keys=True)
