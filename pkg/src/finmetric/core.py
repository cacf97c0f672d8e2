"""Finite metric spaces given by distance matrices.

The carrier type is :class:`FiniteMetricSpace`; subsets of its points are
:class:`SubsetMask` values.  Ball membership and distinguishability use exact
comparisons on the stored doubles; only the triangle inequality is checked
with a relative slack (see :class:`ToleranceConfig`).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence, Union

import numpy as np

__all__ = [
    "MetricError",
    "StructuralInputError",
    "DomainError",
    "InfeasibleError",
    "MetricValidationError",
    "ToleranceConfig",
    "DEFAULT_TOL",
    "Violation",
    "ValidationReport",
    "CheckReport",
    "FiniteMetricSpace",
    "SubsetMask",
    "as_mask",
    "validate_metric",
    "is_ultrametric",
    "closed_ball",
    "diameter",
    "restrict",
    "distance_breakpoints",
    "dedup_sorted",
    "epsilon_grid",
]


class MetricError(ValueError):
    """Base class for all errors raised by this package."""


class StructuralInputError(MetricError):
    """Input is not a finite square matrix (or otherwise malformed)."""


class DomainError(MetricError):
    """An argument lies outside the domain of the operation."""


class InfeasibleError(MetricError):
    """A covering problem has no solution; ``orphan`` is an uncoverable point."""

    def __init__(self, message: str, orphan: int):
        super().__init__(message)
        self.orphan = orphan


class MetricValidationError(MetricError):
    """A matrix failed metric validation; the full report is attached."""

    def __init__(self, report: "ValidationReport"):
        first = report.violations[0]
        super().__init__(
            f"not a metric: {len(report.violations)} violation(s), first is "
            f"{first.kind} at {first.indices} (magnitude {first.magnitude:g})"
        )
        self.report = report


@dataclass(frozen=True)
class ToleranceConfig:
    rel_tol: float = 1e-9
    root_tol: float = 1e-12

    def __post_init__(self):
        for name in ("rel_tol", "root_tol"):
            value = getattr(self, name)
            if not (0.0 < value < 1e-3):
                raise DomainError(f"{name} must lie in (0, 1e-3), got {value!r}")


DEFAULT_TOL = ToleranceConfig()


@dataclass(frozen=True)
class Violation:
    """One failed metric axiom.

    ``indices`` is ``(i,)`` for a nonzero diagonal, ``(i, j)`` with ``i < j``
    for asymmetry / nonpositive entries, and ``(i, k, j)`` for a triangle
    violation meaning ``d(i, j) > d(i, k) + d(k, j)``.
    """

    kind: str
    indices: tuple[int, ...]
    magnitude: float

    def to_dict(self) -> dict:
        return {"kind": self.kind, "indices": list(self.indices), "magnitude": self.magnitude}


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...] = ()

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


@dataclass(frozen=True)
class CheckReport:
    """Outcome of a predicate.

    ``verdict`` is ``True``/``False`` for a decided predicate and ``None`` when
    the answer is indeterminate (solver limits hit, or a sampled scan).
    ``witness`` is ``None`` on success; ``data`` carries counts, ratios, etc.
    """

    verdict: bool | None
    witness: Any = None
    data: dict = field(default_factory=dict)
    exhaustive: bool = True

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "witness": _jsonable(self.witness),
            "data": _jsonable(self.data),
            "exhaustive": self.exhaustive,
        }


def _jsonable(obj: Any) -> Any:
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple, frozenset, set)):
        items = sorted(obj) if isinstance(obj, (frozenset, set)) else obj
        return [_jsonable(v) for v in items]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return "inf" if math.isinf(value) else value
    return obj


def _as_square(matrix: Any) -> np.ndarray:
    try:
        arr = np.array(matrix, dtype=float)
    except (TypeError, ValueError) as exc:
        raise StructuralInputError(f"matrix is not numeric: {exc}") from None
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise StructuralInputError(f"matrix must be square n x n with n >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise StructuralInputError("matrix has non-finite entries")
    return arr


def validate_metric(matrix: Any, tol: ToleranceConfig = DEFAULT_TOL) -> ValidationReport:
    """Check the metric axioms on a square matrix.

    Violations are listed in a deterministic order: diagonal, asymmetry,
    nonpositive, then triangle, each sorted lexicographically by indices.
    """
    d = _as_square(matrix)
    n = d.shape[0]
    found: list[Violation] = []

    for i in np.flatnonzero(np.diag(d) != 0.0):
        found.append(Violation("nonzero-diagonal", (int(i),), abs(float(d[i, i]))))

    iu, ju = np.triu_indices(n, k=1)
    asym = np.abs(d[iu, ju] - d[ju, iu])
    for t in np.flatnonzero(asym > 0.0):
        found.append(Violation("asymmetry", (int(iu[t]), int(ju[t])), float(asym[t])))
    low = np.minimum(d[iu, ju], d[ju, iu])
    for t in np.flatnonzero(low <= 0.0):
        found.append(Violation("nonpositive", (int(iu[t]), int(ju[t])), float(-low[t])))

    triangles = []
    for k in range(n):
        via = d[:, k, None] + d[None, k, :]
        scale = np.maximum(np.maximum(d, d[:, k, None]), d[None, k, :])
        excess = d - via
        bad = excess > tol.rel_tol * scale
        np.fill_diagonal(bad, False)
        bad[k, :] = False
        bad[:, k] = False
        for i, j in zip(*np.nonzero(bad)):
            if i < j:
                triangles.append(Violation("triangle", (int(i), k, int(j)), float(excess[i, j])))
    triangles.sort(key=lambda v: v.indices)
    found.extend(triangles)
    return ValidationReport(ok=not found, violations=tuple(found))


class FiniteMetricSpace:
    """Labelled points with a validated distance matrix.

    Instances are immutable; the distance array is flagged read-only.
    """

    __slots__ = ("labels", "dist")

    def __init__(self, dist: Any, labels: Sequence[str] | None = None,
                 tol: ToleranceConfig = DEFAULT_TOL, *, validate: bool = True):
        arr = _as_square(dist)
        if validate:
            report = validate_metric(arr, tol)
            if not report.ok:
                raise MetricValidationError(report)
        n = arr.shape[0]
        if labels is None:
            labels = [f"p{i}" for i in range(n)]
        labels = tuple(str(s) for s in labels)
        if len(labels) != n:
            raise StructuralInputError(f"{len(labels)} labels for {n} points")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dist", arr)

    def __setattr__(self, name, value):
        raise AttributeError("FiniteMetricSpace is immutable")

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteMetricSpace):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.dist, other.dist)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"FiniteMetricSpace(n={self.n})"

    def full(self) -> "SubsetMask":
        return SubsetMask(frozenset(range(self.n)), self.n)

    def mask(self, indices: Iterable[int]) -> "SubsetMask":
        return SubsetMask(frozenset(int(i) for i in indices), self.n)

    @classmethod
    def from_points(cls, points: Any, metric: str = "euclidean",
                    labels: Sequence[str] | None = None) -> "FiniteMetricSpace":
        """Distance matrix of a point cloud under a coordinate metric."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise StructuralInputError(f"points must be an (n, dim) array, got shape {pts.shape}")
        diff = np.abs(pts[:, None, :] - pts[None, :, :])
        if metric == "euclidean":
            d = np.sqrt(np.sum(diff * diff, axis=-1))
        elif metric == "manhattan":
            d = np.sum(diff, axis=-1)
        elif metric == "chebyshev":
            d = np.max(diff, axis=-1)
        else:
            raise DomainError(f"unknown metric kind {metric!r}")
        return cls(d, labels)


@dataclass(frozen=True)
class SubsetMask:
    """A set of point indices of a space with ``n`` points."""

    indices: frozenset
    n: int

    def __post_init__(self):
        bad = [i for i in self.indices if not 0 <= i < self.n]
        if bad:
            raise DomainError(f"indices {sorted(bad)} out of range for a space of {self.n} points")

    def __iter__(self):
        return iter(sorted(self.indices))

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, i: object) -> bool:
        return i in self.indices

    @property
    def bits(self) -> int:
        out = 0
        for i in self.indices:
            out |= 1 << i
        return out

    @classmethod
    def from_bits(cls, bits: int, n: int) -> "SubsetMask":
        return cls(frozenset(i for i in range(n) if bits >> i & 1), n)

    def to_list(self) -> list[int]:
        return sorted(self.indices)


SubsetLike = Union[SubsetMask, Iterable[int], None]


def as_mask(space: FiniteMetricSpace, subset: SubsetLike) -> SubsetMask:
    """Coerce ``None`` (the whole space), a mask, or an index iterable."""
    if subset is None:
        return space.full()
    if isinstance(subset, SubsetMask):
        if subset.n != space.n:
            raise DomainError(f"mask belongs to a space of {subset.n} points, not {space.n}")
        return subset
    return space.mask(subset)


def _nonempty(space: FiniteMetricSpace, subset: SubsetLike, what: str = "subset") -> list[int]:
    idx = as_mask(space, subset).to_list()
    if not idx:
        raise DomainError(f"{what} must be nonempty")
    return idx


def is_ultrametric(space: FiniteMetricSpace, subset: SubsetLike = None) -> CheckReport:
    """Ultra-triangle inequality over all triples of ``subset``.

    The witness ``(a, b, c)`` is the lexicographically first ordered triple
    with ``d(a, b) > max(d(a, c), d(b, c))``.
    """
    idx = _nonempty(space, subset)
    d = space.dist
    sub = d[np.ix_(idx, idx)]
    # viol[a, b, c] = d(a,b) > max(d(a,c), d(b,c)); false whenever two indices coincide
    viol = sub[:, :, None] > np.maximum(sub[:, None, :], sub[None, :, :])
    hits = np.argwhere(viol)
    if hits.size == 0:
        return CheckReport(True)
    a, b, c = (idx[int(t)] for t in hits[0])
    return CheckReport(False, (a, b, c), {"d_ab": float(d[a, b]), "d_ac": float(d[a, c]), "d_bc": float(d[b, c])})


def closed_ball(space: FiniteMetricSpace, center: int, r: float) -> SubsetMask:
    if not 0 <= center < space.n:
        raise DomainError(f"center {center} out of range")
    if r < 0:
        raise DomainError(f"radius must be nonnegative, got {r}")
    return space.mask(np.flatnonzero(space.dist[center] <= r).tolist())


def diameter(space: FiniteMetricSpace, subset: SubsetLike = None) -> float:
    idx = _nonempty(space, subset)
    return float(space.dist[np.ix_(idx, idx)].max())


def restrict(space: FiniteMetricSpace, subset: SubsetLike) -> FiniteMetricSpace:
    idx = _nonempty(space, subset)
    return FiniteMetricSpace(space.dist[np.ix_(idx, idx)].copy(),
                             [space.labels[i] for i in idx], validate=False)


def dedup_sorted(values: Iterable[float], rel_tol: float) -> list[float]:
    """Sort and collapse runs whose consecutive values agree within ``rel_tol``.

    The first value of each run is kept verbatim.
    """
    out: list[float] = []
    for v in sorted(float(x) for x in values):
        if out and v - out[-1] <= rel_tol * max(abs(v), abs(out[-1])):
            continue
        out.append(v)
    return out


def distance_breakpoints(space: FiniteMetricSpace, subset: SubsetLike = None,
                         tol: ToleranceConfig = DEFAULT_TOL) -> list[float]:
    idx = _nonempty(space, subset)
    if len(idx) < 2:
        return []
    sub = space.dist[np.ix_(idx, idx)]
    iu = np.triu_indices(len(idx), k=1)
    return dedup_sorted(np.unique(sub[iu]), tol.rel_tol)


def epsilon_grid(breakpoints: Sequence[float]) -> list[float]:
    """Breakpoints, midpoints of consecutive gaps, and half the smallest one.

    With no breakpoints (a single point) every count is constant, and the
    grid is the single value ``1.0``.
    """
    bps = sorted(breakpoints)
    if not bps:
        return [1.0]
    grid = {bps[0] / 2.0, *bps}
    grid.update((lo + hi) / 2.0 for lo, hi in itertools.pairwise(bps))
    return sorted(grid)
