"""Reading and writing spaces, products and point clouds."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from .core import DEFAULT_TOL, FiniteMetricSpace, MetricError, ToleranceConfig
from .products import ProductSpace, product_custom

__all__ = [
    "ParseError",
    "space_to_json",
    "space_from_json",
    "product_to_json",
    "product_from_json",
    "read_matrix",
    "parse_space_file",
    "parse_points_file",
    "load_file",
    "dumps",
]


class ParseError(MetricError):
    """Malformed input file; ``line`` and ``column`` are 1-based when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True)


def space_to_json(space: FiniteMetricSpace) -> dict:
    return {"labels": list(space.labels), "matrix": space.dist.tolist()}


def space_from_json(obj: Any, tol: ToleranceConfig = DEFAULT_TOL, validate: bool = True) -> FiniteMetricSpace:
    if not isinstance(obj, dict) or "matrix" not in obj:
        raise ParseError('space JSON must be an object with a "matrix" key')
    return FiniteMetricSpace(obj["matrix"], obj.get("labels"), tol, validate=validate)


def product_to_json(P: ProductSpace) -> dict:
    return {"x": space_to_json(P.factor_x), "y": space_to_json(P.factor_y),
            "matrix": P.dist.tolist()}


def product_from_json(obj: Any, tol: ToleranceConfig = DEFAULT_TOL) -> ProductSpace:
    if not isinstance(obj, dict) or not {"x", "y", "matrix"} <= obj.keys():
        raise ParseError('product JSON needs "x", "y" and "matrix"')
    x = space_from_json(obj["x"], tol)
    y = space_from_json(obj["y"], tol)
    m = np.asarray(obj["matrix"], dtype=float)
    size = x.n * y.n
    if m.ndim == 1:
        if m.size != size * size:
            raise ParseError(f"flat product matrix needs {size * size} numbers, got {m.size}")
        m = m.reshape(size, size)
    return product_custom(x, y, m, tol)


def _load_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None


def _read_csv_rows(path: Path, allow_header: bool) -> tuple[list[list[float]], list[str] | None]:
    rows: list[list[float]] = []
    header = None
    with path.open(newline="") as fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            if not raw or all(not c.strip() for c in raw):
                continue
            values = []
            for col, cell in enumerate(raw, start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    if allow_header and not rows and header is None:
                        header = [c.strip() for c in raw]
                        values = None
                        break
                    raise ParseError(f"not a number: {cell!r}", lineno, col) from None
            if values is None:
                continue
            if rows and len(values) != len(rows[0]):
                raise ParseError(f"expected {len(rows[0])} fields, got {len(values)}", lineno, 1)
            rows.append(values)
    if not rows:
        raise ParseError("file has no numeric rows")
    return rows, header


def _format_of(path: Path, fmt: str | None) -> str:
    if fmt:
        return fmt
    return "csv" if path.suffix.lower() in (".csv", ".txt") else "json"


def read_matrix(path: str | Path, fmt: str | None = None) -> tuple[list, list[str] | None]:
    """Raw matrix and labels without metric validation."""
    path = Path(path)
    if _format_of(path, fmt) == "csv":
        rows, _ = _read_csv_rows(path, allow_header=False)
        return rows, None
    obj = _load_json(path)
    if not isinstance(obj, dict) or "matrix" not in obj:
        raise ParseError('space JSON must be an object with a "matrix" key')
    return obj["matrix"], obj.get("labels")


def parse_space_file(path: str | Path, fmt: str | None = None,
                     tol: ToleranceConfig = DEFAULT_TOL) -> FiniteMetricSpace:
    """Load and validate a space; CSV files get labels ``p0 .. p{n-1}``."""
    matrix, labels = read_matrix(path, fmt)
    return FiniteMetricSpace(matrix, labels, tol)


def parse_points_file(path: str | Path, metric_kind: str = "euclidean") -> FiniteMetricSpace:
    """Distance matrix of CSV coordinate rows; a non-numeric first row is a header."""
    rows, _ = _read_csv_rows(Path(path), allow_header=True)
    return FiniteMetricSpace.from_points(rows, metric_kind)


def load_file(path: str | Path, fmt: str | None = None,
              tol: ToleranceConfig = DEFAULT_TOL) -> FiniteMetricSpace | ProductSpace:
    """A space or, for JSON with ``x``/``y`` keys, a product."""
    path = Path(path)
    if _format_of(path, fmt) == "json":
        obj = _load_json(path)
        if isinstance(obj, dict) and "x" in obj and "y" in obj:
            return product_from_json(obj, tol)
        return space_from_json(obj, tol)
    return parse_space_file(path, "csv", tol)
