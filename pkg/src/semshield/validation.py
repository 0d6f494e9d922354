"""Input validation helpers.

Every public entry point funnels its array arguments through these helpers,
so the rest of the code can assume finite, float64, C-contiguous data. They
play the same role as ``sklearn.utils.check_array`` but raise this package's
error types and know about the contracts used here (label columns,
probability simplices).
"""

from __future__ import annotations

from typing import Any

import numpy as np

from .errors import ShapeError, ValidationError

SIMPLEX_ATOL = 1e-6


def as_matrix(a: Any, name: str = "matrix", *, rows: int | None = None,
              cols: int | None = None, square: bool = False) -> np.ndarray:
    """Validate ``a`` as a dense 2-D float64 matrix with finite entries."""
    try:
        m = np.asarray(a, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} is not numeric: {exc}", name=name) from exc
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={m.ndim}", name=name,
                         ndim=int(m.ndim))
    if m.size and not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} contains NaN or Inf entries", name=name)
    if rows is not None and m.shape[0] != rows:
        raise ShapeError(f"{name} must have {rows} rows, got {m.shape[0]}",
                         name=name, expected=rows, actual=int(m.shape[0]))
    if cols is not None and m.shape[1] != cols:
        raise ShapeError(f"{name} must have {cols} columns, got {m.shape[1]}",
                         name=name, expected=cols, actual=int(m.shape[1]))
    if square and m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {m.shape}",
                         name=name, shape=tuple(map(int, m.shape)))
    return np.ascontiguousarray(m)


def as_vector(a: Any, name: str = "vector", *, size: int | None = None) -> np.ndarray:
    """Validate ``a`` as a 1-D float64 vector with finite entries."""
    try:
        v = np.asarray(a, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} is not numeric: {exc}", name=name) from exc
    if v.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got ndim={v.ndim}", name=name,
                         ndim=int(v.ndim))
    if v.size and not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} contains NaN or Inf entries", name=name)
    if size is not None and v.size != size:
        raise ShapeError(f"{name} must have length {size}, got {v.size}",
                         name=name, expected=size, actual=int(v.size))
    return np.ascontiguousarray(v)


def as_labels(a: Any, name: str = "labels", *, n_classes: int | None = None,
              size: int | None = None) -> np.ndarray:
    """Validate ``a`` as a 1-D array of integer class indices."""
    arr = np.asarray(a)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got ndim={arr.ndim}", name=name)
    if arr.size == 0:
        out = arr.astype(np.int64)
    else:
        if not np.issubdtype(arr.dtype, np.number):
            raise ValidationError(f"{name} must be integer class indices", name=name)
        out = arr.astype(np.int64)
        if np.issubdtype(arr.dtype, np.floating) and not np.array_equal(out, arr):
            raise ValidationError(f"{name} contains non-integer values", name=name)
    if size is not None and out.size != size:
        raise ShapeError(f"{name} must have length {size}, got {out.size}",
                         name=name, expected=size, actual=int(out.size))
    if n_classes is not None and out.size:
        bad = np.flatnonzero((out < 0) | (out >= n_classes))
        if bad.size:
            raise ValidationError(
                f"{name}[{bad[0]}] = {out[bad[0]]} outside [0, {n_classes})",
                name=name, row=int(bad[0]), value=int(out[bad[0]]),
                n_classes=n_classes)
    return out


def check_simplex_rows(p: np.ndarray, name: str = "probs",
                       atol: float = SIMPLEX_ATOL) -> None:
    """Require every row of ``p`` to be a probability simplex within ``atol``."""
    if p.size == 0:
        return
    if np.any(p < 0):
        i, j = np.argwhere(p < 0)[0]
        raise ValidationError(f"{name}[{i},{j}] is negative", name=name,
                              row=int(i), col=int(j))
    sums = p.sum(axis=1)
    off = np.abs(sums - 1.0)
    worst = int(np.argmax(off))
    if off[worst] > atol:
        raise ValidationError(
            f"{name} row {worst} sums to {sums[worst]:.8f}, not 1 within {atol}",
            name=name, row=worst, sum=float(sums[worst]), atol=atol)


def check_aligned(counts: dict[str, int]) -> None:
    """Require all named row counts to agree."""
    values = set(counts.values())
    if len(values) > 1:
        raise ShapeError("row count mismatch: " +
                         ", ".join(f"{k}={v}" for k, v in counts.items()),
                         **{k: int(v) for k, v in counts.items()})


def require(present: dict[str, Any], method: str) -> None:
    """Raise ConfigurationError naming every missing input for ``method``."""
    from .errors import ConfigurationError

    missing = [k for k, v in present.items() if v is None]
    if missing:
        raise ConfigurationError(
            f"method '{method}' requires missing input(s): {', '.join(missing)}",
            method=method, missing=missing)
