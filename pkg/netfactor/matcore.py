"""
Dense real-matrix kernels shared by every algorithm.

Matrices are plain float64 `np.ndarray`s of shape (rows, cols). Helpers here
validate shape and finiteness at the boundary and never broadcast silently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from netfactor.errors import DimensionError, InputError, shape_str


@dataclass(frozen=True)
class SplitPair:
    """Nonnegative parts of a signed matrix: source == plus - minus, plus * minus == 0."""

    plus: np.ndarray
    minus: np.ndarray


def as_matrix(m: object, *, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains NaN or Inf")
    return arr


def as_vector(v: object, *, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains NaN or Inf")
    return arr


def require_nonnegative(m: np.ndarray, *, name: str = "matrix") -> np.ndarray:
    if m.size and float(m.min()) < 0.0:
        raise InputError(f"{name} must be entrywise nonnegative (min={float(m.min())!r})")
    return m


def require_same_shape(a: np.ndarray, b: np.ndarray, *, op: str) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes differ ({shape_str(a.shape)} vs {shape_str(b.shape)})")


def matmul(a: object, b: object) -> np.ndarray:
    a = as_matrix(a, name="a")
    b = as_matrix(b, name="b")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"matmul: inner dimensions differ ({shape_str(a.shape)} times {shape_str(b.shape)})"
        )
    return a @ b


def frobenius_sq(m: object) -> float:
    arr = as_matrix(m)
    # Flat dot keeps a single fixed reduction order.
    flat = arr.ravel()
    return float(np.dot(flat, flat))


def hadamard(a: object, b: object) -> np.ndarray:
    a = as_matrix(a, name="a")
    b = as_matrix(b, name="b")
    require_same_shape(a, b, op="hadamard")
    return a * b


def pos_neg_split(m: object) -> SplitPair:
    arr = as_matrix(m)
    absm = np.abs(arr)
    return SplitPair(plus=(absm + arr) / 2.0, minus=(absm - arr) / 2.0)


def row_sums(m: object) -> np.ndarray:
    return as_matrix(m).sum(axis=1)


def ones_column(n: int) -> np.ndarray:
    return np.ones((int(n), 1), dtype=np.float64)
