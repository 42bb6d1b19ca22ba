"""Minimal dense double-precision linear algebra.

Vectors are 1-D float64 ndarrays and matrices are 2-D float64 ndarrays; the
`vector`/`matrix` constructors validate shape and finiteness.  This module is
deliberately plain: it is the brute-force baseline that every structured
operator in the library is verified against, so clarity beats speed.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError, SingularMatrixError

PIVOT_TOLERANCE = 1e-12


def vector(values) -> np.ndarray:
    """Validate and return a finite 1-D float64 vector."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ShapeError(f"vector must be 1-D and non-empty, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite (no NaN/Inf)")
    return v


def matrix(values) -> np.ndarray:
    """Validate and return a finite 2-D float64 matrix."""
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise ShapeError(f"matrix must be 2-D and non-empty, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite (no NaN/Inf)")
    return m


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.float64)


def matvec(m: np.ndarray, x: np.ndarray) -> np.ndarray:
    if m.shape[1] != x.shape[0]:
        raise ShapeError(
            f"matvec: matrix is {m.shape[0]}x{m.shape[1]} but vector has length {x.shape[0]}"
        )
    return m @ x


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"matmul: left is {a.shape[0]}x{a.shape[1]} but right is {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def invert(m: np.ndarray) -> np.ndarray:
    """Inverse by Gauss-Jordan elimination with partial pivoting.

    A pivot of magnitude below PIVOT_TOLERANCE is treated as singular.
    """
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"invert needs a square matrix, got shape {m.shape}")
    n = m.shape[0]
    aug = np.hstack([np.array(m, dtype=np.float64), np.eye(n)])
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[pivot, col]) < PIVOT_TOLERANCE:
            raise SingularMatrixError(
                f"singular matrix: pivot magnitude {abs(aug[pivot, col]):.3e} "
                f"below {PIVOT_TOLERANCE:g} at column {col}"
            )
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] /= aug[col, col]
        factors = aug[:, col].copy()
        factors[col] = 0.0
        aug -= np.outer(factors, aug[col])
    return aug[:, n:]


def pinv_full_rank(m: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudo-inverse (m^T m)^-1 m^T for full-column-rank m."""
    if m.ndim != 2 or m.shape[0] < m.shape[1]:
        raise ShapeError(
            f"pinv_full_rank needs rows >= cols, got {m.shape[0]}x{m.shape[1]}"
        )
    gram = m.T @ m
    return invert(gram) @ m.T
