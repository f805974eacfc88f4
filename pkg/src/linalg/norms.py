"""Vector q-norms, dual orders and induced operator norms."""

from __future__ import annotations

import logging
import math
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import InvalidParameterError, ShapeError

logger = logging.getLogger(__name__)

Matrix = NDArray[np.float64]
Vector = NDArray[np.float64]
NormOrder = float

SUPPORTED_ORDERS: tuple[float, ...] = (1.0, 2.0, math.inf)

POWER_ITER_MAX = 500
POWER_ITER_RTOL = 1e-10


def parse_norm_order(value: Union[str, int, float]) -> NormOrder:
    """Return the norm order named by *value* ("1", "2", "inf", 1, 2, inf)."""
    if isinstance(value, str):
        token = value.strip().lower()
        if token in {"inf", "infinity", "i", "linf"}:
            return math.inf
        try:
            value = float(token)
        except ValueError as exc:
            raise InvalidParameterError(f"unsupported norm order {value!r}") from exc
    order = float(value)
    if order not in SUPPORTED_ORDERS:
        raise InvalidParameterError(f"unsupported norm order {value!r}; expected 1, 2 or inf")
    return order


def format_norm_order(p: NormOrder) -> str:
    """Return the canonical text form of *p* used in reports."""
    p = parse_norm_order(p)
    return "inf" if math.isinf(p) else str(int(p))


def dual_order(p: NormOrder) -> NormOrder:
    """Return q with 1/p + 1/q = 1."""
    p = parse_norm_order(p)
    if p == 1.0:
        return math.inf
    if p == 2.0:
        return 2.0
    return 1.0


def as_vector(values: ArrayLike, name: str = "vector") -> Vector:
    """Return *values* as a finite 1-D float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name} contains non-finite entries")
    return arr


def as_matrix(values: ArrayLike, name: str = "matrix") -> Matrix:
    """Return *values* as a finite, C-contiguous 2-D float64 array."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name} contains non-finite entries")
    return arr


def vec_qnorm(v: ArrayLike, q: NormOrder) -> float:
    """Return the q-norm of *v* for q in {1, 2, inf}."""
    q = parse_norm_order(q)
    arr = np.asarray(v, dtype=np.float64)
    if arr.size == 0:
        return 0.0
    if q == 1.0:
        return float(np.sum(np.abs(arr)))
    if q == 2.0:
        return float(np.linalg.norm(arr))
    return float(np.max(np.abs(arr)))


def row_qnorms(A: ArrayLike, q: NormOrder) -> Vector:
    """Return the q-norm of every row of *A*."""
    q = parse_norm_order(q)
    arr = np.asarray(A, dtype=np.float64)
    if arr.shape[1] == 0:
        return np.zeros(arr.shape[0])
    if q == 1.0:
        return np.sum(np.abs(arr), axis=1)
    if q == 2.0:
        return np.sqrt(np.sum(arr * arr, axis=1))
    return np.max(np.abs(arr), axis=1)


def induced_norm(W: ArrayLike, p: NormOrder) -> float:
    """Return the operator norm of *W* from l_p to l_p."""
    p = parse_norm_order(p)
    mat = np.asarray(W, dtype=np.float64)
    if mat.ndim != 2 or mat.size == 0:
        raise InvalidParameterError("induced_norm requires a non-empty matrix")
    if math.isinf(p):
        return float(np.max(np.sum(np.abs(mat), axis=1)))
    if p == 1.0:
        return float(np.max(np.sum(np.abs(mat), axis=0)))
    return spectral_norm(mat)


def spectral_norm(
    W: Matrix,
    max_iter: int = POWER_ITER_MAX,
    rtol: float = POWER_ITER_RTOL,
) -> float:
    """Largest singular value of *W* by power iteration on W^T W.

    Starts from the all-ones vector. If that start lies in the null space of
    *W* the column with the largest norm is used instead, which keeps the
    result deterministic.
    """
    v = np.ones(W.shape[1])
    Wv = W @ v
    if not np.any(Wv):
        column = int(np.argmax(np.sum(W * W, axis=0)))
        v = np.zeros(W.shape[1])
        v[column] = 1.0
        Wv = W @ v
        if not np.any(Wv):
            return 0.0
    v /= np.linalg.norm(v)
    sigma = float(np.linalg.norm(W @ v))
    for iteration in range(max_iter):
        w = W.T @ (W @ v)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            break
        v = w / norm
        updated = float(np.linalg.norm(W @ v))
        if abs(updated - sigma) <= rtol * updated:
            sigma = updated
            logger.debug("power iteration converged after %d steps", iteration + 1)
            break
        sigma = updated
    return sigma


def matmul(A: ArrayLike, B: ArrayLike) -> Matrix:
    """Return the matrix product A @ B with a shape check."""
    left = np.asarray(A, dtype=np.float64)
    right = np.asarray(B, dtype=np.float64)
    if left.ndim != 2 or right.ndim != 2:
        raise ShapeError("matmul expects two-dimensional operands")
    if left.shape[1] != right.shape[0]:
        raise ShapeError(f"cannot multiply {left.shape} by {right.shape}")
    return left @ right


def matvec(A: ArrayLike, x: ArrayLike) -> Vector:
    """Return A @ x with a shape check."""
    mat = np.asarray(A, dtype=np.float64)
    vec = np.asarray(x, dtype=np.float64)
    if mat.ndim != 2 or vec.ndim != 1:
        raise ShapeError("matvec expects a matrix and a vector")
    if mat.shape[1] != vec.shape[0]:
        raise ShapeError(f"cannot multiply {mat.shape} by vector of length {vec.shape[0]}")
    return mat @ vec
