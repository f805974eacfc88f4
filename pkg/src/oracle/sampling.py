"""Seeded sampling inside and on the surface of l_p balls."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike

from ..errors import InvalidParameterError
from ..linalg.norms import Matrix, NormOrder, parse_norm_order


def _directions(rng: np.random.Generator, n: int, dim: int, p: float) -> Matrix:
    """Unit-norm directions; l2 uniform on the sphere, l1 via Laplace draws."""
    if math.isinf(p):
        raw = rng.uniform(-1.0, 1.0, size=(n, dim))
        # push one coordinate per row onto a face of the cube
        faces = rng.integers(0, dim, size=n)
        signs = rng.choice([-1.0, 1.0], size=n)
        raw[np.arange(n), faces] = signs
        return raw
    raw = rng.normal(size=(n, dim)) if p == 2.0 else rng.laplace(size=(n, dim))
    norms = np.linalg.norm(raw, ord=p, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return raw / norms


def sample_in_ball(
    x0: ArrayLike,
    eps: float,
    p: NormOrder,
    n: int,
    seed: int,
    clip: tuple[float, float] | None = None,
) -> Matrix:
    """Return *n* points x with ||x - x0||_p <= eps, one per row."""
    if eps < 0.0:
        raise InvalidParameterError(f"eps must be non-negative, got {eps}")
    p = parse_norm_order(p)
    center = np.asarray(x0, dtype=np.float64)
    dim = center.shape[0]
    rng = np.random.default_rng(seed)
    if math.isinf(p):
        deltas = rng.uniform(-eps, eps, size=(n, dim))
    else:
        radii = eps * rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / dim)
        deltas = radii * _directions(rng, n, dim, p)
    points = center + deltas
    if clip is not None:
        points = np.clip(points, *clip)
    return points


def sample_on_sphere(
    x0: ArrayLike,
    eps: float,
    p: NormOrder,
    n: int,
    seed: int,
    clip: tuple[float, float] | None = None,
) -> Matrix:
    """Return *n* points with ||x - x0||_p == eps (up to rounding)."""
    if eps < 0.0:
        raise InvalidParameterError(f"eps must be non-negative, got {eps}")
    p = parse_norm_order(p)
    center = np.asarray(x0, dtype=np.float64)
    rng = np.random.default_rng(seed)
    points = center + eps * _directions(rng, n, center.shape[0], p)
    if clip is not None:
        points = np.clip(points, *clip)
    return points
