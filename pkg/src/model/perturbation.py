"""Perturbation regions B_p(x0, eps), optionally clipped to an input box."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from ..errors import InvalidParameterError
from ..linalg.norms import Matrix, NormOrder, Vector, as_vector, dual_order, parse_norm_order, row_qnorms


@dataclass(frozen=True, slots=True, eq=False)
class PerturbationSpec:
    """Anchor x0, norm order p and radius eps; ``clip`` applies to p = inf only."""

    x0: Vector
    p: NormOrder
    eps: float
    clip: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        x0 = as_vector(self.x0, "x0")
        p = parse_norm_order(self.p)
        eps = float(self.eps)
        if not math.isfinite(eps) or eps < 0.0:
            raise InvalidParameterError(f"eps must be a finite non-negative number, got {self.eps}")
        if self.clip is not None:
            if not math.isinf(p):
                raise InvalidParameterError("input clipping is only supported for p = inf")
            lo, hi = (float(v) for v in self.clip)
            if lo > hi:
                raise InvalidParameterError(f"clip range ({lo}, {hi}) is empty")
            object.__setattr__(self, "clip", (lo, hi))
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "eps", eps)

    @property
    def q(self) -> NormOrder:
        return dual_order(self.p)

    @property
    def dim(self) -> int:
        return int(self.x0.shape[0])

    def box(self) -> tuple[Vector, Vector]:
        """Per-coordinate interval of the region for p = inf."""
        lower = self.x0 - self.eps
        upper = self.x0 + self.eps
        if self.clip is not None:
            lower = np.clip(lower, *self.clip)
            upper = np.clip(upper, *self.clip)
        return lower, upper

    def linear_extremes(self, A: ArrayLike) -> tuple[Vector, Vector]:
        """Return (max, min) of ``A x`` over the region, one entry per row of *A*."""
        mat: Matrix = np.asarray(A, dtype=np.float64)
        if self.clip is not None:
            lower, upper = self.box()
            centre = 0.5 * (lower + upper)
            half = 0.5 * (upper - lower)
            mid = mat @ centre
            spread = np.abs(mat) @ half
            return mid + spread, mid - spread
        mid = mat @ self.x0
        spread = self.eps * row_qnorms(mat, self.q)
        return mid + spread, mid - spread
