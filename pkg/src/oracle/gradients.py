"""Gradients of margin networks through a fixed activation pattern."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from ..errors import InvalidParameterError
from ..linalg.norms import Vector
from ..model.network import MarginNetwork

BOUNDARY_TOL = 1e-12


def activation_pattern(net: MarginNetwork, x: ArrayLike) -> list[np.ndarray]:
    """0/1 diagonals of Λ^(1), ..., Λ^(m-1) at *x*."""
    return [(z > 0.0).astype(np.float64) for z in net.pre_activations(x)[:-1]]


def pattern_gradient(net: MarginNetwork, pattern: Sequence[np.ndarray]) -> Vector:
    """Return w̄ Λ^(m-1) W^(m-1) ... Λ^(1) W^(1) for a given pattern."""
    if len(pattern) != net.num_layers - 1:
        raise InvalidParameterError(
            f"pattern covers {len(pattern)} layers, network has {net.num_layers - 1} hidden"
        )
    row = np.array(net.margin_row, dtype=np.float64)
    for k in range(net.num_layers - 1, 0, -1):
        row = (row * pattern[k - 1]) @ net.weight(k)
    return row


def analytic_gradient(net: MarginNetwork, x: ArrayLike) -> Vector | None:
    """Gradient of g at *x*, or None when some pre-activation sits on a kink."""
    pre = net.pre_activations(x)[:-1]
    if any(np.any(np.abs(z) < BOUNDARY_TOL) for z in pre):
        return None
    return pattern_gradient(net, [(z > 0.0).astype(np.float64) for z in pre])


def one_sided_gradient(net: MarginNetwork, x: ArrayLike) -> Vector:
    """Gradient with kinks treated as inactive; used by the attack."""
    return pattern_gradient(net, activation_pattern(net, x))
