"""Brute-force references for tiny instances: input grids and activation patterns."""

from __future__ import annotations

import itertools
import logging
import math
from typing import Iterator

import numpy as np
from numpy.typing import ArrayLike

from ..bounds.fastlin import LayerBounds, classify_neurons
from ..errors import CapacityError, InvalidParameterError, InvalidStateError
from ..io.models import ORACLE_GRID_MIN, OracleResult
from ..linalg.norms import NormOrder, Vector, parse_norm_order, vec_qnorm
from ..model.network import MarginNetwork, Network, merge_last_layer
from .gradients import pattern_gradient

logger = logging.getLogger(__name__)

MAX_GRID_DIM = 3
MAX_UNCERTAIN = 16
_GRID_CHUNK = 1 << 16


def grid_min_distortion(
    net: Network,
    x0: ArrayLike,
    c: int,
    j: int,
    p: NormOrder,
    resolution: int,
    box_radius: float = 1.0,
) -> OracleResult:
    """Smallest ||delta||_p on a grid over [-box_radius, box_radius]^n0 with g <= 0.

    The answer is an upper bound on the true minimum distortion.
    """
    p = parse_norm_order(p)
    anchor = np.asarray(x0, dtype=np.float64)
    dim = anchor.shape[0]
    if dim > MAX_GRID_DIM:
        raise InvalidParameterError(f"grid search supports at most {MAX_GRID_DIM} inputs, got {dim}")
    if resolution < 2:
        raise InvalidParameterError("grid resolution must be at least 2")
    margin_net = merge_last_layer(net, c, j)
    axis = np.linspace(-box_radius, box_radius, resolution)
    total = resolution**dim

    best = math.inf
    witness: Vector | None = None
    for start in range(0, total, _GRID_CHUNK):
        flat = np.arange(start, min(start + _GRID_CHUNK, total))
        deltas = np.stack([axis[idx] for idx in np.unravel_index(flat, (resolution,) * dim)], axis=1)
        margins = margin_net.margin_batch(anchor + deltas)
        hits = np.nonzero(margins <= 0.0)[0]
        if hits.size == 0:
            continue
        norms = np.linalg.norm(deltas[hits], ord=p, axis=1)
        pick = int(np.argmin(norms))
        if norms[pick] < best:
            best = float(norms[pick])
            witness = deltas[hits[pick]].copy()

    if witness is None:
        logger.info("no misclassifying grid point within box radius %.4g", box_radius)
        return OracleResult(ORACLE_GRID_MIN, box_radius, found=False, samples=total)
    return OracleResult(ORACLE_GRID_MIN, best, found=True, witness=witness, samples=total)


def _uncertain_sets(net: MarginNetwork, lb: LayerBounds) -> tuple[list[np.ndarray], list[np.ndarray]]:
    hidden = net.num_layers - 1
    if len(lb) < hidden:
        raise InvalidStateError(f"pattern enumeration needs {hidden} hidden layers, got {len(lb)}")
    partitions = [classify_neurons(lb.layer(k), layer=k) for k in range(1, hidden + 1)]
    base = [p.active_mask.astype(np.float64) for p in partitions]
    uncertain = [p.uncertain for p in partitions]
    return base, uncertain


def enumerate_pattern_gradients(net: MarginNetwork, lb: LayerBounds) -> Iterator[Vector]:
    """Yield the gradient of every assignment of the uncertain neurons."""
    base, uncertain = _uncertain_sets(net, lb)
    slots = [(k, int(r)) for k, rows in enumerate(uncertain) for r in rows]
    if len(slots) > MAX_UNCERTAIN:
        raise CapacityError(len(slots), MAX_UNCERTAIN)
    for bits in itertools.product((0.0, 1.0), repeat=len(slots)):
        pattern = [layer.copy() for layer in base]
        for (k, r), bit in zip(slots, bits):
            pattern[k][r] = bit
        yield pattern_gradient(net, pattern)


def pattern_enum_max_grad(net: MarginNetwork, lb: LayerBounds, q: NormOrder) -> float:
    """Max over all 2^|I| uncertain-neuron assignments of ||gradient||_q."""
    q = parse_norm_order(q)
    best = 0.0
    count = 0
    for gradient in enumerate_pattern_gradients(net, lb):
        best = max(best, vec_qnorm(gradient, q))
        count += 1
    logger.debug("enumerated %d activation patterns, max norm %.6g", count, best)
    return best
