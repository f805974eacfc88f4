"""Fast-Lip: worst-case gradient bounds and the local Lipschitz certificate.

The gradient of a ReLU network is ``w̄ Λ^(m-1) W^(m-1) ... Λ^(1) W^(1)``
with 0/1 diagonal activation matrices Λ. Neurons in I+ contribute exactly,
uncertain neurons contribute anything between 0 and their full value. The
recursion keeps a constant part C and slack bounds L <= 0 <= U so that every
realisable gradient entry lies in [C + L, C + U].
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidStateError, NumericError, ShapeError
from ..linalg.norms import Matrix, Vector, vec_qnorm
from ..model.network import MarginNetwork
from ..model.perturbation import PerturbationSpec
from .fastlin import LayerBounds, NeuronPartition, classify_neurons, propagate_bounds

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class GradBoundState:
    """Constant part C and slacks L, U of a bounded matrix product."""

    C: Matrix
    L: Matrix
    U: Matrix

    @classmethod
    def exact(cls, C: Matrix) -> "GradBoundState":
        C = np.array(C, dtype=np.float64)
        return cls(C, np.zeros_like(C), np.zeros_like(C))

    @property
    def lower(self) -> Matrix:
        return self.C + self.L

    @property
    def upper(self) -> Matrix:
        return self.C + self.U

    def magnitude(self) -> Matrix:
        """Element-wise max(|C + L|, |C + U|)."""
        return np.maximum(np.abs(self.lower), np.abs(self.upper))

    def transposed(self) -> "GradBoundState":
        return GradBoundState(self.C.T.copy(), self.L.T.copy(), self.U.T.copy())


@dataclass(frozen=True, slots=True, eq=False)
class LipschitzBound:
    """Outcome of the local Lipschitz certificate for one ball."""

    radius: float
    margin: float
    lipschitz: float
    misclassified: bool = False


def bound_layer_grad(state: GradBoundState, W_next: Matrix, part: NeuronPartition) -> GradBoundState:
    """Bound ``W_next Λ Y`` where Y lies in [C + L, C + U] and Λ follows *part*."""
    W = np.asarray(W_next, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] != state.C.shape[0] or part.size != state.C.shape[0]:
        raise ShapeError(
            f"weights {W.shape} do not match a state with {state.C.shape[0]} rows "
            f"and a partition of {part.size} neurons"
        )
    act = part.active
    unc = part.uncertain

    W_act = W[:, act]
    W_act_pos = np.maximum(W_act, 0.0)
    W_act_neg = np.minimum(W_act, 0.0)
    C_new = W_act @ state.C[act]
    U_new = W_act_pos @ state.U[act] + W_act_neg @ state.L[act]
    L_new = W_act_pos @ state.L[act] + W_act_neg @ state.U[act]

    if unc.size:
        W_unc = W[:, unc]
        W_unc_pos = np.maximum(W_unc, 0.0)
        W_unc_neg = np.minimum(W_unc, 0.0)
        low_neg = np.minimum(state.C[unc] + state.L[unc], 0.0)
        high_pos = np.maximum(state.C[unc] + state.U[unc], 0.0)
        U_new += W_unc_neg @ low_neg + W_unc_pos @ high_pos
        L_new += W_unc_pos @ low_neg + W_unc_neg @ high_pos

    return GradBoundState(C_new, L_new, U_new)


def _require_finite(state: GradBoundState, layer: int) -> GradBoundState:
    if not (np.all(np.isfinite(state.C)) and np.all(np.isfinite(state.L)) and np.all(np.isfinite(state.U))):
        raise NumericError("non-finite gradient bound", layer=layer)
    return state


def _check_bounds(net: MarginNetwork, lb: LayerBounds) -> list[NeuronPartition]:
    hidden = net.num_layers - 1
    if len(lb) < hidden:
        raise InvalidStateError(f"gradient bounds need {hidden} hidden layers, got {len(lb)}")
    return [classify_neurons(lb.layer(k), layer=k) for k in range(1, hidden + 1)]


def gradient_bounds(net: MarginNetwork, lb: LayerBounds) -> GradBoundState:
    """Bounds on the input gradient of every output, shape n_out x n_0.

    Folds from the output row towards the input so the state stays
    n_out x n_k wide.
    """
    partitions = _check_bounds(net, lb)
    state = GradBoundState.exact(net.weight(net.num_layers).T)
    for k in range(net.num_layers - 1, 0, -1):
        state = _require_finite(bound_layer_grad(state, net.weight(k).T, partitions[k - 1]), k)
    return state.transposed()


def gradient_bounds_right_to_left(net: MarginNetwork, lb: LayerBounds) -> GradBoundState:
    """Reference fold starting from W^(1); state is n_k x n_0."""
    partitions = _check_bounds(net, lb)
    state = GradBoundState.exact(net.weight(1))
    for k in range(1, net.num_layers):
        state = _require_finite(bound_layer_grad(state, net.weight(k + 1), partitions[k - 1]), k + 1)
    return state


def grad_bound_all(net: MarginNetwork, lb: LayerBounds) -> Vector:
    """Per-coordinate bound v on |grad g(x)| over the region behind *lb*."""
    return gradient_bounds(net, lb).magnitude()[0]


def grad_bound_right_to_left(net: MarginNetwork, lb: LayerBounds) -> Vector:
    return gradient_bounds_right_to_left(net, lb).magnitude()[0]


def local_lipschitz(net: MarginNetwork, spec: PerturbationSpec, lb: LayerBounds | None = None) -> float:
    """Upper bound on max ||grad g||_q over the region of *spec*."""
    if lb is None:
        lb = propagate_bounds(net, spec)
    return vec_qnorm(grad_bound_all(net, lb), spec.q)


def lip_lower_bound(
    net: MarginNetwork, spec: PerturbationSpec, lb: LayerBounds | None = None
) -> LipschitzBound:
    """Certified radius min(g(x0) / ||v||_q, eps) for the ball of *spec*."""
    margin = net.margin(spec.x0)
    if margin <= 0.0:
        return LipschitzBound(0.0, margin, math.nan, misclassified=True)
    lipschitz = local_lipschitz(net, spec, lb)
    if lipschitz == 0.0:
        return LipschitzBound(spec.eps, margin, 0.0)
    radius = min(margin / lipschitz, spec.eps)
    logger.debug("g(x0)=%.6g, L=%.6g, radius=%.6g at eps=%.6g", margin, lipschitz, radius, spec.eps)
    return LipschitzBound(radius, margin, lipschitz)
