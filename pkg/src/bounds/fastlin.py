"""Fast-Lin: layer-by-layer linear bounds for ReLU networks.

Each uncertain neuron (l < 0 < u) is sandwiched between the two parallel lines
``d*y`` and ``d*(y - l)`` with slope ``d = u / (u - l)``. Folding those lines
back through the network gives, for any target layer, one affine lower and one
affine upper function of the input that share the coefficient matrix A^(0).
Their extremes over the perturbation region are closed form.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from ..errors import InvalidStateError, InvariantViolationError, NumericError
from ..linalg.norms import Matrix, Vector
from ..model.network import Network
from ..model.perturbation import PerturbationSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True, eq=False)
class NeuronBounds:
    """Pre-ReLU interval [lower, upper] of one layer."""

    lower: Vector
    upper: Vector

    def __post_init__(self) -> None:
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise InvalidStateError(f"bound shapes differ: {lower.shape} vs {upper.shape}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def __len__(self) -> int:
        return int(self.lower.shape[0])


@dataclass(slots=True)
class LayerBounds:
    """Pre-ReLU bounds for hidden layers 1..k, in order."""

    layers: list[NeuronBounds] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.layers)

    def layer(self, k: int) -> NeuronBounds:
        """Return the bounds of hidden layer *k* (1-based)."""
        if not 1 <= k <= len(self.layers):
            raise InvalidStateError(f"no bounds recorded for layer {k}")
        return self.layers[k - 1]

    def append(self, lower: ArrayLike, upper: ArrayLike) -> None:
        self.layers.append(NeuronBounds(lower, upper))


@dataclass(frozen=True, slots=True, eq=False)
class NeuronPartition:
    """Index sets I+ (always active), I- (always inactive) and I (uncertain)."""

    active: np.ndarray
    inactive: np.ndarray
    uncertain: np.ndarray
    size: int

    @property
    def state(self) -> np.ndarray:
        """+1 for I+, -1 for I-, 0 for uncertain."""
        state = np.zeros(self.size, dtype=np.int8)
        state[self.active] = 1
        state[self.inactive] = -1
        return state

    @property
    def active_mask(self) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        mask[self.active] = True
        return mask

    @property
    def uncertain_mask(self) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        mask[self.uncertain] = True
        return mask


@dataclass(slots=True)
class BoundState:
    """Intermediate quantities of one backward pass towards a target layer.

    ``A[k]`` is A^(k) for k = 0..t-1, ``slopes[k-1]`` the diagonal of D^(k) and
    ``lowers[k-1]`` the lower pre-activation bounds used by T^(k) and H^(k).
    """

    A: list[Matrix]
    slopes: list[Vector]
    lowers: list[Vector]
    uncertain: list[np.ndarray]
    nu: Vector
    mu_plus: Vector
    mu_minus: Vector

    def T(self, k: int) -> Matrix:
        """T^(k): l_r where A^(k)_{j,r} > 0 on uncertain r, shape n_k x n_out."""
        return self._selector(k, positive=True)

    def H(self, k: int) -> Matrix:
        """H^(k): l_r where A^(k)_{j,r} < 0 on uncertain r, shape n_k x n_out."""
        return self._selector(k, positive=False)

    def _selector(self, k: int, positive: bool) -> Matrix:
        A_k = self.A[k].T
        picked = A_k > 0 if positive else A_k < 0
        picked &= self.uncertain[k - 1][:, None]
        return np.where(picked, self.lowers[k - 1][:, None], 0.0)


@dataclass(frozen=True, slots=True, eq=False)
class AffineBound:
    """Affine function ``coef @ x + const`` with one row per output."""

    coef: Matrix
    const: Vector

    def __call__(self, x: ArrayLike) -> Vector:
        return self.coef @ np.asarray(x, dtype=np.float64) + self.const

    def evaluate_batch(self, xs: ArrayLike) -> Matrix:
        return np.asarray(xs, dtype=np.float64) @ self.coef.T + self.const


def classify_neurons(bounds: NeuronBounds, layer: int | None = None) -> NeuronPartition:
    """Split neurons into always-active, always-inactive and uncertain sets.

    l >= 0 is active and u <= 0 is inactive. A degenerate interval l == u is
    classified by sign, so l == u == 0 is inactive.
    """
    lower, upper = bounds.lower, bounds.upper
    bad = np.nonzero(lower > upper)[0]
    if bad.size:
        r = int(bad[0])
        raise InvariantViolationError(
            f"lower bound {lower[r]} exceeds upper bound {upper[r]} at neuron {r}"
            + (f" of layer {layer}" if layer is not None else ""),
            layer=layer,
            neuron=r,
        )
    degenerate = lower == upper
    active = np.where(degenerate, lower > 0, lower >= 0)
    inactive = ~active & (upper <= 0)
    uncertain = ~active & ~inactive
    return NeuronPartition(
        active=np.nonzero(active)[0],
        inactive=np.nonzero(inactive)[0],
        uncertain=np.nonzero(uncertain)[0],
        size=len(bounds),
    )


def slope_matrix(bounds: NeuronBounds, partition: NeuronPartition) -> Vector:
    """Diagonal of D^(k): 1 on I+, 0 on I-, u/(u-l) on uncertain neurons."""
    d = np.zeros(len(bounds))
    d[partition.active] = 1.0
    unc = partition.uncertain
    lower = bounds.lower[unc]
    upper = bounds.upper[unc]
    d[unc] = upper / (upper - lower)
    return d


class FastLinPropagator:
    """Computes pre-activation bounds layer by layer for one perturbation region.

    ``W^(k) D^(k-1)`` is formed once per layer and reused by every later
    target layer.
    """

    def __init__(self, net: Network, spec: PerturbationSpec, prior: LayerBounds | None = None) -> None:
        if spec.dim != net.input_dim:
            raise InvalidStateError(
                f"anchor has {spec.dim} coordinates but the network expects {net.input_dim}"
            )
        self.net = net
        self.spec = spec
        self.bounds = LayerBounds()
        self._partitions: list[NeuronPartition] = []
        self._slopes: list[Vector] = []
        self._scaled: dict[int, Matrix] = {}
        if prior is not None:
            for k, layer_bounds in enumerate(prior.layers, start=1):
                self._record(k, layer_bounds)

    def _record(self, k: int, layer_bounds: NeuronBounds) -> None:
        partition = classify_neurons(layer_bounds, layer=k)
        self.bounds.layers.append(layer_bounds)
        self._partitions.append(partition)
        self._slopes.append(slope_matrix(layer_bounds, partition))
        logger.debug(
            "layer %d: %d active, %d inactive, %d uncertain",
            k,
            partition.active.size,
            partition.inactive.size,
            partition.uncertain.size,
        )

    def _scaled_weight(self, k: int) -> Matrix:
        """W^(k) D^(k-1) for k >= 2."""
        cached = self._scaled.get(k)
        if cached is None:
            cached = self.net.weight(k) * self._slopes[k - 2][None, :]
            self._scaled[k] = cached
        return cached

    def backward(
        self,
        target: int,
        keep_state: bool = False,
    ) -> tuple[Matrix, Vector, Vector, Vector, BoundState | None]:
        """Fold the relaxation from layer *target* back to the input.

        Returns ``(A0, const, mu_plus, mu_minus, state)`` where ``const`` is
        b^(t) + sum_k A^(k) b^(k) so that nu = A0 x0 + const.
        """
        if not 1 <= target <= self.net.num_layers:
            raise InvalidStateError(f"target layer {target} outside 1..{self.net.num_layers}")
        if len(self._partitions) < target - 1:
            raise InvalidStateError(
                f"bounds for layers 1..{target - 1} are required, only {len(self._partitions)} available"
            )
        W_t = self.net.weight(target)
        b_t = self.net.bias(target)
        n_out = W_t.shape[0]
        const = np.array(b_t, dtype=np.float64, copy=True)
        mu_plus = np.zeros(n_out)
        mu_minus = np.zeros(n_out)
        kept_A: list[Matrix] = []

        if target == 1:
            A = np.array(W_t, dtype=np.float64)
        else:
            A = W_t * self._slopes[target - 2][None, :]
            for k in range(target - 1, 0, -1):
                if keep_state:
                    kept_A.append(A)
                const += A @ self.net.bias(k)
                unc = self._partitions[k - 1].uncertain
                if unc.size:
                    A_unc = A[:, unc]
                    l_unc = self.bounds.layers[k - 1].lower[unc]
                    mu_plus -= np.maximum(A_unc, 0.0) @ l_unc
                    mu_minus -= np.minimum(A_unc, 0.0) @ l_unc
                A = A @ (self._scaled_weight(k) if k > 1 else self.net.weight(1))

        state = None
        if keep_state:
            kept_A.append(A)
            kept_A.reverse()
            nu = A @ self.spec.x0 + const
            state = BoundState(
                A=kept_A,
                slopes=list(self._slopes[: target - 1]),
                lowers=[b.lower for b in self.bounds.layers[: target - 1]],
                uncertain=[p.uncertain_mask for p in self._partitions[: target - 1]],
                nu=nu,
                mu_plus=mu_plus,
                mu_minus=mu_minus,
            )
        return A, const, mu_plus, mu_minus, state

    def two_side_bounds(self, target: int) -> tuple[Vector, Vector]:
        """Return (gamma_L, gamma_U) for the pre-activations of layer *target*."""
        A0, const, mu_plus, mu_minus, _ = self.backward(target)
        upper_lin, lower_lin = self.spec.linear_extremes(A0)
        gamma_u = upper_lin + const + mu_plus
        gamma_l = lower_lin + const + mu_minus
        if not (np.all(np.isfinite(gamma_u)) and np.all(np.isfinite(gamma_l))):
            raise NumericError("non-finite bound", layer=target)
        return gamma_l, gamma_u

    def propagate(self, upto: int | None = None) -> LayerBounds:
        """Bound hidden layers in order, up to layer *upto* (default m-1)."""
        last = self.net.num_layers - 1 if upto is None else upto
        for k in range(len(self._partitions) + 1, last + 1):
            lower, upper = self.two_side_bounds(k)
            self._record(k, NeuronBounds(lower, upper))
        return self.bounds


def compute_two_side_bounds(
    net: Network,
    spec: PerturbationSpec,
    prior: LayerBounds | None,
    target: int,
) -> tuple[Vector, Vector]:
    """Closed-form (gamma_L, gamma_U) of layer *target* given bounds of layers below."""
    if prior is None:
        prior = LayerBounds()
    if len(prior) < target - 1:
        raise InvalidStateError(
            f"layer {target} needs bounds for layers 1..{target - 1}, got {len(prior)}"
        )
    needed = LayerBounds(list(prior.layers[: target - 1]))
    return FastLinPropagator(net, spec, needed).two_side_bounds(target)


def propagate_bounds(net: Network, spec: PerturbationSpec) -> LayerBounds:
    """Pre-ReLU bounds of every hidden layer over the perturbation region."""
    return FastLinPropagator(net, spec).propagate()


def bound_state(net: Network, spec: PerturbationSpec, lb: LayerBounds, target: int) -> BoundState:
    """Return the full A/D/T/H state of the backward pass for *target*."""
    propagator = FastLinPropagator(net, spec, LayerBounds(list(lb.layers[: target - 1])))
    state = propagator.backward(target, keep_state=True)[4]
    assert state is not None
    return state


def output_bound_functions(
    net: Network, spec: PerturbationSpec, lb: LayerBounds | None = None
) -> tuple[AffineBound, AffineBound]:
    """Affine f^L and f^U with f^L(x) <= f(x) <= f^U(x) on the region."""
    if lb is None:
        lb = propagate_bounds(net, spec)
    m = net.num_layers
    if len(lb) < m - 1:
        raise InvalidStateError(f"output bounds need {m - 1} hidden layers, got {len(lb)}")
    propagator = FastLinPropagator(net, spec, LayerBounds(list(lb.layers[: m - 1])))
    A0, const, mu_plus, mu_minus, _ = propagator.backward(m)
    return AffineBound(A0, const + mu_minus), AffineBound(A0.copy(), const + mu_plus)


def margin_lower_bound(net: Network, spec: PerturbationSpec, lb: LayerBounds | None = None) -> Vector:
    """gamma_L of the output layer; for a margin network this is one value."""
    propagator = FastLinPropagator(net, spec, lb)
    propagator.propagate()
    gamma_l, _ = propagator.two_side_bounds(net.num_layers)
    return gamma_l
