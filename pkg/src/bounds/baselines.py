"""Global operator-norm bound and the sub-additive two-layer Lipschitz bound."""

from __future__ import annotations

import math

from numpy.typing import ArrayLike

from ..errors import InvalidParameterError, NumericError
from ..linalg.norms import NormOrder, dual_order, induced_norm, parse_norm_order, vec_qnorm
from ..model.network import MarginNetwork, Network, merge_last_layer
from .fastlin import NeuronPartition


def global_lipschitz(margin_net: MarginNetwork, p: NormOrder) -> float:
    """||w̄||_q times the product of the p-induced norms of the hidden layers."""
    p = parse_norm_order(p)
    constant = vec_qnorm(margin_net.margin_row, dual_order(p))
    for k in range(1, margin_net.num_layers):
        constant *= induced_norm(margin_net.weight(k), p)
    return constant


def opnorm_bound(net: Network, x0: ArrayLike, c: int, j: int, p: NormOrder) -> float:
    """g(x0) / L_global, +inf when the global constant vanishes."""
    margin_net = merge_last_layer(net, c, j)
    margin = margin_net.margin(x0)
    if margin <= 0.0:
        return 0.0
    constant = global_lipschitz(margin_net, p)
    if not math.isfinite(constant):
        raise NumericError(f"global Lipschitz constant is {constant}", layer=margin_net.num_layers)
    if constant == 0.0:
        return math.inf
    return margin / constant


def appendix_e_bound_2layer(net: MarginNetwork, part: NeuronPartition, q: NormOrder) -> float:
    """||w̄ Λ_a W^(1)||_q + sum over uncertain r of ||w̄_r W^(1)_{r,:}||_q."""
    if net.num_layers != 2:
        raise InvalidParameterError(
            f"the sub-additive bound is defined for one hidden layer, got {net.num_layers - 1}"
        )
    w_bar = net.margin_row
    W1 = net.weight(1)
    if part.size != W1.shape[0]:
        raise InvalidParameterError("partition does not match the hidden layer width")
    fixed = w_bar[part.active] @ W1[part.active]
    total = vec_qnorm(fixed, q)
    for r in part.uncertain:
        total += abs(float(w_bar[r])) * vec_qnorm(W1[r], q)
    return float(total)
