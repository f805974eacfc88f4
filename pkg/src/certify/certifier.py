"""Targeted and untargeted certification drivers."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from threading import Lock
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike

from ..bounds.baselines import appendix_e_bound_2layer, global_lipschitz
from ..bounds.fastlin import FastLinPropagator, LayerBounds, classify_neurons
from ..bounds.fastlip import grad_bound_all
from ..errors import InvalidParameterError, NumericError
from ..io.models import STATUS_CERTIFIED, STATUS_MISCLASSIFIED, Certificate
from ..linalg.norms import NormOrder, as_vector, format_norm_order, parse_norm_order, vec_qnorm
from ..model.network import MarginNetwork, Network, merge_last_layer
from ..model.perturbation import PerturbationSpec
from .search import SearchConfig, bracket_search

logger = logging.getLogger(__name__)


class Method(str, Enum):
    FAST_LIN = "fast-lin"
    FAST_LIP = "fast-lip"
    OP_NORM = "op-norm"
    APPENDIX_E = "appendix-e"


class TargetMode(str, Enum):
    RUNNER_UP = "runner-up"
    RANDOM = "random"
    LEAST_LIKELY = "least-likely"


class BoundsCache:
    """Hidden-layer Fast-Lin bounds keyed by eps, shared across targets.

    Hidden-layer bounds do not depend on the target class, so every search
    over the same anchor can reuse them.
    """

    def __init__(self, net: Network, x0: ArrayLike, p: NormOrder, clip: tuple[float, float] | None = None) -> None:
        self.net = net
        self.x0 = as_vector(x0, "x0")
        self.p = parse_norm_order(p)
        self.clip = clip
        self._lock = Lock()
        self._entries: dict[float, LayerBounds] = {}
        self.hits = 0

    def spec(self, eps: float) -> PerturbationSpec:
        return PerturbationSpec(self.x0, self.p, eps, self.clip)

    def bounds(self, eps: float) -> LayerBounds:
        with self._lock:
            cached = self._entries.get(eps)
            if cached is not None:
                self.hits += 1
                return cached
        computed = FastLinPropagator(self.net, self.spec(eps)).propagate()
        with self._lock:
            self._entries.setdefault(eps, computed)
        return computed


def _fastlin_predicate(margin_net: MarginNetwork, cache: BoundsCache) -> Callable[[float], bool]:
    def predicate(eps: float) -> bool:
        propagator = FastLinPropagator(margin_net, cache.spec(eps), cache.bounds(eps))
        gamma_l, _ = propagator.two_side_bounds(margin_net.num_layers)
        return bool(gamma_l[0] > 0.0)

    return predicate


def _finite_constant(constant: float, layer: int) -> float:
    if not math.isfinite(constant):
        raise NumericError(f"Lipschitz constant is {constant}", layer=layer)
    return constant


def _lipschitz_predicate(
    margin: float, constant_at: Callable[[float], float]
) -> Callable[[float], bool]:
    def predicate(eps: float) -> bool:
        constant = constant_at(eps)
        if constant == 0.0:
            return True
        return margin / constant >= eps

    return predicate


def _fastlip_constant(margin_net: MarginNetwork, cache: BoundsCache) -> Callable[[float], float]:
    q = cache.spec(0.0).q

    def constant_at(eps: float) -> float:
        constant = vec_qnorm(grad_bound_all(margin_net, cache.bounds(eps)), q)
        return _finite_constant(constant, margin_net.num_layers)

    return constant_at


def _appendix_e_constant(margin_net: MarginNetwork, cache: BoundsCache) -> Callable[[float], float]:
    if margin_net.num_layers != 2:
        raise InvalidParameterError("appendix-e bounds require exactly one hidden layer")
    q = cache.spec(0.0).q

    def constant_at(eps: float) -> float:
        partition = classify_neurons(cache.bounds(eps).layer(1), layer=1)
        return _finite_constant(appendix_e_bound_2layer(margin_net, partition, q), margin_net.num_layers)

    return constant_at


def certify_target(
    net: Network,
    x0: ArrayLike,
    c: int,
    j: int,
    p: NormOrder,
    method: Method | str,
    search: SearchConfig = SearchConfig(),
    clip: tuple[float, float] | None = None,
    cache: BoundsCache | None = None,
) -> Certificate:
    """Largest radius for which *method* proves f_c > f_j around *x0*."""
    method = Method(method)
    p = parse_norm_order(p)
    x0 = as_vector(x0, "x0")
    margin_net = merge_last_layer(net, c, j)
    start = time.perf_counter()

    def finish(radius: float, iterations: int = 0, unsafe: float | None = None, status: str = STATUS_CERTIFIED) -> Certificate:
        return Certificate(
            method=method.value,
            p=format_norm_order(p),
            true_class=c,
            target_class=j,
            radius=radius,
            iterations=iterations,
            bracket_unsafe=unsafe,
            bracket_safe=radius,
            wall_time_ms=(time.perf_counter() - start) * 1000.0,
            status=status,
        )

    if net.predict(x0) != c:
        logger.info("anchor is classified as %d, not %d", net.predict(x0), c)
        return finish(0.0, status=STATUS_MISCLASSIFIED)
    margin = margin_net.margin(x0)
    if margin <= 0.0:
        return finish(0.0, status=STATUS_MISCLASSIFIED)

    if method is Method.OP_NORM:
        constant = _finite_constant(global_lipschitz(margin_net, p), margin_net.num_layers)
        radius = math.inf if constant == 0.0 else margin / constant
        return finish(radius)

    if cache is None:
        cache = BoundsCache(net, x0, p, clip)
    if method is Method.FAST_LIN:
        predicate = _fastlin_predicate(margin_net, cache)
    elif method is Method.FAST_LIP:
        predicate = _lipschitz_predicate(margin, _fastlip_constant(margin_net, cache))
    else:
        predicate = _lipschitz_predicate(margin, _appendix_e_constant(margin_net, cache))

    result = bracket_search(predicate, search)
    logger.debug(
        "%s c=%d j=%d: radius %.6g after %d evaluations", method.value, c, j, result.certified, result.evaluations
    )
    return finish(result.certified, result.iterations, result.unsafe)


def certify_untargeted(
    net: Network,
    x0: ArrayLike,
    c: int,
    p: NormOrder,
    method: Method | str,
    search: SearchConfig = SearchConfig(),
    clip: tuple[float, float] | None = None,
    threads: int = 1,
    cache: BoundsCache | None = None,
) -> Certificate:
    """Minimum over every other class of the targeted radius."""
    method = Method(method)
    p = parse_norm_order(p)
    x0 = as_vector(x0, "x0")
    if net.output_dim < 2:
        raise InvalidParameterError("untargeted certification needs at least two classes")
    if not 0 <= c < net.output_dim:
        raise InvalidParameterError(f"class {c} out of range for {net.output_dim} outputs")
    start = time.perf_counter()
    if cache is None:
        cache = BoundsCache(net, x0, p, clip)
    targets = [j for j in range(net.output_dim) if j != c]

    def run(j: int) -> Certificate:
        return certify_target(net, x0, c, j, p, method, search, clip, cache)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_target = list(pool.map(run, targets))
    else:
        per_target = [run(j) for j in targets]

    worst = min(per_target, key=lambda cert: cert.radius)
    status = STATUS_MISCLASSIFIED if any(cert.misclassified for cert in per_target) else STATUS_CERTIFIED
    return Certificate(
        method=method.value,
        p=format_norm_order(p),
        true_class=c,
        target_class=None,
        radius=worst.radius,
        iterations=sum(cert.iterations for cert in per_target),
        bracket_unsafe=worst.bracket_unsafe,
        bracket_safe=worst.radius,
        wall_time_ms=(time.perf_counter() - start) * 1000.0,
        status=status,
        targets=per_target,
    )


def select_target(
    logits: ArrayLike, c: int, mode: TargetMode | str, seed: int | None = None
) -> int:
    """Pick the attack target among the classes other than *c*."""
    scores = np.asarray(logits, dtype=np.float64)
    if scores.ndim != 1 or scores.shape[0] < 2:
        raise InvalidParameterError("target selection needs at least two logits")
    mode = TargetMode(mode)
    others = np.array([j for j in range(scores.shape[0]) if j != c])
    if mode is TargetMode.RUNNER_UP:
        return int(others[np.argmax(scores[others])])
    if mode is TargetMode.LEAST_LIKELY:
        return int(others[np.argmin(scores[others])])
    rng = np.random.default_rng(seed)
    return int(rng.choice(others))


def best_of(certificates: Sequence[Certificate]) -> Certificate:
    """The certificate with the largest radius; all inputs must be sound."""
    if not certificates:
        raise InvalidParameterError("best_of needs at least one certificate")
    return max(certificates, key=lambda cert: cert.radius)
