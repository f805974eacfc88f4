"""Random-restart steepest-descent attack giving upper bounds on minimum distortion."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from ..errors import InvalidParameterError
from ..io.models import ORACLE_ATTACK_UPPER, OracleResult
from ..linalg.norms import NormOrder, Vector, as_vector, parse_norm_order
from ..model.network import MarginNetwork, Network, merge_last_layer
from .gradients import one_sided_gradient
from .sampling import sample_in_ball

logger = logging.getLogger(__name__)

STEP_FRACTION = 0.25
LINE_SEARCH_STEPS = 40


@dataclass(frozen=True, slots=True)
class AttackConfig:
    """Evaluation budget and radius schedule of the attack."""

    budget: int = 20000
    restarts: int = 10
    steps_per_radius: int = 40
    seed: int = 0
    initial_radius: float = 0.01
    growth: float = 2.0
    max_radius: float = 1e4

    def __post_init__(self) -> None:
        if self.budget <= 0:
            raise InvalidParameterError(f"attack budget must be positive, got {self.budget}")
        if self.restarts <= 0 or self.steps_per_radius <= 0:
            raise InvalidParameterError("restarts and steps_per_radius must be positive")
        if not 0.0 < self.initial_radius <= self.max_radius:
            raise InvalidParameterError("initial_radius must lie in (0, max_radius]")
        if not self.growth > 1.0:
            raise InvalidParameterError(f"growth must exceed 1, got {self.growth}")


def project_l1(delta: Vector, radius: float) -> Vector:
    """Euclidean projection of *delta* onto the l1 ball of *radius*."""
    magnitude = np.abs(delta)
    if magnitude.sum() <= radius:
        return delta
    ordered = np.sort(magnitude)[::-1]
    cumulative = np.cumsum(ordered)
    ranks = np.arange(1, ordered.size + 1)
    rho = np.nonzero(ordered * ranks > cumulative - radius)[0][-1]
    theta = (cumulative[rho] - radius) / (rho + 1)
    return np.sign(delta) * np.maximum(magnitude - theta, 0.0)


def project(delta: Vector, radius: float, p: NormOrder) -> Vector:
    if math.isinf(p):
        return np.clip(delta, -radius, radius)
    if p == 1.0:
        return project_l1(delta, radius)
    norm = float(np.linalg.norm(delta))
    return delta if norm <= radius else delta * (radius / norm)


def descent_direction(gradient: Vector, p: NormOrder, rng: np.random.Generator) -> Vector:
    """Unit step (in the l_p sense) that decreases the margin fastest."""
    if not np.any(gradient):
        raw = rng.normal(size=gradient.shape[0])
        return raw / max(float(np.linalg.norm(raw, ord=p)), 1e-300)
    if math.isinf(p):
        return -np.sign(gradient)
    if p == 2.0:
        return -gradient / np.linalg.norm(gradient)
    # l1: move the single most sensitive coordinate
    step = np.zeros_like(gradient)
    k = int(np.argmax(np.abs(gradient)))
    step[k] = -math.copysign(1.0, gradient[k])
    return step


class _MarginProbe:
    """Counts margin evaluations against the budget."""

    def __init__(self, net: MarginNetwork, x0: Vector, clip: tuple[float, float] | None) -> None:
        self.net = net
        self.x0 = x0
        self.clip = clip
        self.evaluations = 0

    def point(self, delta: Vector) -> Vector:
        x = self.x0 + delta
        return np.clip(x, *self.clip) if self.clip is not None else x

    def __call__(self, delta: Vector) -> float:
        self.evaluations += 1
        return self.net.margin(self.point(delta))

    def shrink(self, delta: Vector) -> Vector:
        """Smallest multiple t*delta (t in [0, 1]) still misclassified; delta must be."""
        lo, hi = 0.0, 1.0
        for _ in range(LINE_SEARCH_STEPS):
            mid = 0.5 * (lo + hi)
            if self(mid * delta) <= 0.0:
                hi = mid
            else:
                lo = mid
        return self.point(hi * delta) - self.x0


def attack_upper_bound(
    net: Network,
    x0: ArrayLike,
    c: int,
    j: int,
    p: NormOrder,
    config: AttackConfig = AttackConfig(),
    clip: tuple[float, float] | None = None,
) -> OracleResult:
    """Search for a small delta with f_j(x0 + delta) >= f_c(x0 + delta).

    Radii grow geometrically from ``initial_radius``; at each radius every
    restart runs projected steepest descent on the margin. The first radius
    that yields any success ends the schedule, and each hit is shrunk along
    its own direction by bisection. The returned value is always backed by
    the witness.
    """
    p = parse_norm_order(p)
    anchor = as_vector(x0, "x0")
    margin_net = merge_last_layer(net, c, j)
    probe = _MarginProbe(margin_net, anchor, clip)
    if probe(np.zeros_like(anchor)) <= 0.0:
        return OracleResult(ORACLE_ATTACK_UPPER, 0.0, witness=np.zeros_like(anchor), samples=probe.evaluations)

    rng = np.random.default_rng(config.seed)
    best = math.inf
    witness: Vector | None = None
    radius = config.initial_radius
    while radius <= config.max_radius and witness is None:
        step = STEP_FRACTION * radius
        for restart in range(config.restarts):
            if probe.evaluations >= config.budget:
                break
            if restart == 0:
                delta = np.zeros_like(anchor)
            else:
                start = sample_in_ball(anchor, radius, p, 1, int(rng.integers(2**32)))[0]
                delta = start - anchor
            for _ in range(config.steps_per_radius):
                if probe.evaluations >= config.budget:
                    break
                if probe(delta) <= 0.0:
                    hit = probe.shrink(delta)
                    norm = float(np.linalg.norm(hit, ord=p))
                    if norm < best:
                        best, witness = norm, hit
                    break
                gradient = one_sided_gradient(margin_net, probe.point(delta))
                delta = project(delta + step * descent_direction(gradient, p, rng), radius, p)
        logger.debug("attack radius %.4g: best %.6g after %d evaluations", radius, best, probe.evaluations)
        if probe.evaluations >= config.budget:
            break
        radius *= config.growth

    if witness is None:
        if probe.evaluations >= config.budget:
            logger.warning("attack budget of %d evaluations exhausted without success", config.budget)
        return OracleResult(ORACLE_ATTACK_UPPER, None, found=False, samples=probe.evaluations)
    return OracleResult(ORACLE_ATTACK_UPPER, best, witness=witness, samples=probe.evaluations)
