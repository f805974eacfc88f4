"""Bracket-then-bisect search for the largest radius satisfying a predicate."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

from ..errors import InvalidParameterError

logger = logging.getLogger(__name__)

Predicate = Callable[[float], bool]


@dataclass(frozen=True, slots=True)
class SearchConfig:
    """Search policy. ``max_iter`` caps bisection steps after bracketing."""

    eps0: float = 0.05
    max_iter: int = 15
    expansion: float = 2.0
    floor: float = 1e-8
    rel_tol: float = 1e-5
    max_expansions: int = 60

    def __post_init__(self) -> None:
        if not self.eps0 > 0.0:
            raise InvalidParameterError(f"eps0 must be positive, got {self.eps0}")
        if self.max_iter < 0:
            raise InvalidParameterError(f"max_iter must be non-negative, got {self.max_iter}")
        if not self.expansion > 1.0:
            raise InvalidParameterError(f"expansion factor must exceed 1, got {self.expansion}")
        if not self.floor > 0.0:
            raise InvalidParameterError(f"floor must be positive, got {self.floor}")
        if self.rel_tol < 0.0:
            raise InvalidParameterError(f"rel_tol must be non-negative, got {self.rel_tol}")


@dataclass(frozen=True, slots=True)
class SearchResult:
    """``certified`` passed the predicate; ``unsafe`` (if any) failed it."""

    certified: float
    unsafe: float | None
    iterations: int
    evaluations: int


def bracket_search(predicate: Predicate, config: SearchConfig = SearchConfig()) -> SearchResult:
    """Return the largest radius found for which *predicate* holds.

    Starting from ``eps0`` the radius is multiplied (or divided) by the
    expansion factor until the predicate flips, then the bracket is bisected.
    The result is always the safe end of the bracket.
    """
    evaluations = 0

    def check(eps: float) -> bool:
        nonlocal evaluations
        evaluations += 1
        outcome = bool(predicate(eps))
        logger.debug("predicate(%.9g) = %s", eps, outcome)
        return outcome

    lo = 0.0
    hi: float | None
    if check(config.eps0):
        lo, hi = config.eps0, None
        for _ in range(config.max_expansions):
            candidate = lo * config.expansion
            if check(candidate):
                lo = candidate
            else:
                hi = candidate
                break
        else:
            logger.warning("predicate still holds at eps=%.6g after %d expansions", lo, config.max_expansions)
            return SearchResult(lo, None, 0, evaluations)
    else:
        hi = config.eps0
        candidate = hi / config.expansion
        steps = 0
        while candidate >= config.floor and steps < config.max_expansions:
            steps += 1
            if check(candidate):
                lo = candidate
                break
            hi = candidate
            candidate /= config.expansion
        if lo == 0.0:
            return SearchResult(0.0, hi, 0, evaluations)

    iterations = 0
    while iterations < config.max_iter and hi - lo > config.rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if check(mid):
            lo = mid
        else:
            hi = mid
        iterations += 1
    logger.debug("bracket [%.9g, %.9g] after %d bisections", lo, hi, iterations)
    return SearchResult(lo, hi, iterations, evaluations)
