"""Sampling check that a certificate holds just inside its radius."""

from __future__ import annotations

import logging
import math

import numpy as np
from numpy.typing import ArrayLike

from ..io.models import ORACLE_SAMPLE_CHECK, Certificate, OracleResult
from ..linalg.norms import as_vector, parse_norm_order
from ..model.network import Network
from .sampling import sample_in_ball, sample_on_sphere

logger = logging.getLogger(__name__)

RADIUS_SHRINK = 1e-6
UNBOUNDED_PROBE_RADIUS = 1e3


def soundness_check(
    cert: Certificate,
    net: Network,
    x0: ArrayLike,
    samples: int = 500,
    seed: int = 0,
    clip: tuple[float, float] | None = None,
) -> OracleResult:
    """Sample half inside the ball and half on its surface; any flip fails the check.

    Targeted certificates require f_c > f_j at every sample, untargeted ones
    require class c to stay the argmax.
    """
    if cert.misclassified or cert.radius == 0.0:
        return OracleResult(ORACLE_SAMPLE_CHECK, True, samples=0)
    anchor = as_vector(x0, "x0")
    p = parse_norm_order(cert.p)
    radius = UNBOUNDED_PROBE_RADIUS if math.isinf(cert.radius) else cert.radius * (1.0 - RADIUS_SHRINK)
    inside = samples // 2
    points = np.vstack(
        [
            sample_in_ball(anchor, radius, p, inside, seed, clip),
            sample_on_sphere(anchor, radius, p, samples - inside, seed + 1, clip),
        ]
    )
    logits = net.forward_batch(points)
    c = cert.true_class
    if cert.target_class is None:
        violated = np.argmax(logits, axis=1) != c
    else:
        violated = logits[:, c] - logits[:, cert.target_class] <= 0.0
    bad = np.nonzero(violated)[0]
    if bad.size:
        logger.warning(
            "%s certificate of radius %.6g violated at %d of %d samples", cert.method, cert.radius, bad.size, samples
        )
        return OracleResult(ORACLE_SAMPLE_CHECK, False, witness=points[bad[0]] - anchor, samples=samples)
    return OracleResult(ORACLE_SAMPLE_CHECK, True, samples=samples)
