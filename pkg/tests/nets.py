"""Small hand-checkable networks and seeded random ones."""

from __future__ import annotations

import numpy as np
import pytest

from src.model.network import MarginNetwork, Network, merge_last_layer, random_network

NORM_ORDERS = [1.0, 2.0, np.inf]


def hat_network() -> MarginNetwork:
    """g(x) = relu(x) + relu(-x) = |x| on one input."""
    net = Network.from_arrays([[[1.0], [-1.0]], [[1.0, 1.0]]], [[0.0, 0.0], [0.0]])
    return MarginNetwork(net.layers)


def identity_network() -> Network:
    """Two-class linear net f(x) = x."""
    return Network.from_arrays([np.eye(2)], [np.zeros(2)])


def diagonal_network(scale: float = 1.0) -> Network:
    """One hidden layer W1 = scale * I2, W2 = I2."""
    return Network.from_arrays([scale * np.eye(2), np.eye(2)], [np.zeros(2), np.zeros(2)])


def seeded_network(seed: int, max_hidden: int = 3, max_width: int = 16, max_input: int = 8, classes: int = 3) -> Network:
    rng = np.random.default_rng(seed)
    hidden = int(rng.integers(1, max_hidden + 1))
    dims = [int(rng.integers(1, max_input + 1))]
    dims += [int(rng.integers(2, max_width + 1)) for _ in range(hidden)]
    dims.append(classes)
    return random_network(dims, seed)


def seeded_anchor(net: Network, seed: int) -> np.ndarray:
    return np.random.default_rng(seed + 10_000).uniform(-1.0, 1.0, size=net.input_dim)


def seeded_margin_network(seed: int, **kwargs: int) -> MarginNetwork:
    return merge_last_layer(seeded_network(seed, **kwargs), 0, 1)


def suite_margin_network(seed: int) -> MarginNetwork:
    """2-4 layers, widths up to 32, up to 16 inputs."""
    return seeded_margin_network(seed, max_hidden=3, max_width=32, max_input=16)


# the first ten seeds run by default, the rest with -m slow
SUITE_SEEDS = [seed if seed < 10 else pytest.param(seed, marks=pytest.mark.slow) for seed in range(50)]
