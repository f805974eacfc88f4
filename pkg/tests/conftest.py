"""Shared fixtures for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from src.model.network import MarginNetwork, Network

from .nets import diagonal_network, hat_network, identity_network


@pytest.fixture
def hat_net() -> MarginNetwork:
    return hat_network()


@pytest.fixture
def identity_net() -> Network:
    return identity_network()


@pytest.fixture
def diag_net() -> Network:
    return diagonal_network()


@pytest.fixture
def anchor() -> np.ndarray:
    return np.array([1.0, 0.0])
