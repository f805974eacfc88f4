from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.bounds.fastlin import LayerBounds, propagate_bounds
from src.bounds.fastlip import grad_bound_all
from src.certify.certifier import Method, certify_target
from src.errors import CapacityError, InvalidParameterError
from src.io.models import Certificate
from src.linalg.norms import vec_qnorm
from src.model.network import Network, merge_last_layer, random_network
from src.model.perturbation import PerturbationSpec
from src.oracle.attack import AttackConfig, attack_upper_bound, project_l1
from src.oracle.checks import soundness_check
from src.oracle.exhaustive import enumerate_pattern_gradients, grid_min_distortion, pattern_enum_max_grad
from src.oracle.gradients import analytic_gradient, pattern_gradient
from src.oracle.sampling import sample_in_ball, sample_on_sphere

from .nets import NORM_ORDERS, hat_network, seeded_anchor, seeded_margin_network


def _constant_margin_network() -> Network:
    return Network.from_arrays([np.zeros((2, 2))], [np.array([1.0, 0.0])])


@pytest.mark.parametrize("p", NORM_ORDERS)
def test_samples_stay_in_ball(p):
    x0 = np.array([0.5, -1.0, 2.0])
    points = sample_in_ball(x0, 0.3, p, 500, seed=1)
    assert points.shape == (500, 3)
    assert np.all(np.linalg.norm(points - x0, ord=p, axis=1) <= 0.3 + 1e-12)
    surface = sample_on_sphere(x0, 0.3, p, 200, seed=2)
    np.testing.assert_allclose(np.linalg.norm(surface - x0, ord=p, axis=1), 0.3, rtol=1e-9)


def test_sampling_is_seeded_and_handles_zero_radius():
    x0 = np.array([1.0, 2.0])
    np.testing.assert_array_equal(sample_in_ball(x0, 0.5, 2, 10, 3), sample_in_ball(x0, 0.5, 2, 10, 3))
    np.testing.assert_array_equal(sample_in_ball(x0, 0.0, 1, 4, 0), np.tile(x0, (4, 1)))
    with pytest.raises(InvalidParameterError):
        sample_in_ball(x0, -0.1, 2, 1, 0)


def test_analytic_gradient_examples(identity_net):
    margin_net = merge_last_layer(identity_net, 0, 1)
    np.testing.assert_array_equal(analytic_gradient(margin_net, [0.3, 0.9]), [1.0, -1.0])
    hat = hat_network()
    np.testing.assert_array_equal(analytic_gradient(hat, [0.5]), [1.0])
    np.testing.assert_array_equal(analytic_gradient(hat, [-0.5]), [-1.0])
    assert analytic_gradient(hat, [0.0]) is None


@pytest.mark.parametrize("seed", range(5))
def test_analytic_gradient_matches_finite_differences(seed):
    net = seeded_margin_network(seed)
    x0 = seeded_anchor(net, seed)
    h = 1e-6
    for x in sample_in_ball(x0, 0.5, 2, 200, seed):
        gradient = analytic_gradient(net, x)
        if gradient is None:
            continue
        pre = net.pre_activations(x)[:-1]
        if any(np.min(np.abs(z)) < 1e-4 for z in pre):
            continue
        eye = np.eye(x.shape[0])
        central = np.array([(net.margin(x + h * e) - net.margin(x - h * e)) / (2 * h) for e in eye])
        np.testing.assert_allclose(central, gradient, rtol=1e-5, atol=1e-7)


def test_grid_identity_network(identity_net, anchor):
    result = grid_min_distortion(identity_net, anchor, 0, 1, "inf", resolution=2001)
    assert result.found
    assert abs(result.value - 0.5) <= 1e-3 + 1e-12
    assert identity_net.forward(anchor + result.witness)[0] <= identity_net.forward(anchor + result.witness)[1]


def test_grid_not_found_on_constant_margin():
    result = grid_min_distortion(_constant_margin_network(), np.zeros(2), 0, 1, 2, resolution=21)
    assert not result.found
    assert result.value == 1.0


def test_grid_rejects_high_dimension():
    net = random_network([4, 3, 2], seed=0)
    with pytest.raises(InvalidParameterError):
        grid_min_distortion(net, np.zeros(4), 0, 1, 2, resolution=5)


@pytest.mark.parametrize("p", NORM_ORDERS)
@pytest.mark.parametrize("seed", range(8))
def test_grid_minimum_bounds_every_certificate(seed, p):
    shapes = (([2, 12, 3], list(Method)), ([2, 8, 8, 3], [Method.FAST_LIN, Method.FAST_LIP, Method.OP_NORM]))
    for dims, methods in shapes:
        net = random_network(dims, seed)
        x0 = seeded_anchor(net, seed)
        c = net.predict(x0)
        j = (c + 1) % net.output_dim
        grid = grid_min_distortion(net, x0, c, j, p, resolution=201, box_radius=2.0)
        if not grid.found:
            continue
        for method in methods:
            assert certify_target(net, x0, c, j, p, method).radius <= grid.value + 1e-9


def test_fast_lin_gap_to_grid_minimum():
    ratios = []
    for seed in range(20):
        net = random_network([2, 20, 20, 2], seed)
        x0 = seeded_anchor(net, seed)
        c = net.predict(x0)
        grid = grid_min_distortion(net, x0, c, 1 - c, "inf", resolution=401, box_radius=4.0)
        if not grid.found:
            continue
        radius = certify_target(net, x0, c, 1 - c, "inf", Method.FAST_LIN).radius
        assert radius <= grid.value
        ratios.append(radius / grid.value)
    assert ratios
    assert np.mean(np.asarray(ratios) >= 0.1) >= 0.9


def test_pattern_enumeration_hat_network():
    lb = LayerBounds()
    lb.append([-1.0, -1.0], [1.0, 1.0])
    gradients = sorted(float(g[0]) for g in enumerate_pattern_gradients(hat_network(), lb))
    assert gradients == [-1.0, 0.0, 0.0, 1.0]
    assert pattern_enum_max_grad(hat_network(), lb, 1) == pytest.approx(1.0)


def test_pattern_enumeration_without_uncertain_neurons():
    net = seeded_margin_network(12)
    x0 = seeded_anchor(net, 12)
    lb = propagate_bounds(net, PerturbationSpec(x0, 2, 0.0))
    gradient = analytic_gradient(net, x0)
    assert gradient is not None
    assert pattern_enum_max_grad(net, lb, 2) == pytest.approx(vec_qnorm(gradient, 2))


def test_pattern_enumeration_capacity():
    net = merge_last_layer(random_network([1, 20, 2], seed=0), 0, 1)
    lb = LayerBounds()
    lb.append(-np.ones(20), np.ones(20))
    with pytest.raises(CapacityError) as info:
        pattern_enum_max_grad(net, lb, 1)
    assert info.value.requested == 20


@pytest.mark.parametrize("seed", range(10))
def test_fast_lip_dominates_every_pattern(seed):
    net = seeded_margin_network(seed, max_hidden=2, max_width=6)
    x0 = seeded_anchor(net, seed)
    lb = propagate_bounds(net, PerturbationSpec(x0, "inf", 0.2))
    v = grad_bound_all(net, lb)
    for gradient in enumerate_pattern_gradients(net, lb):
        assert np.all(np.abs(gradient) <= v + 1e-12)
    bound = pattern_enum_max_grad(net, lb, 1)
    for x in sample_in_ball(x0, 0.2, "inf", 200, seed):
        gradient = analytic_gradient(net, x)
        if gradient is not None:
            assert vec_qnorm(gradient, 1) <= bound + 1e-9


def test_pattern_gradient_length_check():
    with pytest.raises(InvalidParameterError):
        pattern_gradient(hat_network(), [])


@pytest.mark.parametrize("p, expected", [(math.inf, 0.5), (2.0, 1.0 / math.sqrt(2.0)), (1.0, 1.0)])
def test_attack_identity_network(identity_net, anchor, p, expected):
    result = attack_upper_bound(identity_net, anchor, 0, 1, p)
    assert result.found
    assert expected - 1e-9 <= result.value <= expected + 1e-3
    logits = identity_net.forward(anchor + result.witness)
    assert logits[0] <= logits[1]
    assert np.linalg.norm(result.witness, ord=p) == pytest.approx(result.value)


def test_attack_constant_margin_not_found():
    result = attack_upper_bound(_constant_margin_network(), np.zeros(2), 0, 1, 2, AttackConfig(budget=2000))
    assert not result.found
    assert result.value is None
    assert result.samples <= 2000 + 40


def test_attack_respects_budget(identity_net, anchor):
    result = attack_upper_bound(identity_net, anchor, 0, 1, 2, AttackConfig(budget=50, restarts=1))
    assert result.samples <= 50 + 40


@given(st.integers(0, 2**16), st.floats(0.01, 3.0))
@settings(max_examples=50, deadline=None)
def test_l1_projection(seed, radius):
    v = np.random.default_rng(seed).normal(size=6)
    projected = project_l1(v, radius)
    assert np.abs(projected).sum() <= radius + 1e-9
    if np.abs(v).sum() <= radius:
        np.testing.assert_array_equal(projected, v)
    assert np.all(projected * v >= 0.0)


def test_soundness_check_passes_sound_certificate(identity_net, anchor):
    cert = certify_target(identity_net, anchor, 0, 1, "inf", Method.FAST_LIN)
    result = soundness_check(cert, identity_net, anchor)
    assert result.value is True
    assert result.samples == 500


def test_soundness_check_catches_inflated_radius(identity_net, anchor):
    cert = certify_target(identity_net, anchor, 0, 1, "inf", Method.FAST_LIN)
    cert.radius *= 10
    result = soundness_check(cert, identity_net, anchor)
    assert result.value is False
    logits = identity_net.forward(anchor + result.witness)
    assert logits[0] <= logits[1]


def test_soundness_check_zero_radius_is_vacuous(identity_net, anchor):
    cert = Certificate(method="fast-lin", p="2", true_class=0, target_class=1, radius=0.0)
    assert soundness_check(cert, identity_net, anchor).value is True
