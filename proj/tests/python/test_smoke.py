import math

import numpy as np
import pytest

import ledsim


def test_ring_mixing_rate():
    w = ledsim.mixing_matrix("ring", 15)
    assert w.n == 15
    assert abs(w.mixing_rate - 0.943) < 1e-3
    np.testing.assert_allclose(w.weights.sum(axis=1), np.ones(15), atol=1e-12)


def test_complete_graph_is_average():
    w = ledsim.mixing_matrix("complete", 6)
    assert w.is_complete_average()
    assert w.mixing_rate < 1e-12


def test_rejects_non_stochastic_matrix():
    with pytest.raises(ValueError):
        ledsim.MixingMatrix.from_dense(np.array([[0.5, 0.6], [0.6, 0.5]]))


def test_logistic_gradient_matches_finite_differences():
    prob = ledsim.logistic_problem(nodes=3, samples=50, seed=4)
    x = np.linspace(-0.3, 0.4, prob.dim)
    g = prob.gradient(1, x)
    h = 1e-6
    fd = np.array([
        (prob.value(1, x + h * e) - prob.value(1, x - h * e)) / (2 * h) for e in np.eye(prob.dim)
    ])
    np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-8)


def test_led_converges_on_quadratic():
    prob = ledsim.quadratic_problem(nodes=5, dim=3, seed=2)
    w = ledsim.mixing_matrix("ring", 5)
    trace = ledsim.run(prob, w, "led", alpha=0.5, tau=3, rounds=400)
    assert not trace["diverged"]
    assert len(trace["round"]) == 401
    assert trace["grad_norm_sq"][-1] < 1e-20


def test_centralized_algorithm_on_ring_is_rejected():
    prob = ledsim.quadratic_problem(nodes=4, dim=2, seed=1)
    w = ledsim.mixing_matrix("ring", 4)
    with pytest.raises(ValueError):
        ledsim.run(prob, w, "scaffold", alpha=0.1)


def test_tune_and_default_stepsize():
    prob = ledsim.quadratic_problem(nodes=4, dim=2, seed=3)
    w = ledsim.mixing_matrix("complete", 4)
    res = ledsim.tune(prob, w, "led", tau=2, target=1e-8, rounds=300, points=8, decades=2)
    assert res["achieved"]
    assert res["rounds_to_target"] <= 300
    alpha = ledsim.default_stepsize(L=1.0, tau=5, rounds=100, n_nodes=15)
    assert math.isclose(alpha, 1.0 / (1.0 + math.sqrt(5 * 100 / 15)))
    assert "led" in ledsim.algorithms()
