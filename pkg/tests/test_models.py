"""Tests for density-ratio models: links, gradients, feature maps."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ratiotest.errors import DimensionMismatch, InvalidAlpha, NonpositiveRatio
from ratiotest.models import (
    RatioModel,
    eval_ratio,
    exponential_model,
    grad_log_ratio,
    linear_features,
    linear_model,
    linear_quadratic_features,
    model_from_config,
    power_model,
)


def test_linear_quadratic_dimensions():
    fm = linear_quadratic_features(10)
    assert fm.dimension == 21
    x = np.arange(10.0)
    phi = fm(x)
    assert phi.shape == (21,)
    assert phi[0] == 1.0
    np.testing.assert_allclose(phi[1:11], x)
    np.testing.assert_allclose(phi[11:], x**2)


def test_feature_map_batch_and_intercept():
    fm = linear_features(3)
    pts = np.random.default_rng(0).normal(size=(40, 3))
    phi = fm(pts)
    assert phi.shape == (40, 4)
    assert np.all(phi[:, 0] == 1.0)


def test_feature_map_width_mismatch():
    fm = linear_features(2)
    with pytest.raises(DimensionMismatch):
        fm(np.zeros(3))


def test_exponential_theta_zero_gives_one():
    model = exponential_model(linear_quadratic_features(10))
    x = np.random.default_rng(1).normal(size=10)
    assert eval_ratio(model, np.zeros(21), x) == 1.0


def test_linear_intercept_theta_gives_one():
    model = linear_model(linear_features(2))
    theta = np.array([1.0, 0.0, 0.0])
    for x in np.random.default_rng(2).normal(size=(5, 2)):
        assert eval_ratio(model, theta, x) == 1.0


def test_exponential_direct_value():
    model = exponential_model(linear_features(1))
    r = eval_ratio(model, np.array([0.5, -1.0]), np.array([2.0]))
    assert np.isclose(r, np.exp(-1.5))


def test_linear_nonpositive_raises():
    model = linear_model(linear_features(1))
    with pytest.raises(NonpositiveRatio):
        eval_ratio(model, np.array([0.0, 1.0]), np.array([-1.0]))


def test_power_nonpositive_raises():
    model = power_model(linear_features(1), alpha=1.0)
    with pytest.raises(NonpositiveRatio):
        eval_ratio(model, np.array([0.0, 1.0]), np.array([-2.0]))


def test_power_alpha_validation():
    with pytest.raises(InvalidAlpha):
        power_model(linear_features(1), alpha=0.0)
    with pytest.raises(InvalidAlpha):
        power_model(linear_features(1), alpha=-1.5)
    with pytest.raises(InvalidAlpha):
        RatioModel(linear_features(1), "power")


def test_theta_dimension_mismatch():
    model = exponential_model(linear_features(2))
    with pytest.raises(DimensionMismatch):
        eval_ratio(model, np.zeros(5), np.zeros(2))


def test_grad_exponential_is_features():
    model = exponential_model(linear_quadratic_features(2))
    x = np.array([0.3, -0.7])
    g = grad_log_ratio(model, np.random.default_rng(3).normal(size=5) * 0.1, x)
    np.testing.assert_array_equal(g, model.feature_map(x))


def test_grad_linear_at_intercept():
    model = linear_model(linear_features(2))
    theta = np.array([1.0, 0.0, 0.0])
    x = np.array([0.4, 1.2])
    np.testing.assert_allclose(grad_log_ratio(model, theta, x), model.feature_map(x))


def _fd_grad_log(model, theta, x, step=1e-6):
    d = theta.size
    out = np.empty(d)
    for k in range(d):
        up = theta.copy()
        up[k] += step
        dn = theta.copy()
        dn[k] -= step
        out[k] = (np.log(eval_ratio(model, up, x)) - np.log(eval_ratio(model, dn, x))) / (
            2 * step
        )
    return out


def _models_for_gradient_check():
    return [
        exponential_model(linear_quadratic_features(2)),
        linear_model(linear_features(2)),
        power_model(linear_quadratic_features(2), alpha=1.0),
        power_model(linear_features(2), alpha=-0.5),
    ]


@pytest.mark.parametrize("model", _models_for_gradient_check(), ids=lambda m: f"{m.link}-{m.alpha}")
def test_gradient_matches_finite_differences(model):
    rng = np.random.default_rng(11)
    for _ in range(100):
        x = rng.normal(size=2)
        theta = rng.normal(size=model.parameter_dim) * 0.1
        if model.link != "exponential":
            theta[0] = abs(theta[0]) + 1.0  # keep the ratio positive
        g = grad_log_ratio(model, theta, x)
        fd = _fd_grad_log(model, theta, x)
        rel = np.max(np.abs(fd - g)) / max(1e-8, np.max(np.abs(g)))
        assert rel <= 1e-5


@given(
    theta=st.lists(st.floats(-0.5, 0.5), min_size=5, max_size=5),
    x=st.lists(st.floats(-3, 3), min_size=2, max_size=2),
)
@settings(max_examples=50, deadline=None)
def test_gradient_property_exponential(theta, x):
    model = exponential_model(linear_quadratic_features(2))
    theta = np.array(theta)
    x = np.array(x)
    g = grad_log_ratio(model, theta, x)
    fd = _fd_grad_log(model, theta, x)
    assert np.max(np.abs(fd - g)) <= 1e-5 * max(1.0, np.max(np.abs(g)))


def test_constant_one_in_gradient_span():
    # a' grad log r == 1 with a = e1 (exponential) and a = theta (linear)
    rng = np.random.default_rng(4)
    exp_model = exponential_model(linear_quadratic_features(2))
    theta_e = rng.normal(size=5) * 0.2
    lin_model = linear_model(linear_features(2))
    theta_l = np.array([2.0, 0.3, -0.2])
    for _ in range(100):
        x = rng.normal(size=2)
        g_e = grad_log_ratio(exp_model, theta_e, x)
        assert np.isclose(g_e[0], 1.0)
        g_l = grad_log_ratio(lin_model, theta_l, x)
        assert np.isclose(theta_l @ g_l, 1.0)


def test_model_from_config():
    model = model_from_config({"link": "exp", "features": "linear-quadratic", "p": 10})
    assert model.link == "exponential"
    assert model.parameter_dim == 21

    model = model_from_config({"link": "power", "alpha": 1.0, "features": "linear", "p": 2})
    assert model.link == "power"
    assert model.alpha == 1.0

    with pytest.raises(ValueError):
        model_from_config({"link": "spline", "p": 2})
    with pytest.raises(ValueError):
        model_from_config({"link": "exp", "features": "cubic", "p": 2})
