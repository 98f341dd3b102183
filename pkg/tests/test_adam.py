import numpy as np
import pytest

from nmbg.diffrender import AdamState, adam_step
from nmbg.errors import ShapeMismatch


def textbook_adam(theta, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g**2
        theta = theta - lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
    return theta


def test_matches_textbook(rng):
    theta0 = rng.normal(size=(5, 4))
    grads = [rng.normal(size=(5, 4)) for _ in range(100)]
    params = {"w": theta0.copy()}
    state = AdamState()
    for g in grads:
        adam_step(params, {"w": g}, state, 0.01)
    np.testing.assert_allclose(params["w"], textbook_adam(theta0, grads, 0.01), rtol=0, atol=1e-12)
    assert state.t == 100
    assert (state.v["w"] >= 0).all()


def test_first_step_moves_by_lr():
    params = {"w": np.zeros(3)}
    adam_step(params, {"w": np.ones(3)}, AdamState(), 0.1)
    np.testing.assert_allclose(params["w"], -0.1, rtol=1e-6)


def test_zero_gradient_is_a_no_op(rng):
    w = rng.normal(size=7)
    params = {"w": w.copy()}
    state = AdamState()
    for _ in range(50):
        adam_step(params, {"w": np.zeros(7)}, state, 0.1)
    np.testing.assert_array_equal(params["w"], w)


def test_shape_mismatch_leaves_state_untouched():
    params = {"w": np.zeros(3)}
    state = AdamState()
    with pytest.raises(ShapeMismatch):
        adam_step(params, {"w": np.zeros(4)}, state, 0.1)
    assert state.t == 0 and not state.m
