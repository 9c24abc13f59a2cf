"""RMSprop update against hand-computed values."""

import numpy as np
import pytest

from relbox.tensor import (
    RmsPropConfig,
    ShapeMismatch,
    Tensor,
    rmsprop_init,
    rmsprop_update,
)


def make(params):
    return {k: Tensor(np.asarray(v, dtype=np.float64), requires_grad=True, name=k) for k, v in params.items()}


def test_hand_computed_single_step():
    # g=1, v=0, lr=1e-4, eps=0.1:
    #   v' = 0.99*0 + 0.01*1 = 0.01, sqrt(v') = 0.1
    #   step = 1e-4 * 1 / (0.1 + 0.1) = 5e-4
    params = make({"w": [0.0]})
    grads = {"w": np.array([1.0])}
    cfg = RmsPropConfig(learning_rate=1e-4)
    new_params, new_state = rmsprop_update(params, grads, rmsprop_init(params), cfg)
    assert new_state["w"][0] == pytest.approx(0.01, abs=1e-15)
    assert new_params["w"].data[0] == pytest.approx(-5e-4, abs=1e-15)


def test_zero_gradient_leaves_params_and_decays_accumulator():
    params = make({"w": [2.0, -3.0]})
    state = {"w": np.array([0.04, 0.16])}
    new_params, new_state = rmsprop_update(
        params, {"w": np.zeros(2)}, state, RmsPropConfig()
    )
    np.testing.assert_array_equal(new_params["w"].data, params["w"].data)
    np.testing.assert_allclose(new_state["w"], [0.04 * 0.99, 0.16 * 0.99])


def test_accumulator_converges_to_squared_gradient():
    params = make({"w": [0.0]})
    state = rmsprop_init(params)
    g = {"w": np.array([3.0])}
    for _ in range(2000):
        params, state = rmsprop_update(params, g, state, RmsPropConfig())
    assert state["w"][0] == pytest.approx(9.0, rel=1e-6)


def test_constant_gradient_step_size_approaches_lr_over_g_plus_eps():
    # with v ~= g^2 the per-step move tends to lr*g/(|g|+eps)
    params = make({"w": [0.0]})
    state = {"w": np.array([4.0])}
    cfg = RmsPropConfig(learning_rate=1e-3)
    new_params, _ = rmsprop_update(params, {"w": np.array([2.0])}, state, cfg)
    expected = -1e-3 * 2.0 / (np.sqrt(0.99 * 4.0 + 0.01 * 4.0) + 0.1)
    assert new_params["w"].data[0] == pytest.approx(expected)


def test_update_is_functional():
    params = make({"w": [1.0]})
    state = rmsprop_init(params)
    before = params["w"].data.copy()
    state_before = state["w"].copy()
    new_params, new_state = rmsprop_update(
        params, {"w": np.array([1.0])}, state, RmsPropConfig()
    )
    np.testing.assert_array_equal(params["w"].data, before)
    np.testing.assert_array_equal(state["w"], state_before)
    assert new_params["w"] is not params["w"]
    assert new_params["w"].requires_grad and new_params["w"].name == "w"


def test_preserves_dtype():
    params = {"w": Tensor(np.zeros(3, dtype=np.float32), requires_grad=True, name="w")}
    new_params, _ = rmsprop_update(
        params, {"w": np.ones(3)}, rmsprop_init(params), RmsPropConfig()
    )
    assert new_params["w"].data.dtype == np.float32


def test_zero_learning_rate_is_legal_and_inert():
    params = make({"w": [5.0]})
    cfg = RmsPropConfig(learning_rate=0.0)
    new_params, new_state = rmsprop_update(
        params, {"w": np.array([7.0])}, rmsprop_init(params), cfg
    )
    np.testing.assert_array_equal(new_params["w"].data, [5.0])
    assert new_state["w"][0] == pytest.approx(0.49)  # accumulator still updates


@pytest.mark.parametrize(
    "kwargs",
    [
        {"learning_rate": -1e-4},
        {"epsilon": 0.0},
        {"epsilon": -0.1},
        {"decay": 0.0},
        {"momentum": 0.9},
    ],
)
def test_config_validation_rejects(kwargs):
    with pytest.raises(ValueError):
        RmsPropConfig(**kwargs).validate()


def test_shape_drift_raises():
    params = make({"w": [1.0, 2.0]})
    with pytest.raises(ShapeMismatch):
        rmsprop_update(params, {"w": np.ones(3)}, rmsprop_init(params), RmsPropConfig())
