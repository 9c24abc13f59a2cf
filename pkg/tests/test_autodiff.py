"""Backward-pass correctness: finite differences for every primitive,
plus graph-shape edge cases."""

import numpy as np
import pytest

from relbox.tensor import (
    DisconnectedLoss,
    ShapeMismatch,
    Tensor,
    add,
    backward,
    concat_last_dim,
    conv2d_valid,
    detach,
    feature_max_pool_over_space,
    grad_check,
    layer_norm,
    linear,
    log_softmax_rows,
    matmul,
    mul,
    pad2d,
    reduce_sum,
    relu,
    reshape,
    scale,
    softmax_rows,
    zero_grads,
)

rng = np.random.default_rng(7)

TOL = 1e-4


def P(shape, lo=-1.0, hi=1.0):
    return Tensor(rng.uniform(lo, hi, size=shape), requires_grad=True)


def weighted_sum(t, w):
    """Scalar loss with a non-uniform weighting so FD probes every output."""
    return reduce_sum(mul(t, Tensor(w)))


def check(f, params):
    err = grad_check(f, params)
    assert err < TOL, f"max relative error {err:.3e}"


# ---------------------------------------------------------- per-primitive FD


def test_grad_add():
    a, b = P((3, 4)), P((3, 4))
    w = rng.normal(size=(3, 4))
    check(lambda: weighted_sum(add(a, b), w), [a, b])


def test_grad_mul():
    a, b = P((2, 5)), P((2, 5))
    w = rng.normal(size=(2, 5))
    check(lambda: weighted_sum(mul(a, b), w), [a, b])


def test_grad_scale():
    a = P((4,))
    w = rng.normal(size=4)
    check(lambda: weighted_sum(scale(a, -1.7), w), [a])


def test_grad_relu_away_from_kink():
    x = Tensor(np.where(rng.uniform(size=(3, 6)) < 0.5, -1.0, 1.0) * rng.uniform(0.2, 2.0, (3, 6)), requires_grad=True)
    w = rng.normal(size=(3, 6))
    err = grad_check(lambda: weighted_sum(relu(x), w), [x])
    assert err < 1e-6


def test_grad_matmul_plain_and_transposed():
    a, b = P((4, 3)), P((3, 5))
    w = rng.normal(size=(4, 5))
    check(lambda: weighted_sum(matmul(a, b), w), [a, b])
    c = P((5, 3))
    check(lambda: weighted_sum(matmul(a, c, transpose_b=True), w), [a, c])


def test_grad_matmul_batched():
    a, b = P((2, 3, 4)), P((2, 4, 2))
    w = rng.normal(size=(2, 3, 2))
    check(lambda: weighted_sum(matmul(a, b), w), [a, b])


def test_grad_linear():
    x, wgt, b = P((5, 4)), P((4, 3)), P((3,))
    w = rng.normal(size=(5, 3))
    check(lambda: weighted_sum(linear(x, wgt, b), w), [x, wgt, b])


def test_grad_conv2d_with_bias_and_stride():
    x, k, b = P((2, 5, 5, 3)), P((2, 2, 3, 4)), P((4,))
    w1 = rng.normal(size=(2, 4, 4, 4))
    check(lambda: weighted_sum(conv2d_valid(x, k, b), w1), [x, k, b])
    w2 = rng.normal(size=(2, 2, 2, 4))
    check(lambda: weighted_sum(conv2d_valid(x, k, b, stride=2), w2), [x, k, b])


def test_grad_pad2d():
    x = P((2, 3, 3, 2))
    w = rng.normal(size=(2, 5, 5, 2))
    check(lambda: weighted_sum(pad2d(x, 1), w), [x])


def test_grad_softmax_rows():
    x = P((4, 6), -2, 2)
    w = rng.normal(size=(4, 6))
    check(lambda: weighted_sum(softmax_rows(x), w), [x])


def test_grad_log_softmax_rows():
    x = P((3, 5), -2, 2)
    w = rng.normal(size=(3, 5))
    check(lambda: weighted_sum(log_softmax_rows(x), w), [x])


def test_grad_layer_norm():
    x, g, b = P((4, 7), -2, 2), P((7,), 0.5, 1.5), P((7,))
    w = rng.normal(size=(4, 7))
    check(lambda: weighted_sum(layer_norm(x, g, b), w), [x, g, b])


def test_grad_layer_norm_batched_rows():
    x, g, b = P((2, 3, 5), -2, 2), P((5,), 0.5, 1.5), P((5,))
    w = rng.normal(size=(2, 3, 5))
    check(lambda: weighted_sum(layer_norm(x, g, b), w), [x, g, b])


def test_grad_feature_max_pool():
    # continuous draws keep the argmax off ties, where the max is smooth
    x = P((3, 8, 4))
    w = rng.normal(size=(3, 4))
    check(lambda: weighted_sum(feature_max_pool_over_space(x), w), [x])


def test_grad_concat_last_dim():
    a, b, c = P((2, 3)), P((2, 1)), P((2, 4))
    w = rng.normal(size=(2, 8))
    check(lambda: weighted_sum(concat_last_dim([a, b, c]), w), [a, b, c])


def test_grad_reduce_sum_axis():
    x = P((3, 4, 2))
    w = rng.normal(size=(3, 2))
    check(lambda: weighted_sum(reduce_sum(x, axis=1), w), [x])


def test_grad_reshape():
    x = P((3, 4))
    w = rng.normal(size=(2, 6))
    check(lambda: weighted_sum(reshape(x, (2, 6)), w), [x])


# ---------------------------------------------------------- named examples


def test_sum_gradient_is_ones():
    x = P((5, 3))
    backward(reduce_sum(x))
    np.testing.assert_array_equal(x.grad, np.ones((5, 3)))


def test_quadratic_at_three():
    x = Tensor(np.float64(3.0), requires_grad=True)
    backward(mul(x, x))
    assert x.grad == 6.0

    eps = 1e-5
    f = lambda v: v * v
    numeric = (f(3.0 + eps) - f(3.0 - eps)) / (2 * eps)
    assert abs(numeric - 6.0) < 1e-8
    assert abs(x.grad - numeric) < 1e-8


def test_diamond_graph_accumulates_through_shared_node():
    x = Tensor(np.array([2.0, -3.0]), requires_grad=True)
    z = mul(x, x)
    backward(reduce_sum(add(z, z)))  # d/dx 2x^2 = 4x
    np.testing.assert_allclose(x.grad, [8.0, -12.0])


def test_each_node_backpropagated_once():
    # if the shared intermediate were popped twice the result would double
    x = Tensor(np.float64(1.5), requires_grad=True)
    z = scale(x, 3.0)
    loss = add(mul(z, z), z)  # 9x^2 + 3x, gradient 18x + 3
    backward(loss)
    assert x.grad == pytest.approx(30.0)


def test_gradients_accumulate_into_leaf_buffer():
    x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    backward(reduce_sum(mul(x, x)))
    backward(reduce_sum(mul(x, x)))
    np.testing.assert_allclose(x.grad, [4.0, 8.0])  # two passes, summed
    zero_grads([x])
    np.testing.assert_array_equal(x.grad, [0.0, 0.0])


def test_detach_cuts_the_graph():
    x = Tensor(np.array([3.0]), requires_grad=True)
    y = detach(mul(x, x))
    assert not y.requires_grad
    loss = reduce_sum(mul(y, x))
    backward(loss)
    np.testing.assert_allclose(x.grad, [9.0])  # y treated as a constant


def test_backward_requires_scalar_loss():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ShapeMismatch):
        backward(mul(x, x))


def test_backward_rejects_disconnected_loss():
    with pytest.raises(DisconnectedLoss):
        backward(reduce_sum(Tensor(np.ones(3))))


def test_backward_on_bare_leaf():
    x = Tensor(np.float64(5.0), requires_grad=True)
    backward(x)
    assert x.grad == 1.0


def test_grad_check_rejects_float32_params():
    x = Tensor(np.ones(2, dtype=np.float32), requires_grad=True)
    with pytest.raises(ValueError):
        grad_check(lambda: reduce_sum(x), [x])


def test_grad_check_accepts_dict_params():
    params = {"x": P((2, 2))}
    err = grad_check(lambda: reduce_sum(mul(params["x"], params["x"])), params)
    assert err < TOL
