import numpy as np
import pytest

from linalg_nn import (
    STD_FLOOR,
    VelocityNet,
    mlp_forward,
    mlp_init,
    mlp_loss_grad,
    opt_init,
    opt_step,
)
from utils import ArgumentError, ConfigurationError, DimensionError


def test_mlp_init_shapes_and_zero_biases():
    net = mlp_init([5, 8, 4, 2], seed=1)
    assert [w.shape for w in net.weights] == [(5, 8), (8, 4), (4, 2)]
    assert [b.shape for b in net.biases] == [(1, 8), (1, 4), (1, 2)]
    assert all(np.all(b == 0) for b in net.biases)
    assert net.n_params() == 5 * 8 + 8 + 8 * 4 + 4 + 4 * 2 + 2


def test_mlp_init_same_seed_is_bit_identical():
    a = mlp_init([3, 6, 3, 1], seed=42)
    b = mlp_init([3, 6, 3, 1], seed=42)
    for p, q in zip(a.params(), b.params()):
        np.testing.assert_array_equal(p, q)


@pytest.mark.parametrize("dims", [[3, 4, 1], [3, 4, 2, 1, 1], [3, 0, 2, 1]])
def test_mlp_init_rejects_bad_layer_dims(dims):
    with pytest.raises(ConfigurationError):
        mlp_init(dims, seed=0)


def test_default_normalization_is_identity():
    net = mlp_init([4, 6, 3, 1], seed=0)
    np.testing.assert_array_equal(net.norm_mean, np.zeros(3))
    np.testing.assert_array_equal(net.norm_std, np.ones(3))


def test_constant_column_is_centered_not_scaled():
    net = mlp_init([3, 4, 2, 1], seed=0)
    net = VelocityNet(net.layer_dims, net.weights, net.biases, norm_std=np.array([0.0, 2.0]))
    np.testing.assert_array_equal(net.norm_std, [1.0, 2.0])
    tiny = VelocityNet(net.layer_dims, net.weights, net.biases, norm_std=np.array([STD_FLOOR / 2, 1e-3]))
    np.testing.assert_array_equal(tiny.norm_std, [1.0, 1e-3])


def test_forward_shape_and_dimension_error():
    net = mlp_init([3, 6, 3, 2], seed=0)
    assert mlp_forward(net, np.ones((7, 3))).shape == (7, 2)
    with pytest.raises(DimensionError):
        mlp_forward(net, np.ones((7, 4)))


def test_hand_checked_gradient_single_path():
    # [1, 1, 1, 1] net with W1 = W2 = 1 and zero biases: out = w * u for u > 0
    net = mlp_init([1, 1, 1, 1], seed=0)
    w, u, y = 0.7, 1.3, 2.0
    net = net.with_params(
        [np.ones((1, 1)), np.zeros((1, 1)), np.ones((1, 1)), np.zeros((1, 1)),
         np.full((1, 1), w), np.zeros((1, 1))]
    )
    loss, grads = mlp_loss_grad(net, [[u]], [[y]])
    assert loss == pytest.approx((w * u - y) ** 2)
    assert grads[4][0, 0] == pytest.approx(2 * (w * u - y) * u)
    assert grads[5][0, 0] == pytest.approx(2 * (w * u - y))


def _numeric_grads(net, x, t, eps=1e-5):
    params = net.params()
    out = []
    for i, p in enumerate(params):
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            plus = [q.copy() for q in params]
            minus = [q.copy() for q in params]
            plus[i][idx] += eps
            minus[i][idx] -= eps
            lp, _ = mlp_loss_grad(net.with_params(plus), x, t)
            lm, _ = mlp_loss_grad(net.with_params(minus), x, t)
            g[idx] = (lp - lm) / (2 * eps)
        out.append(g)
    return out


def test_gradients_match_central_differences():
    rng = np.random.default_rng(0)
    for trial in range(20):
        net = mlp_init([4, 6, 5, 2], seed=trial)
        net = net.with_params([p + 0.1 * rng.standard_normal(p.shape) for p in net.params()])
        x = rng.standard_normal((7, 4))
        t = rng.standard_normal((7, 2))
        _, analytic = mlp_loss_grad(net, x, t)
        numeric = _numeric_grads(net, x, t)
        for a, n in zip(analytic, numeric):
            # near-zero components fall back to an absolute bound
            scale = np.maximum(np.abs(a) + np.abs(n), 1e-4)
            assert np.all(np.abs(a - n) / scale <= 1e-4), f"trial {trial}"


def test_loss_grad_errors():
    net = mlp_init([2, 4, 2, 1], seed=0)
    with pytest.raises(ArgumentError):
        mlp_loss_grad(net, np.empty((0, 2)), np.empty((0, 1)))
    with pytest.raises(DimensionError):
        mlp_loss_grad(net, np.ones((3, 2)), np.ones((3, 2)))


def test_first_adam_step_moves_each_parameter_by_learning_rate():
    net = mlp_init([2, 4, 2, 1], seed=3)
    grads = [np.full_like(p, 0.5) for p in net.params()]
    state = opt_init(net, learning_rate=1e-2)
    new_state, new_net = opt_step(state, net, grads)
    assert new_state.step == 1
    for old, new in zip(net.params(), new_net.params()):
        np.testing.assert_allclose(old - new, 1e-2, rtol=1e-5)


def test_adam_reduces_regression_loss():
    rng = np.random.default_rng(5)
    x = rng.uniform(-1, 1, size=(64, 1))
    y = 2.0 * x + 0.5
    net = mlp_init([1, 16, 8, 1], seed=0)
    state = opt_init(net, learning_rate=1e-2)
    start, _ = mlp_loss_grad(net, x, y)
    for _ in range(300):
        _, grads = mlp_loss_grad(net, x, y)
        state, net = opt_step(state, net, grads)
    end, _ = mlp_loss_grad(net, x, y)
    assert end < 0.1 * start


def test_opt_step_gradient_count_mismatch():
    net = mlp_init([2, 4, 2, 1], seed=0)
    with pytest.raises(DimensionError):
        opt_step(opt_init(net), net, net.params()[:-1])


def test_zero_parameters_give_zero_output():
    net = mlp_init([5, 8, 4, 3], seed=0)
    net = net.with_params([np.zeros_like(p) for p in net.params()])
    x = np.random.default_rng(2).normal(0, 10, size=(11, 5))
    np.testing.assert_array_equal(mlp_forward(net, x), np.zeros((11, 3)))


def test_batched_forward_matches_row_by_row():
    rng = np.random.default_rng(9)
    net = mlp_init([4, 10, 5, 2], seed=4)
    net = net.with_params([p + 0.1 * rng.standard_normal(p.shape) for p in net.params()])
    x = rng.standard_normal((16, 4))
    rows = np.vstack([mlp_forward(net, x[i : i + 1]) for i in range(x.shape[0])])
    np.testing.assert_allclose(mlp_forward(net, x), rows, rtol=1e-12, atol=1e-14)
