"""Network forward/backward, Adam, and EMA checks.

Frozen scalars used below (computed with plain Python math):
  sigmoid(1)  = 0.7310585786300049   -> silu(1)  =  0.7310585786300049
  sigmoid(-1) = 0.2689414213699951   -> silu(-1) = -0.2689414213699951
  softplus(0) = ln 2 = 0.6931471805599453
"""

import math

import numpy as np
import pytest

from driftlab.generator import (
    EmaParams,
    GeneratorParams,
    Gradients,
    TrainingDiverged,
    adam_step,
    backward,
    ema_update,
    forward,
    forward_cached,
    init_adam,
    init_ema,
    init_params,
    loss_and_grad,
)
from driftlab.rng import Stream


def _identity_net():
    return GeneratorParams((2, 2), [np.eye(2)], [np.zeros(2)], "silu")


def _scalar_chain(activation):
    # sizes (1,1,1) with unit weights and zero biases: forward == activation.
    return GeneratorParams(
        (1, 1, 1), [np.ones((1, 1)), np.ones((1, 1))], [np.zeros(1), np.zeros(1)], activation
    )


def test_init_shapes_bounds_and_determinism():
    sizes = (2, 16, 8, 2)
    p1 = init_params(sizes, Stream(42))
    p2 = init_params(sizes, Stream(42))
    assert p1.sizes == sizes and p1.noise_dim == 2 and p1.data_dim == 2
    for (a, b), (fi, fo) in zip(zip(p1.weights, p1.biases), zip(sizes, sizes[1:])):
        assert a.shape == (fi, fo) and b.shape == (fo,)
        bound = 1.0 / math.sqrt(fi)
        assert np.max(np.abs(a)) <= bound and np.max(np.abs(b)) <= bound
    for a, b in zip(p1.weights, p2.weights):
        assert np.array_equal(a, b)


def test_init_draw_order_is_weights_then_bias_per_layer():
    p = init_params((3, 5, 2), Stream(42))
    # Replay the stream: layer 0 weights, layer 0 bias, layer 1 weights, layer 1 bias.
    s = Stream(42)
    bound0, bound1 = 1.0 / math.sqrt(3.0), 1.0 / math.sqrt(5.0)
    w0 = ((s.uniform(15) * 2.0 - 1.0) * bound0).reshape(3, 5)
    b0 = (s.uniform(5) * 2.0 - 1.0) * bound0
    w1 = ((s.uniform(10) * 2.0 - 1.0) * bound1).reshape(5, 2)
    b1 = (s.uniform(2) * 2.0 - 1.0) * bound1
    assert np.array_equal(p.weights[0], w0) and np.array_equal(p.biases[0], b0)
    assert np.array_equal(p.weights[1], w1) and np.array_equal(p.biases[1], b1)


def test_single_affine_layer_is_exact():
    p = GeneratorParams((2, 2), [np.array([[1.0, 2.0], [3.0, 4.0]])], [np.array([0.5, -0.5])])
    y = forward(p, np.array([[1.0, 1.0], [0.0, 2.0]]))
    assert np.array_equal(y, np.array([[4.5, 5.5], [6.5, 7.5]]))


def test_activation_values_match_frozen_scalars():
    x = np.array([[1.0], [-1.0], [0.0]])
    y = forward(_scalar_chain("silu"), x)
    assert abs(y[0, 0] - 0.7310585786300049) <= 1e-16
    assert abs(y[1, 0] - -0.2689414213699951) <= 1e-16
    assert y[2, 0] == 0.0
    y = forward(_scalar_chain("softplus"), x)
    assert abs(y[2, 0] - 0.6931471805599453) <= 1e-16


def test_output_layer_is_linear():
    # Large negative inputs stay large and negative through the last layer;
    # a hidden-style activation there would crush them toward zero.
    p = _identity_net()
    y = forward(p, np.array([[-50.0, -50.0]]))
    assert np.array_equal(y, np.array([[-50.0, -50.0]]))


def test_loss_value_is_mean_squared_row_distance():
    p = _identity_net()
    noise = np.array([[1.0, 1.0], [2.0, 0.0]])
    loss, _ = loss_and_grad(p, noise, np.zeros((2, 2)))
    assert loss == (2.0 + 4.0) / 2.0


def test_gradients_match_central_differences():
    s = Stream(77)
    p = init_params((2, 4, 3), s)
    noise = s.normal((8, 2))
    target = s.normal((8, 3))
    _, grads = loss_and_grad(p, noise, target)
    h = 1e-5

    def loss_at(q):
        y = forward(q, noise)
        r = y - target
        return float(np.sum(r * r) / y.shape[0])

    worst = 0.0
    for li in range(len(p.weights)):
        for arr, g in ((p.weights[li], grads.weights[li]), (p.biases[li], grads.biases[li])):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                q = p.copy()
                ref = q.weights[li] if arr is p.weights[li] else q.biases[li]
                ref[idx] += h
                up = loss_at(q)
                ref[idx] -= 2 * h
                down = loss_at(q)
                fd = (up - down) / (2 * h)
                an = g[idx]
                worst = max(worst, abs(fd - an) / max(1.0, abs(an)))
    assert worst <= 1e-5, worst


def test_backward_accepts_custom_output_gradient():
    p = _identity_net()
    noise = np.array([[3.0, -2.0]])
    _, cache = forward_cached(p, noise)
    g = backward(p, cache, np.array([[1.0, 0.0]]))
    # d(out[0])/dW = noise outer e0, d/db = e0.
    assert np.array_equal(g.weights[0], np.array([[3.0, 0.0], [-2.0, 0.0]]))
    assert np.array_equal(g.biases[0], np.array([1.0, 0.0]))


def test_param_validation_errors():
    with pytest.raises(ValueError):
        GeneratorParams((2,), [], [])
    with pytest.raises(ValueError):
        GeneratorParams((2, 2), [np.eye(2)], [np.zeros(2)], activation="relu")
    with pytest.raises(ValueError):
        GeneratorParams((2, 3), [np.eye(2)], [np.zeros(3)])
    with pytest.raises(ValueError):
        forward(_identity_net(), np.zeros((4, 3)))
    with pytest.raises(ValueError):
        forward(_identity_net(), np.array([[np.nan, 0.0]]))
    with pytest.raises(ValueError):
        loss_and_grad(_identity_net(), np.zeros((2, 2)), np.zeros((3, 2)))


def test_adam_first_step_matches_scalar_replay():
    p = GeneratorParams((1, 1), [np.array([[1.0]])], [np.array([0.0])])
    st = init_adam(p, lr=0.1)
    adam_step(p, Gradients([np.array([[2.0]])], [np.array([0.0])]), st)
    m = (1.0 - 0.9) * 2.0
    v = (1.0 - 0.999) * 4.0
    expected = 1.0 - 0.1 * (m / (1.0 - 0.9)) / (math.sqrt(v / (1.0 - 0.999)) + 1e-8)
    assert abs(p.weights[0][0, 0] - expected) <= 1e-15
    assert st.step == 1


def test_adam_is_deterministic_and_state_dependent():
    def run(n):
        s = Stream(5)
        p = init_params((2, 8, 2), s)
        st = init_adam(p)
        noise = s.normal((16, 2))
        target = s.normal((16, 2))
        for _ in range(n):
            _, g = loss_and_grad(p, noise, target)
            adam_step(p, g, st)
        return p

    a, b = run(10), run(10)
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)


def test_adam_reduces_loss_on_fixed_target():
    # Target is a representable map (halve the noise), so the loss should
    # collapse rather than stall at a capacity floor.
    s = Stream(9)
    p = init_params((2, 16, 2), s)
    st = init_adam(p, lr=1e-2)
    noise = s.normal((32, 2))
    target = 0.5 * noise
    first, g = loss_and_grad(p, noise, target)
    for _ in range(200):
        adam_step(p, g, st)
        _, g = loss_and_grad(p, noise, target)
    last, _ = loss_and_grad(p, noise, target)
    assert last < 1e-3 * first


def test_non_finite_gradient_raises():
    p = GeneratorParams((1, 1), [np.array([[1.0]])], [np.array([0.0])])
    st = init_adam(p)
    with pytest.raises(TrainingDiverged):
        adam_step(p, Gradients([np.array([[np.inf]])], [np.array([0.0])]), st)
    assert st.step == 0


def test_ema_update_matches_hand_values():
    p = GeneratorParams((1, 1), [np.array([[0.0]])], [np.array([0.0])])
    ema = EmaParams(0.9, [np.array([[1.0]])], [np.array([1.0])])
    ema_update(ema, p)
    assert ema.weights[0][0, 0] == 0.9
    ema_update(ema, p)
    assert abs(ema.biases[0][0] - 0.81) <= 1e-16


def test_init_ema_copies_and_as_params_round_trip():
    p = init_params((2, 4, 2), Stream(11))
    ema = init_ema(p, decay=0.999)
    p.weights[0][0, 0] += 100.0
    assert ema.weights[0][0, 0] != p.weights[0][0, 0]
    q = ema.as_params(p)
    assert q.sizes == p.sizes and q.activation == p.activation
    assert np.array_equal(q.weights[0], ema.weights[0])
    with pytest.raises(ValueError):
        EmaParams(1.0, [], [])
    with pytest.raises(ValueError):
        init_ema(p, decay=-0.1)
