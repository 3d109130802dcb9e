import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neurotopo.errors import ParameterError
from neurotopo.network import (AdamState, NetworkParams, adam_step, backward, forward,
                               init_params, load_params, save_params)


def random_net(h, seed):
    rng = np.random.default_rng(seed)
    return NetworkParams(K=rng.uniform(-3, 3, (h, 3)), W=rng.normal(size=h))


def random_batch(n, seed):
    rng = np.random.default_rng(seed + 1000)
    return np.column_stack([rng.uniform(-0.5, 0.5, n), rng.uniform(-0.25, 0.25, n), rng.uniform(0, 0.4, n)])


def test_init_is_neutral_and_seeded():
    p = init_params(16, seed=4)
    assert np.all(forward(p, random_batch(10, 0)) == 0.5)
    assert np.array_equal(p.K, init_params(16, seed=4).K)
    assert not np.array_equal(p.K, init_params(16, seed=5).K)
    with pytest.raises(ParameterError):
        init_params(0)


def test_init_kernel_distribution():
    K = init_params(128, seed=1).K
    assert K.min() >= -25 and K.max() <= 25
    # 3 sigma of the mean of 384 U(-25, 25) samples is 3 * 14.43 / sqrt(384) = 2.21
    assert abs(K.mean()) <= 2.5


def test_single_kernel_value():
    p = NetworkParams(K=np.zeros((1, 3)), W=np.array([1.0]))
    expected = 1 / (1 + math.exp(-math.sin(1.0)))
    assert forward(p, np.zeros((1, 3)))[0] == pytest.approx(expected, rel=1e-15)
    assert expected == pytest.approx(0.698775, abs=1e-6)


def test_batch_equals_row_by_row():
    p = random_net(8, 0)
    X = random_batch(16, 0)
    batch = forward(p, X)
    rows = np.array([forward(p, X[i:i + 1])[0] for i in range(16)])
    assert np.array_equal(batch, rows)


def test_output_strictly_inside_unit_interval():
    p = init_params(64, 3)
    p = NetworkParams(K=p.K, W=np.random.default_rng(0).normal(scale=0.5, size=64))
    out = forward(p, random_batch(200, 2))
    assert np.all((out > 0) & (out < 1))


def test_forward_rejects_bad_shapes():
    p = random_net(4, 0)
    with pytest.raises(ParameterError):
        forward(p, np.zeros((3, 2)))
    with pytest.raises(ParameterError):
        backward(p, np.zeros((3, 3)), np.zeros(2))


def _loss(p, X, g):
    return float(g @ forward(p, X))


def _fd_grads(p, X, g, delta=1e-6):
    dK = np.zeros_like(p.K)
    dW = np.zeros_like(p.W)
    for idx in np.ndindex(p.K.shape):
        up, dn = p.K.copy(), p.K.copy()
        up[idx] += delta
        dn[idx] -= delta
        dK[idx] = (_loss(NetworkParams(up, p.W), X, g) - _loss(NetworkParams(dn, p.W), X, g)) / (2 * delta)
    for j in range(p.h):
        up, dn = p.W.copy(), p.W.copy()
        up[j] += delta
        dn[j] -= delta
        dW[j] = (_loss(NetworkParams(p.K, up), X, g) - _loss(NetworkParams(p.K, dn), X, g)) / (2 * delta)
    return dK, dW


def _close(a, b, rel):
    return np.all(np.abs(a - b) <= rel * np.maximum(np.abs(a), np.abs(b)) + 1e-9)


def test_gradients_match_finite_differences():
    p = random_net(4, 1)
    X = random_batch(6, 1)
    g = np.random.default_rng(9).normal(size=6)
    dK, dW = backward(p, X, g)
    fK, fW = _fd_grads(p, X, g)
    assert _close(dK, fK, 1e-5) and _close(dW, fW, 1e-5)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 8), st.integers(1, 16), st.integers(0, 10_000))
def test_gradient_property(h, n, seed):
    p = random_net(h, seed)
    X = random_batch(n, seed)
    g = np.random.default_rng(seed).normal(size=n)
    dK, dW = backward(p, X, g)
    fK, fW = _fd_grads(p, X, g)
    assert _close(dK, fK, 1e-5) and _close(dW, fW, 1e-5)


def test_trivial_gradients():
    p = init_params(8, 0)
    X = random_batch(5, 0)
    dK, dW = backward(p, X, np.ones(5))
    assert not dK.any()
    dK, dW = backward(random_net(8, 0), X, np.zeros(5))
    assert not dK.any() and not dW.any()


def test_permutation_equivariance():
    p = random_net(6, 2)
    X = random_batch(12, 2)
    g = np.random.default_rng(2).normal(size=12)
    perm = np.random.default_rng(5).permutation(12)
    assert np.array_equal(forward(p, X)[perm], forward(p, X[perm]))
    a, b = backward(p, X, g), backward(p, X[perm], g[perm])
    np.testing.assert_allclose(a[0], b[0], rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-12, atol=1e-15)


def test_zero_input_column_gets_zero_kernel_gradient():
    p = random_net(5, 3)
    X = random_batch(9, 3)
    X[:, 2] = 0.0
    dK, _ = backward(p, X, np.ones(9))
    assert not dK[:, 2].any()


def test_adam_zero_gradient_is_noop():
    p = random_net(4, 0)
    state = AdamState.for_params(p)
    q, state = adam_step(p, (np.zeros_like(p.K), np.zeros_like(p.W)), state)
    assert np.array_equal(q.K, p.K) and np.array_equal(q.W, p.W)
    assert state.t == 1


def test_adam_first_step_closed_form():
    p = NetworkParams(K=np.zeros((1, 3)), W=np.array([0.0]))
    state = AdamState.for_params(p, lr=0.002)
    q, state = adam_step(p, (np.zeros((1, 3)), np.array([1.0])), state)
    # m_hat = v_hat = 1 after bias correction
    assert q.W[0] == pytest.approx(-0.002 / (1 + 1e-7), rel=1e-12)


def test_adam_trajectories_are_reproducible():
    def run():
        p = init_params(8, 7)
        state = AdamState.for_params(p)
        X = random_batch(10, 7)
        for _ in range(20):
            p, state = adam_step(p, backward(p, X, forward(p, X) - 0.3), state)
        return p
    a, b = run(), run()
    assert np.array_equal(a.K, b.K) and np.array_equal(a.W, b.W)


def test_checkpoint_roundtrip(tmp_path):
    p = random_net(5, 1)
    save_params(tmp_path / "p.csv", p, "log")
    q, filt = load_params(tmp_path / "p.csv")
    assert filt == "log"
    assert np.array_equal(p.K, q.K) and np.array_equal(p.W, q.W)


@pytest.mark.parametrize("text", ["", "3,none\n1,2,3\n", "2,none\n1,2,3\n4,5\n1,2\n", "x\n"])
def test_corrupt_checkpoint(tmp_path, text):
    (tmp_path / "bad.csv").write_text(text)
    with pytest.raises(ParameterError):
        load_params(tmp_path / "bad.csv")
