import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apbench import fcn
from apbench.checks import tiny_gradient_trials
from apbench.series import WindowSample


def test_init_shapes_and_seed():
    params = fcn.init_params(50, 1, 20)
    assert params.dims == [50, 128, 128, 20]
    assert all(not b.any() for _, b in params.layers)
    bound = np.sqrt(6 / 50)
    assert np.abs(params.layers[0][0]).max() <= bound
    other = fcn.init_params(50, 1, 20, seed=1)
    assert not np.array_equal(params.layers[0][0], other.layers[0][0])
    same = fcn.init_params(50, 1, 20, seed=0)
    np.testing.assert_array_equal(params.layers[2][0], same.layers[2][0])


def test_init_rejects_bad_dims():
    with pytest.raises(ValueError):
        fcn.init_params(0, 1, 20)
    with pytest.raises(ValueError, match="head"):
        fcn.init_params(5, 1, 3, head="softmax")


def test_sigmoid_zero_weights_give_half():
    params = fcn.init_params(4, 2, 3, hidden=5, head="sigmoid")
    for W, b in params.layers:
        W[:] = 0
        b[:] = 0
    out, _ = fcn.forward(params, np.random.default_rng(0).normal(size=(4, 2)))
    np.testing.assert_array_equal(out, 0.5)


def test_sigmoid_is_stable():
    z = np.array([-1000.0, -5.0, 0.0, 5.0, 1000.0])
    s = fcn.sigmoid(z)
    assert np.all(np.isfinite(s))
    assert s[0] == 0.0 and s[-1] == 1.0 and s[2] == 0.5


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), head=st.sampled_from(fcn.HEADS))
def test_predict_in_unit_interval(seed, head):
    params = fcn.init_params(6, 2, 4, hidden=8, seed=seed, head=head)
    X = np.random.default_rng(seed).normal(scale=5, size=(10, 6, 2))
    out = fcn.predict(params, X)
    assert out.shape == (10, 4)
    assert np.all((out >= 0) & (out <= 1))


def test_forward_single_and_batch_agree():
    params = fcn.init_params(5, 1, 3, hidden=6, seed=2)
    X = np.random.default_rng(1).normal(size=(4, 5, 1))
    batch, _ = fcn.forward(params, X)
    single, _ = fcn.forward(params, X[2])
    np.testing.assert_allclose(single, batch[2])


def test_forward_rejects_wrong_width():
    params = fcn.init_params(5, 1, 3, hidden=6)
    with pytest.raises(ValueError, match="expects 5"):
        fcn.forward(params, np.zeros((2, 4, 1)))


def test_backward_zero_upstream():
    params = fcn.init_params(5, 1, 3, hidden=6)
    _, cache = fcn.forward(params, np.ones((2, 5, 1)))
    for dW, db in fcn.backward(params, cache, np.zeros((2, 3))):
        assert not dW.any() and not db.any()


def test_dead_relu_units_get_no_gradient():
    params = fcn.init_params(4, 1, 2, hidden=3, n_hidden_layers=1, seed=0)
    W0, b0 = params.layers[0]
    b0[1] = -1e6
    _, cache = fcn.forward(params, np.random.default_rng(0).normal(size=(4, 1)))
    grads = fcn.backward(params, cache, np.ones(2))
    assert not grads[0][0][:, 1].any()
    assert grads[0][1][1] == 0


def test_stale_cache_raises():
    params = fcn.init_params(4, 1, 2, hidden=3)
    _, cache = fcn.forward(params, np.zeros((4, 1)))
    state = fcn.AdamState.for_params(params)
    fcn.adam_step(state, params, fcn.backward(params, cache, np.ones(2)))
    with pytest.raises(fcn.StaleCacheError):
        fcn.backward(params, cache, np.ones(2))


def test_adam_zero_grad_and_zero_lr():
    params = fcn.init_params(4, 1, 2, hidden=3, seed=1)
    before = [a.copy() for a in params.arrays()]
    zeros = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params.layers]
    fcn.adam_step(fcn.AdamState.for_params(params), params, zeros)
    for a, b in zip(before, params.arrays()):
        np.testing.assert_array_equal(a, b)
    X, y = np.ones((4, 1)), np.array([1.0, 0.0])
    _, grads = fcn.loss_and_grads(params, X, y)
    fcn.adam_step(fcn.AdamState.for_params(params, lr=0.0), params, grads)
    for a, b in zip(before, params.arrays()):
        np.testing.assert_array_equal(a, b)


def test_adam_first_step_is_signed_lr():
    params = fcn.init_params(3, 1, 2, hidden=2, seed=3)
    before = [a.copy() for a in params.arrays()]
    grads = [(np.full_like(W, 2.0), np.full_like(b, -3.0)) for W, b in params.layers]
    fcn.adam_step(fcn.AdamState.for_params(params, lr=0.01), params, grads)
    after = list(params.arrays())
    np.testing.assert_allclose(after[0] - before[0], -0.01, rtol=1e-6)
    np.testing.assert_allclose(after[1] - before[1], 0.01, rtol=1e-6)


def test_adam_rejects_mismatched_shapes():
    params = fcn.init_params(3, 1, 2, hidden=2)
    with pytest.raises(ValueError, match="gradient shape"):
        fcn.adam_step(fcn.AdamState(), params, [(np.zeros((1, 1)), np.zeros(1))] * 3)


def _tiny_case(seed, head="linear"):
    rng = np.random.default_rng(seed)
    params = fcn.init_params(3, 1, 3, hidden=4, seed=seed, head=head)
    for _, b in params.layers:
        b[:] = rng.normal(0, 0.1, b.shape)
    return params, WindowSample(rng.normal(size=(3, 1)), rng.integers(0, 2, 3), "x", 0)


@pytest.mark.parametrize("eps", [1e-5, 1e-4])
@pytest.mark.parametrize("head", fcn.HEADS)
def test_finite_difference_agreement(eps, head):
    checked = 0
    for seed in range(20):
        params, sample = _tiny_case(seed, head)
        res = fcn.finite_diff_check(params, sample, eps=eps)
        if res.kinked:
            continue
        checked += 1
        assert res.passed(1e-4), (seed, res)
    assert checked >= 10


def test_finite_difference_eps_bounds():
    params, sample = _tiny_case(0)
    with pytest.raises(ValueError):
        fcn.finite_diff_check(params, sample, eps=1e-2)


def test_broken_gradient_is_caught():
    def flipped(params, X, y, normalization):
        loss, grads = fcn.loss_and_grads(params, X, y, normalization)
        return loss, [(-dW, -db) for dW, db in grads]

    passed, counted, _, worst = tiny_gradient_trials(30, grad_fn=flipped)
    assert passed == 0 and counted > 0 and worst > 1


def test_gradient_trials_rate():
    passed, counted, _, _ = tiny_gradient_trials(100)
    assert passed / counted >= 0.95


def test_descent_direction():
    """A small step against the gradient lowers the loss on most random draws."""
    wins = trials = 0
    for seed in range(100):
        params, sample = _tiny_case(seed)
        loss, grads = fcn.loss_and_grads(params, sample.input, sample.target)
        if loss == 0:
            continue
        trials += 1
        for (W, b), (dW, db) in zip(params.layers, grads):
            W -= 1e-4 * dW
            b -= 1e-4 * db
        params.version += 1
        new, _ = fcn.loss_and_grads(params, sample.input, sample.target)
        wins += new < loss
    assert wins / trials >= 0.95


@pytest.mark.parametrize("head", fcn.HEADS)
def test_checkpoint_round_trip(tmp_path, head):
    params = fcn.init_params(5, 2, 3, hidden=7, seed=4, head=head)
    params.layers[0][1][:] = np.random.default_rng(0).normal(size=7) * 1e-300
    path = tmp_path / "ckpt.txt"
    fcn.save_checkpoint(path, params, {"note": "x"}, {"mu": np.array([1 / 3, 2.0])})
    loaded, meta, extra = fcn.load_checkpoint(path)
    assert meta == {"note": "x"} and loaded.head == head
    for a, b in zip(params.arrays(), loaded.arrays()):
        np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(extra["mu"], [1 / 3, 2.0])
    X = np.random.default_rng(1).normal(size=(3, 5, 2))
    np.testing.assert_array_equal(fcn.predict(params, X), fcn.predict(loaded, X))


def test_checkpoint_rejects_foreign_file(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text('{"format": "other"}\n')
    with pytest.raises(ValueError, match="not an"):
        fcn.load_checkpoint(path)
