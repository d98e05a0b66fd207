import numpy as np
import pytest

from linkprint import kernels
from linkprint.dataset import LabeledDataset
from linkprint.errors import DegenerateModelError, DivergenceError
from linkprint.models.nn import (Conv1dModel, Conv1dParams, MlpModel, MlpParams,
                                 cross_entropy, softmax, train_conv1d, train_mlp)
from oracles import central_difference, full_rel_error, rel_error


def tiny(seed, n=6, d=12, k=3):
    rng = np.random.default_rng(seed)
    return rng.random((n, d)), rng.integers(0, k, n)


def test_softmax_and_cross_entropy():
    z = np.array([[1.0, 2.0, 3.0], [1000.0, 0.0, 0.0]])
    p = softmax(z)
    assert np.allclose(p.sum(axis=1), 1)
    assert p[1, 0] == pytest.approx(1.0)
    loss, d = cross_entropy(z, np.array([2, 0]))
    want = (-np.log(p[0, 2]) + 0.0) / 2
    assert loss == pytest.approx(want)
    assert np.allclose(d.sum(axis=1), 0)


@pytest.mark.parametrize("seed, n", [(0, 3), (1, 3), (0, 6), (1, 6)])
def test_mlp_gradient(seed, n):
    X, y = tiny(seed, n=n)
    model = MlpModel.init(X.shape[1], ("a", "b", "c"), seed)
    _, grads = model.loss_and_grads(X, y)
    num = central_difference(lambda: model.loss(X, y), model.params)
    for k in model.params:
        assert rel_error(grads[k], num[k]) < 1e-4, k


@pytest.mark.parametrize("seed, n", [(0, 3), (1, 3), (0, 6), (1, 6)])
def test_conv_gradient(seed, n):
    X, y = tiny(seed, n=n)
    model = Conv1dModel.init(X.shape[1], ("a", "b", "c"), seed)
    # non-trivial batch-norm affine parameters
    rng = np.random.default_rng(seed + 10)
    model.params["bn_gamma"] += rng.normal(0, 0.3, 8)
    model.params["bn_beta"] += rng.normal(0, 0.3, 8)
    _, grads = model.loss_and_grads(X, y)
    num = central_difference(lambda: model.loss(X, y), model.params)
    assert full_rel_error(grads, num) < 1e-4
    # batch norm in training mode cancels the conv bias exactly
    assert np.abs(grads["conv_b"]).max() < 1e-12
    assert np.abs(num["conv_b"]).max() < 1e-8
    for k in model.params:
        if k != "conv_b":
            assert rel_error(grads[k], num[k]) < 1e-4, k


def block_args(dtype, seed=0, n=5, length=20, c=8, width=5):
    rng = np.random.default_rng(seed)
    X = rng.random((n, length)).astype(dtype)
    W = rng.normal(size=(c, width)).astype(dtype)
    b = rng.normal(size=c).astype(dtype)
    gamma = (1 + 0.2 * rng.normal(size=c)).astype(dtype)
    beta = rng.normal(size=c).astype(dtype)
    rm = rng.normal(size=c).astype(dtype)
    rv = (1 + rng.random(c)).astype(dtype)
    dA = rng.normal(size=(n, c, length - width + 1)).astype(dtype)
    return X, W, b, gamma, beta, rm, rv, dA


@pytest.mark.skipif("cython" not in kernels.CONV_IMPLEMENTATIONS, reason="extension not built")
@pytest.mark.parametrize("dtype, rtol", [("float64", 1e-12), ("float32", 1e-4)])
@pytest.mark.parametrize("train", [True, False])
def test_conv_routes_agree(dtype, rtol, train):
    X, W, b, gamma, beta, rm, rv, dA = block_args(dtype)
    outs = {}
    for name, mod in kernels.CONV_IMPLEMENTATIONS.items():
        zhat, a, mu, var, inv = mod.forward(X, W, b, gamma, beta, rm, rv, train, 1e-5)
        grads = mod.backward(X, W, gamma, zhat, a, inv, dA)
        outs[name] = (zhat, a, mu, var, inv) + tuple(grads)
    for p, c in zip(outs["python"], outs["cython"]):
        assert p.dtype == c.dtype == np.dtype(dtype)
        np.testing.assert_allclose(c, p, rtol=rtol, atol=rtol)


def test_conv_forward_matches_direct_loop():
    X, W, b, gamma, beta, rm, rv, _ = block_args("float64", n=2, length=9)
    zhat, a, *_ = kernels.conv_block.forward(X, W, b, gamma, beta, rm, rv, False, 1e-5)
    for n in range(2):
        for c in range(8):
            for l in range(5):
                z = float(np.dot(W[c], X[n, l:l + 5])) + b[c]
                want = max(0.0, gamma[c] * (z - rm[c]) / np.sqrt(rv[c] + 1e-5) + beta[c])
                assert a[n, c, l] == pytest.approx(want, rel=1e-12, abs=1e-12)


def separable_traces(seed=0, n=15, d=30):
    rng = np.random.default_rng(seed)
    t = np.linspace(0, 1, d)
    X = np.vstack([np.sin(2 * np.pi * f * t) + 0.1 * rng.standard_normal((n, d))
                   for f in (1, 3)])
    return LabeledDataset((X + 1.5) / 3, ["lo"] * n + ["hi"] * n)


def test_mlp_training_reduces_loss():
    model = train_mlp(separable_traces(), MlpParams(lr=0.05, epochs=200), seed=0)
    assert model.loss_history[-1] < model.loss_history[0]


def test_conv_training_fits_float32():
    ds = separable_traces()
    model = train_conv1d(ds, Conv1dParams(lr=0.01, epochs=60), seed=0)
    assert model.dtype == np.float32
    assert model.loss_history[-1] < 0.5 * model.loss_history[0]
    assert model.predict_batch(ds) == list(ds.labels)
    # running statistics moved away from their initial values
    assert not np.allclose(model.running_mean, 0)


def test_training_is_deterministic():
    ds = separable_traces()
    a = train_conv1d(ds, Conv1dParams(epochs=5), seed=2)
    b = train_conv1d(ds, Conv1dParams(epochs=5), seed=2)
    for k in a.params:
        assert np.array_equal(a.params[k], b.params[k])


def test_divergence_is_reported():
    # large but finite losses are allowed; the error fires once the loss is NaN
    with np.errstate(all="ignore"), pytest.raises(DivergenceError) as exc:
        train_mlp(separable_traces(), MlpParams(lr=1e30, epochs=50), seed=0)
    assert exc.value.epoch == 3 and "epoch 3" in str(exc.value)


def test_degenerate_inputs():
    one = LabeledDataset(np.zeros((4, 10)), ["a"] * 4)
    with pytest.raises(DegenerateModelError):
        train_mlp(one)
    with pytest.raises(ValueError):
        Conv1dModel.init(3, ("a", "b"), 0)


def test_untrained_outputs_are_distributions():
    X, _ = tiny(3, n=10)
    for cls in (MlpModel, Conv1dModel):
        p = cls.init(X.shape[1], ("a", "b", "c"), 0).predict_proba(X)
        assert np.all(np.abs(p.sum(axis=1) - 1) < 1e-9)
        assert np.all(p > 0.05)


def test_mlp_default_training_on_separable_set():
    rng = np.random.default_rng(4)
    X = np.vstack([rng.uniform(0, 0.3, (20, 10)), rng.uniform(0.7, 1, (20, 10))])
    ds = LabeledDataset(X, ["a"] * 20 + ["b"] * 20)
    model = train_mlp(ds, seed=0)
    assert np.mean(np.array(model.predict_batch(ds)) == np.array(ds.labels)) > 0.95
    h = np.array(model.loss_history)
    # monotone up to a 5% transient
    assert np.all(h[1:] <= 1.05 * np.minimum.accumulate(h)[:-1])


def test_constant_row_gives_constant_conv_output():
    model = Conv1dModel.init(12, ("a", "b"), 0)
    p = model.params
    X = np.full((1, 12), 0.4)
    zhat, a, *_ = model.block.forward(X, p["conv_w"], p["conv_b"], np.ones(8), np.zeros(8),
                                      np.zeros(8), np.ones(8) - 1e-5, False, 1e-5)
    # identity batch norm: zhat is the raw convolution
    assert np.allclose(zhat[0], zhat[0][:, :1], rtol=1e-12)
