"""Small neural classifiers in plain numpy.

`MlpModel`: dense 64 -> 32 -> classes with ReLU, trained by full-batch
gradient descent. `Conv1dModel`: one 1-D convolution (8 filters, width
5, stride 1, no padding), batch norm, ReLU, then the same dense head,
trained with Adam. Both minimise mean softmax cross-entropy.

Parameters live in an ordered dict of arrays so gradient checks
and serialisation can walk them generically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels, rng as rngmod
from ..errors import DivergenceError
from .base import Classifier, encode, require_two_classes

HIDDEN = (64, 32)
CONV_FILTERS = 8
CONV_WIDTH = 5
BN_EPS = 1e-5
BN_MOMENTUM = 0.1


@dataclass(frozen=True)
class MlpParams:
    lr: float = 0.001
    epochs: int = 1500


@dataclass(frozen=True)
class Conv1dParams:
    lr: float = 0.001
    epochs: int = 1500
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    dtype: str = "float32"


def glorot(rng, fan_in, fan_out, shape):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits, y):
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    n = len(y)
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(logsum - z[np.arange(n), y]))
    d = softmax(logits)
    d[np.arange(n), y] -= 1.0
    return loss, d / n


def _dense_init(rng, sizes):
    params = {}
    for k, (a, b) in enumerate(zip(sizes[:-1], sizes[1:]), start=1):
        params[f"W{k}"] = glorot(rng, a, b, (a, b))
        params[f"b{k}"] = np.zeros(b)
    return params


def _dense_forward(params, h, first=1):
    cache = []
    k = first
    while f"W{k}" in params:
        cache.append(h)
        h = h @ params[f"W{k}"] + params[f"b{k}"]
        if f"W{k + 1}" in params:
            h = np.maximum(h, 0.0)
        k += 1
    return h, cache


def _dense_backward(params, cache, d, grads, first=1):
    k = first + len(cache) - 1
    for h in reversed(cache):
        grads[f"W{k}"] = h.T @ d
        grads[f"b{k}"] = d.sum(axis=0)
        d = d @ params[f"W{k}"].T
        if k > first:
            d = d * (h > 0)
        k -= 1
    return d


class _NeuralModel(Classifier):
    def __init__(self, params, classes, n_features):
        self.params = params
        self.classes = tuple(classes)
        self.n_features = int(n_features)
        self.loss_history = []

    def predict_proba(self, X):
        return softmax(self.forward(self._check(X), train=False)[0])

    def predict_index(self, X):
        return np.argmax(self.forward(self._check(X), train=False)[0], axis=1)

    def loss_and_grads(self, X, y):
        """Loss and gradients in training mode, without touching running stats."""
        logits, cache = self.forward(X, train=True, update_stats=False)
        loss, d = cross_entropy(logits, y)
        return loss, self.backward(cache, d)

    def loss(self, X, y):
        logits, _ = self.forward(X, train=True, update_stats=False)
        return cross_entropy(logits, y)[0]


class MlpModel(_NeuralModel):
    kind = "mlp"

    @classmethod
    def init(cls, n_features, classes, seed):
        rng = rngmod.generator(seed, rngmod.MODEL, 1)
        return cls(_dense_init(rng, (n_features,) + HIDDEN + (len(classes),)), classes,
                   n_features)

    def forward(self, X, train=False, update_stats=True):
        return _dense_forward(self.params, X)

    def backward(self, cache, d):
        grads = {}
        _dense_backward(self.params, cache, d, grads)
        return {k: grads[k] for k in self.params}


class Conv1dModel(_NeuralModel):
    kind = "conv1d"

    def __init__(self, params, classes, n_features, running_mean=None, running_var=None):
        super().__init__(params, classes, n_features)
        self.dtype = params["conv_w"].dtype
        self.running_mean = (np.zeros(CONV_FILTERS, self.dtype) if running_mean is None
                             else np.asarray(running_mean, self.dtype))
        self.running_var = (np.ones(CONV_FILTERS, self.dtype) if running_var is None
                            else np.asarray(running_var, self.dtype))
        self.block = kernels.conv_block

    @classmethod
    def init(cls, n_features, classes, seed, dtype="float64"):
        if n_features < CONV_WIDTH:
            raise ValueError(f"conv1d needs at least {CONV_WIDTH} features")
        rng = rngmod.generator(seed, rngmod.MODEL, 2)
        params = {
            "conv_w": glorot(rng, CONV_WIDTH, CONV_FILTERS * CONV_WIDTH,
                             (CONV_FILTERS, CONV_WIDTH)),
            "conv_b": np.zeros(CONV_FILTERS),
            "bn_gamma": np.ones(CONV_FILTERS),
            "bn_beta": np.zeros(CONV_FILTERS),
        }
        flat = CONV_FILTERS * (n_features - CONV_WIDTH + 1)
        params.update(_dense_init(rng, (flat,) + HIDDEN + (len(classes),)))
        return cls({k: v.astype(dtype) for k, v in params.items()}, classes, n_features)

    def _check(self, X):
        return super()._check(X).astype(self.dtype)

    def forward(self, X, train=False, update_stats=True):
        p = self.params
        zhat, a, mu, var, inv = self.block.forward(
            X, p["conv_w"], p["conv_b"], p["bn_gamma"], p["bn_beta"],
            self.running_mean, self.running_var, bool(train), BN_EPS)
        if train and update_stats:
            m = zhat.shape[0] * zhat.shape[2]
            unbiased = var * m / max(m - 1, 1)
            self.running_mean = (1 - BN_MOMENTUM) * self.running_mean + BN_MOMENTUM * mu
            self.running_var = (1 - BN_MOMENTUM) * self.running_var + BN_MOMENTUM * unbiased
        # a is (N, filters, L_out): the channel-major flatten is a free reshape
        logits, dense_cache = _dense_forward(p, a.reshape(len(X), -1))
        return logits, (X, zhat, a, inv, dense_cache)

    def backward(self, cache, d):
        p = self.params
        X, zhat, a, inv, dense_cache = cache
        grads = {}
        dflat = _dense_backward(p, dense_cache, d, grads)
        dA = np.ascontiguousarray(dflat).reshape(a.shape)
        (grads["conv_w"], grads["conv_b"], grads["bn_gamma"],
         grads["bn_beta"]) = self.block.backward(X, p["conv_w"], p["bn_gamma"], zhat, a, inv, dA)
        return {k: grads[k] for k in p}


def _check_loss(loss, epoch, history):
    if not np.isfinite(loss):
        raise DivergenceError(f"loss became {loss} at epoch {epoch}", epoch=epoch)
    history.append(loss)


def train_mlp(train, params=None, seed=0):
    params = params or MlpParams()
    require_two_classes(train)
    X, y, classes = encode(train)
    model = MlpModel.init(X.shape[1], classes, seed)
    for epoch in range(params.epochs):
        loss, grads = model.loss_and_grads(X, y)
        _check_loss(loss, epoch, model.loss_history)
        for k, g in grads.items():
            model.params[k] -= params.lr * g
    return model


def train_conv1d(train, params=None, seed=0):
    params = params or Conv1dParams()
    require_two_classes(train)
    X, y, classes = encode(train)
    model = Conv1dModel.init(X.shape[1], classes, seed, params.dtype)
    m = {k: np.zeros_like(v) for k, v in model.params.items()}
    v = {k: np.zeros_like(v) for k, v in model.params.items()}
    b1, b2 = params.beta1, params.beta2
    X = np.ascontiguousarray(X, dtype=model.dtype)
    for epoch in range(params.epochs):
        logits, cache = model.forward(X, train=True)
        loss, d = cross_entropy(logits, y)
        _check_loss(loss, epoch, model.loss_history)
        grads = model.backward(cache, d)
        t = epoch + 1
        step = params.lr / (1 - b1 ** t)
        vscale = 1.0 / (1 - b2 ** t)
        for k, g in grads.items():
            # in place: m <- b1 m + (1-b1) g, v <- b2 v + (1-b2) g^2
            m[k] *= b1
            m[k] += (1 - b1) * g
            v[k] *= b2
            v[k] += (1 - b2) * (g * g)
            denom = np.sqrt(v[k] * vscale)
            denom += params.eps
            model.params[k] -= step * m[k] / denom
    return model
