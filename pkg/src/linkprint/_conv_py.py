"""Numpy conv -> batch-norm -> ReLU block; fallback for `_conv_c`.

Layout is (N, filters, L_out) throughout, which makes the channel-major
flatten feeding the dense head a free reshape. The dtype of the inputs
(float32 or float64) is preserved.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def forward(X, W, b, gamma, beta, run_mean, run_var, train, eps):
    """Returns (zhat, a, mu, var, inv) where a = relu(gamma * zhat + beta)."""
    cols = sliding_window_view(X, W.shape[1], axis=1)  # (N, L_out, K)
    z = np.matmul(cols, W.T).transpose(0, 2, 1) + b[None, :, None]
    if train:
        mu = z.mean(axis=(0, 2))
        var = ((z - mu[None, :, None]) ** 2).mean(axis=(0, 2))
    else:
        mu, var = np.array(run_mean), np.array(run_var)
    inv = 1.0 / np.sqrt(var + eps)
    zhat = (z - mu[None, :, None]) * inv[None, :, None]
    a = np.maximum(gamma[None, :, None] * zhat + beta[None, :, None], 0.0)
    return np.ascontiguousarray(zhat), np.ascontiguousarray(a), mu, var, inv


def backward(X, W, gamma, zhat, a, inv, dA):
    """Gradients (dW, db, dgamma, dbeta) of a training-mode forward pass."""
    da = np.where(a > 0, dA, 0.0)
    dbeta = da.sum(axis=(0, 2))
    dgamma = (da * zhat).sum(axis=(0, 2))
    m = zhat.shape[0] * zhat.shape[2]
    dzhat = da * gamma[None, :, None]
    dz = (inv / m)[None, :, None] * (m * dzhat - (gamma * dbeta)[None, :, None]
                                     - zhat * (gamma * dgamma)[None, :, None])
    cols = sliding_window_view(X, W.shape[1], axis=1)  # (N, L_out, K)
    dW = np.einsum("ncl,nlk->ck", dz, cols, optimize=True)
    db = dz.sum(axis=(0, 2))
    return dW, db, dgamma, dbeta
