"""2-D projections of a corpus: PCA and exact t-SNE."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .. import rng as rngmod
from ..errors import ValidationError


@dataclass(frozen=True)
class TsneParams:
    perplexity: float = 30.0
    iters: int = 1000
    lr: float = 200.0
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250


def _matrix(data):
    X = np.asarray(data.features if hasattr(data, "features") else data, dtype=float)
    if X.ndim != 2:
        raise ValidationError("projection needs a 2-D feature matrix")
    return X


def pca_2d(X):
    """Scores on the top two principal components of the centred data.

    Each component's sign is fixed so its largest-magnitude loading is
    positive. If the data has rank below two the missing coordinates are
    zero and a warning is issued.
    """
    Xc = X - X.mean(axis=0)
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    tol = max(Xc.shape) * np.finfo(float).eps * (s[0] if len(s) else 0.0)
    rank = int(np.sum(s > tol))
    out = np.zeros((len(X), 2))
    if rank < 2:
        warnings.warn(f"data has rank {rank}; PCA falls back to {rank} component(s)",
                      RuntimeWarning, stacklevel=3)
    for k in range(min(rank, 2)):
        v = vt[k]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        out[:, k] = Xc @ v
    return out


def _sq_dists(X):
    sq = (X * X).sum(axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


def conditional_affinities(D, perplexity, tol=1e-5, max_steps=100):
    """Row-wise Gaussian affinities whose entropy matches log(perplexity).

    Each row's precision is found by bisection on the entropy in nats.
    """
    n = len(D)
    target = np.log(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        d = np.delete(D[i], i)
        d = d - d.min()
        beta, lo, hi = 1.0, 0.0, np.inf
        for _ in range(max_steps):
            p = np.exp(-d * beta)
            total = p.sum()
            H = np.log(total) + beta * float(d @ p) / total
            if abs(H - target) < tol:
                break
            if H > target:
                lo = beta
                beta = beta * 2.0 if hi == np.inf else 0.5 * (beta + hi)
            else:
                hi = beta
                beta = 0.5 * (beta + lo)
        P[i, np.arange(n) != i] = p / total
    return P


def joint_affinities(X, perplexity):
    P = conditional_affinities(_sq_dists(X), perplexity)
    P = (P + P.T) / (2.0 * len(X))
    return np.maximum(P, 1e-12)


def kl_gradient(P, Y):
    """(KL(P || Q), gradient w.r.t. Y) for Student-t embedding affinities."""
    num = 1.0 / (1.0 + _sq_dists(Y))
    np.fill_diagonal(num, 0.0)
    Q = np.maximum(num / num.sum(), 1e-12)
    W = (P - Q) * num
    grad = 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)
    off = ~np.eye(len(P), dtype=bool)
    kl = float(np.sum(P[off] * np.log(P[off] / Q[off])))
    return kl, grad


def tsne_2d(X, params=None, seed=0):
    """Exact t-SNE: gradient descent with momentum and per-coordinate gains."""
    params = params or TsneParams()
    n = len(X)
    if not params.perplexity < (n - 1) / 3.0:
        raise ValidationError(
            f"perplexity {params.perplexity} must be below (n - 1) / 3 = {(n - 1) / 3:.3g}")
    P = joint_affinities(X, params.perplexity)
    rng = rngmod.generator(seed, rngmod.PROJECTION)
    Y = 1e-4 * rng.standard_normal((n, 2))
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    for it in range(params.iters):
        early = it < params.exaggeration_iters
        _, grad = kl_gradient(P * params.early_exaggeration if early else P, Y)
        momentum = 0.5 if early else 0.8
        same = np.sign(grad) == np.sign(update)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        update = momentum * update - params.lr * gains * grad
        Y = Y + update
        Y = Y - Y.mean(axis=0)
    return Y


def project_2d(data, method="pca", params=None, seed=0):
    """n x 2 embedding of a dataset or matrix by `pca` or `tsne`."""
    X = _matrix(data)
    if len(X) < 3:
        raise ValidationError("projection needs at least 3 rows")
    if method == "pca":
        return pca_2d(X)
    if method == "tsne":
        return tsne_2d(X, params, seed)
    raise ValidationError(f"unknown projection method {method!r}")
