"""RBF-kernel support vector classifier, one-vs-one.

Each class pair is solved with sequential minimal optimisation using
second-order working-set selection. The solver stops when the maximal
KKT violation ``m(a) - M(a)`` drops below `tol`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConvergenceError
from .base import Classifier, encode, require_two_classes

TAU = 1e-12


@dataclass(frozen=True)
class SvmParams:
    C: float = 1.0
    gamma: float | str = "scale"
    tol: float = 1e-3
    max_iter: int = 100_000


def rbf_kernel(A, B, gamma):
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def scale_gamma(X):
    var = X.var()
    return 1.0 / (X.shape[1] * var) if var > 0 else 1.0


@dataclass
class BinarySolution:
    alpha: np.ndarray
    rho: float
    residual: float
    iterations: int


def solve_binary(K, y, C, tol=1e-3, max_iter=100_000):
    """Solve the soft-margin dual for labels y in {+1, -1}.

    min 1/2 a'Qa - e'a  s.t.  0 <= a <= C, y'a = 0,  Q_ij = y_i y_j K_ij.
    """
    n = len(y)
    y = y.astype(float)
    Q = (y[:, None] * y[None, :]) * K
    alpha = np.zeros(n)
    G = -np.ones(n)
    diag = np.diag(K).copy()
    it = 0
    while True:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        score = -y * G
        if not up.any() or not low.any():
            gap = 0.0
            break
        m_val = np.max(np.where(up, score, -np.inf))
        M_val = np.min(np.where(low, score, np.inf))
        gap = m_val - M_val
        if gap < tol:
            break
        if it >= max_iter:
            raise ConvergenceError(
                f"SMO did not converge in {max_iter} iterations (KKT residual {gap:.3g})",
                residual=gap)
        i = int(np.argmax(np.where(up, score, -np.inf)))
        b = m_val - score
        a = diag[i] + diag - 2.0 * y[i] * y * Q[i]
        a = np.where(a > 0, a, TAU)
        cand = low & (score < m_val)
        obj = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))
        # analytic two-variable update (libsvm form)
        Qi, Qj = Q[i], Q[j]
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(Q[i, i] + Q[j, j] + 2.0 * Q[i, j], TAU)
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            quad = max(Q[i, i] + Q[j, j] - 2.0 * Q[i, j], TAU)
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        G += Qi * (ai - alpha[i]) + Qj * (aj - alpha[j])
        alpha[i], alpha[j] = ai, aj
        it += 1
    rho = _rho(alpha, y, G, C)
    return BinarySolution(alpha, rho, float(gap), it)


def _rho(alpha, y, G, C):
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(yG[free].mean())
    at_c, at_0 = alpha >= C, alpha <= 0
    ub = np.min(np.where((at_c & (y < 0)) | (at_0 & (y > 0)), yG, np.inf))
    lb = np.max(np.where((at_c & (y > 0)) | (at_0 & (y < 0)), yG, -np.inf))
    if not np.isfinite(ub) or not np.isfinite(lb):
        return float(yG.mean())
    return float((ub + lb) / 2.0)


@dataclass
class PairMachine:
    a: int  # class index voted for when decision > 0
    b: int
    support: np.ndarray  # (n_sv, d)
    coef: np.ndarray  # alpha_i * y_i for each support vector
    rho: float
    residual: float
    iterations: int = 0


class SvmModel(Classifier):
    kind = "svm"

    def __init__(self, machines, classes, n_features, gamma, C):
        self.machines = list(machines)
        self.classes = tuple(classes)
        self.n_features = int(n_features)
        self.gamma = float(gamma)
        self.C = float(C)

    @property
    def residual(self):
        return max((m.residual for m in self.machines), default=0.0)

    def decision(self, X):
        """(n_rows, n_machines) pairwise decision values."""
        X = self._check(X)
        out = np.empty((len(X), len(self.machines)))
        for k, m in enumerate(self.machines):
            out[:, k] = rbf_kernel(X, m.support, self.gamma) @ m.coef - m.rho
        return out

    def predict_index(self, X):
        dec = self.decision(X)
        votes = np.zeros((len(dec), len(self.classes)), dtype=np.int64)
        for k, m in enumerate(self.machines):
            winner = np.where(dec[:, k] > 0, m.a, m.b)
            np.add.at(votes, (np.arange(len(dec)), winner), 1)
        return np.argmax(votes, axis=1)


def train_svm(train, params=None):
    params = params or SvmParams()
    require_two_classes(train)
    X, y, classes = encode(train)
    gamma = scale_gamma(X) if params.gamma == "scale" else float(params.gamma)
    K = rbf_kernel(X, X, gamma)
    machines = []
    for a in range(len(classes)):
        for b in range(a + 1, len(classes)):
            rows = np.flatnonzero((y == a) | (y == b))
            yy = np.where(y[rows] == a, 1.0, -1.0)
            sol = solve_binary(K[np.ix_(rows, rows)], yy, params.C, params.tol, params.max_iter)
            sv = sol.alpha > 0
            machines.append(PairMachine(a, b, X[rows][sv], (sol.alpha * yy)[sv], sol.rho,
                                        sol.residual, sol.iterations))
    model = SvmModel(machines, classes, X.shape[1], gamma, params.C)
    model.dual = {(m.a, m.b): m for m in machines}
    return model
