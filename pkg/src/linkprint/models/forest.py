"""Random forest of Gini decision trees.

Trees are stored as flat arrays (node i has `feature[i]`, `threshold[i]`,
children `left[i]`/`right[i]`, -1 for leaves) and a per-node class
histogram. A row goes left when ``x[feature] <= threshold``.

Split choice is fully determined: the lowest weighted Gini wins, and
candidates within `TIE_TOL` of the best are resolved by the lowest
feature index, then the lowest threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import rng as rngmod
from .base import Classifier, encode, require_two_classes

TIE_TOL = 1e-12


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    max_features: int | str | None = "sqrt"
    min_leaf: int = 1
    bootstrap: bool = True

    def resolve_max_features(self, d):
        mf = self.max_features
        if mf is None or mf == "all":
            return d
        if mf == "sqrt":
            return max(1, int(math.isqrt(d)))
        return max(1, min(d, int(mf)))


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, n_classes) class counts

    @property
    def n_nodes(self):
        return len(self.feature)

    def apply(self, X):
        """Leaf index reached by every row of X."""
        node = np.zeros(len(X), dtype=np.int64)
        active = self.left[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            n = node[rows]
            go_left = X[rows, self.feature[n]] <= self.threshold[n]
            node[rows] = np.where(go_left, self.left[n], self.right[n])
            active[rows] = self.left[node[rows]] >= 0
        return node

    def predict_index(self, X):
        return np.argmax(self.value[self.apply(X)], axis=1)

    def structure(self):
        """Nested tuples (feature, threshold, left, right) / ('leaf', counts)."""
        def walk(i):
            if self.left[i] < 0:
                return ("leaf", tuple(int(c) for c in self.value[i]))
            return (int(self.feature[i]), float(self.threshold[i]),
                    walk(self.left[i]), walk(self.right[i]))
        return walk(0)


def gini(counts):
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return 1.0 - float(np.dot(p, p))


def _best_split(X, y1h, rows, features, min_leaf):
    """Best (impurity, feature, threshold) over `features`, or None.

    Weighted child impurity is ``(nL*gini(L) + nR*gini(R)) / n``.
    """
    n = len(rows)
    Xs = X[np.ix_(rows, features)]
    order = np.argsort(Xs, axis=0, kind="stable")
    V = np.take_along_axis(Xs, order, axis=0)
    Ys = y1h[rows][order]  # (n, f, C)
    left = np.cumsum(Ys, axis=0)[:-1]
    total = left[-1] + Ys[-1] if n > 1 else Ys[0]
    right = total[None, :, :] - left
    nl = np.arange(1, n, dtype=float)[:, None]
    nr = n - nl
    imp = (nl - (left * left).sum(axis=2) / nl + nr - (right * right).sum(axis=2) / nr) / n
    valid = (V[1:] > V[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
    if not valid.any():
        return None
    imp = np.where(valid, imp, np.inf)
    best = imp.min()
    cand = np.argwhere(imp <= best + TIE_TOL)  # (pos, feature column)
    thr = 0.5 * (V[cand[:, 0], cand[:, 1]] + V[cand[:, 0] + 1, cand[:, 1]])
    hi = V[cand[:, 0] + 1, cand[:, 1]]
    thr = np.where(thr >= hi, V[cand[:, 0], cand[:, 1]], thr)
    feat = np.asarray(features)[cand[:, 1]]
    pick = np.lexsort((thr, feat))[0]
    return float(imp[cand[pick, 0], cand[pick, 1]]), int(feat[pick]), float(thr[pick])


def fit_tree(X, y, n_classes, max_features=None, max_depth=None, min_leaf=1, rng=None):
    """Grow one tree on (X, y); `rng` is only needed when max_features < d."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    d = X.shape[1]
    mf = d if max_features is None else max_features
    y1h = np.eye(n_classes)[y]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(np.bincount(y[rows], minlength=n_classes))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        counts = value[node]
        parent = gini(counts)
        if (parent == 0.0 or len(rows) < 2 * min_leaf
                or (max_depth is not None and depth >= max_depth)):
            continue
        split = _search(X, y1h, rows, d, mf, min_leaf, rng)
        if split is None or not split[0] < parent - TIE_TOL:
            continue
        _, f, t = split
        go_left = X[rows, f] <= t
        feature[node], threshold[node] = f, t
        lrows, rrows = rows[go_left], rows[~go_left]
        li, ri = new_node(lrows), new_node(rrows)
        left[node], right[node] = li, ri
        # right pushed first so the left subtree is numbered first
        stack.append((ri, rrows, depth + 1))
        stack.append((li, lrows, depth + 1))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=float),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(value, dtype=np.int64))


def _search(X, y1h, rows, d, mf, min_leaf, rng):
    if mf >= d:
        return _best_split(X, y1h, rows, np.arange(d), min_leaf)
    # sample features without replacement; constant features do not count
    # toward max_features, as in the usual CART implementations
    perm = rng.permutation(d)
    Xr = X[rows]
    best, seen, pos = None, 0, 0
    while seen < mf and pos < d:
        chunk = perm[pos:pos + (mf - seen)]
        pos += len(chunk)
        nonconst = chunk[np.ptp(Xr[:, chunk], axis=0) > 0]
        seen += len(nonconst)
        if len(nonconst) == 0:
            continue
        cand = _best_split(X, y1h, rows, nonconst, min_leaf)
        if cand is None:
            continue
        if (best is None or cand[0] < best[0] - TIE_TOL
                or (abs(cand[0] - best[0]) <= TIE_TOL and (cand[1], cand[2]) < (best[1], best[2]))):
            best = cand
    return best


class ForestModel(Classifier):
    kind = "forest"

    def __init__(self, trees, classes, n_features, params, seed):
        self.trees = list(trees)
        self.classes = tuple(classes)
        self.n_features = int(n_features)
        self.params = params
        self.seed = seed

    @property
    def n_trees(self):
        return len(self.trees)

    def votes(self, X):
        X = self._check(X)
        votes = np.zeros((len(X), len(self.classes)), dtype=np.int64)
        rows = np.arange(len(X))
        for t in self.trees:
            np.add.at(votes, (rows, t.predict_index(X)), 1)
        return votes

    def predict_index(self, X):
        # np.argmax returns the first maximum: ties go to the lowest class index
        return np.argmax(self.votes(X), axis=1)


def train_forest(train, params=None, seed=0):
    params = params or ForestParams()
    require_two_classes(train)
    X, y, classes = encode(train)
    n, d = X.shape
    mf = params.resolve_max_features(d)
    trees = []
    for i in range(params.n_trees):
        rng = rngmod.generator(seed, rngmod.MODEL, i)
        rows = rng.integers(0, n, n) if params.bootstrap else np.arange(n)
        trees.append(fit_tree(X[rows], y[rows], len(classes), mf, params.max_depth,
                              params.min_leaf, rng))
    return ForestModel(trees, classes, d, params, seed)


def train_single_feature_baseline(train, max_depth=3):
    """Best single-feature tree, chosen by training accuracy.

    Used as the nontriviality control: a depth-3 tree on one trace point
    can carve out up to eight intervals, one per class.
    """
    require_two_classes(train)
    X, y, classes = encode(train)
    best = None
    for j in range(X.shape[1]):
        tree = fit_tree(X[:, [j]], y, len(classes), None, max_depth, 1, None)
        acc = float(np.mean(tree.predict_index(X[:, [j]]) == y))
        if best is None or acc > best[0]:
            best = (acc, j, tree)
    return SingleFeatureModel(best[2], best[1], classes, X.shape[1])


class SingleFeatureModel(Classifier):
    kind = "stump"

    def __init__(self, tree, feature, classes, n_features):
        self.tree = tree
        self.feature = int(feature)
        self.classes = tuple(classes)
        self.n_features = int(n_features)

    def predict_index(self, X):
        X = self._check(X)
        return self.tree.predict_index(X[:, [self.feature]])
