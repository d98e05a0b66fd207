"""Independent reference computations used by the tests.

Nothing here imports the package under test, so agreement is evidence
rather than a tautology.
"""

from fractions import Fraction
from itertools import product

import numpy as np


def ps_completion_times(arrivals, sizes, weights, capacity):
    """Exact weighted processor-sharing departure times, in rationals.

    Between consecutive events (an arrival or the first departure) every
    active flow is served at ``capacity * w / sum(w)``, so the next event
    time is found in closed form from the remaining work.
    """
    cap = Fraction(capacity)
    n = len(sizes)
    arr = [Fraction(a) for a in arrivals]
    rem = [Fraction(s) for s in sizes]
    w = [Fraction(x) for x in weights]
    done = [None] * n
    pending = sorted(range(n), key=lambda i: (arr[i], i))
    active = []
    t = Fraction(0)
    while pending or active:
        if not active:
            t = max(t, arr[pending[0]])
        while pending and arr[pending[0]] <= t:
            active.append(pending.pop(0))
        total = sum(w[i] for i in active)
        # time for each active flow to finish at the current rates
        finish = {i: rem[i] * total / (cap * w[i]) for i in active}
        dt_dep = min(finish.values())
        dt_arr = arr[pending[0]] - t if pending else None
        dt = dt_dep if dt_arr is None or dt_dep <= dt_arr else dt_arr
        for i in active:
            rem[i] -= cap * w[i] / total * dt
        t += dt
        for i in [i for i in active if rem[i] == 0]:
            done[i] = t
            active.remove(i)
    return done


def gini_counts(counts):
    n = sum(counts)
    if n == 0:
        return 0.0
    return 1.0 - sum((c / n) ** 2 for c in counts)


def best_split_bruteforce(X, y, n_classes, tol=1e-12):
    """Exhaustive best Gini split over every feature and midpoint.

    Returns (impurity, feature, threshold) or None. Ties within `tol`
    go to the lowest feature, then the lowest threshold.
    """
    n, d = len(X), len(X[0])
    best = None
    for f in range(d):
        values = sorted(set(row[f] for row in X))
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) / 2
            if not thr < hi:
                thr = lo
            left = [0] * n_classes
            right = [0] * n_classes
            for row, lab in zip(X, y):
                (left if row[f] <= thr else right)[lab] += 1
            nl, nr = sum(left), sum(right)
            imp = (nl * gini_counts(left) + nr * gini_counts(right)) / n
            key = (imp, f, thr)
            if best is None or imp < best[0] - tol:
                best = key
            elif abs(imp - best[0]) <= tol and (f, thr) < (best[1], best[2]):
                best = key
    return best


def grow_tree_bruteforce(X, y, n_classes, tol=1e-12):
    """Fully grown tree from `best_split_bruteforce`, as nested tuples."""
    counts = [sum(1 for lab in y if lab == c) for c in range(n_classes)]
    parent = gini_counts(counts)
    split = best_split_bruteforce(X, y, n_classes, tol) if parent > 0 else None
    if split is None or not split[0] < parent - tol:
        return ("leaf", tuple(counts))
    _, f, thr = split
    li = [i for i, row in enumerate(X) if row[f] <= thr]
    ri = [i for i, row in enumerate(X) if row[f] > thr]
    return (f, thr,
            grow_tree_bruteforce([X[i] for i in li], [y[i] for i in li], n_classes, tol),
            grow_tree_bruteforce([X[i] for i in ri], [y[i] for i in ri], n_classes, tol))


def central_difference(f, params, eps=1e-6):
    """Numerical gradient of scalar `f()` w.r.t. every entry of `params`."""
    grads = {}
    for k, p in params.items():
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            up = f()
            p[idx] = old - eps
            down = f()
            p[idx] = old
            g[idx] = (up - down) / (2 * eps)
        grads[k] = g
    return grads


def rel_error(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12))


def full_rel_error(grads, num):
    """Relative error over every parameter flattened into one vector."""
    keys = sorted(num)
    return rel_error(np.concatenate([np.ravel(grads[k]) for k in keys]),
                     np.concatenate([np.ravel(num[k]) for k in keys]))


def macro_f1(cm):
    """Macro F1 over classes with support, by hand."""
    k = len(cm)
    scores = []
    for c in range(k):
        tp = cm[c][c]
        support = sum(cm[c])
        if support == 0:
            continue
        predicted = sum(cm[r][c] for r in range(k))
        p = tp / predicted if predicted else 0.0
        r = tp / support
        scores.append(2 * p * r / (p + r) if p + r else 0.0)
    return sum(scores) / len(scores)


def all_binary_rows(d):
    return [list(bits) for bits in product((0.0, 1.0), repeat=d)]
