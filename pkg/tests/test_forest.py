import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from linkprint.dataset import LabeledDataset
from linkprint.errors import DegenerateModelError, ShapeError
from linkprint.models.forest import (ForestParams, _best_split, fit_tree, gini,
                                     train_forest, train_single_feature_baseline)
from oracles import best_split_bruteforce, gini_counts, grow_tree_bruteforce


def random_table(seed, n=8, d=3, k=3, levels=4):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, levels, (n, d)).astype(float)
    y = rng.integers(0, k, n)
    return X, y


def test_gini_values():
    assert gini(np.array([5, 0])) == 0.0
    assert gini(np.array([2, 2])) == pytest.approx(0.5)
    assert gini(np.array([1, 1, 1])) == pytest.approx(2 / 3)
    assert gini(np.array([0, 0])) == 0.0


@given(st.integers(0, 10_000))
def test_best_split_matches_bruteforce(seed):
    X, y = random_table(seed)
    got = _best_split(X, np.eye(3)[y], np.arange(len(y)), np.arange(3), 1)
    want = best_split_bruteforce(X.tolist(), y.tolist(), 3)
    if want is None:
        assert got is None
    else:
        assert got[0] == pytest.approx(want[0], abs=1e-12)
        assert got[1:] == want[1:]


@settings(max_examples=40)
@given(st.integers(0, 10_000))
def test_full_tree_matches_bruteforce(seed):
    X, y = random_table(seed)
    tree = fit_tree(X, y, 3)
    assert tree.structure() == grow_tree_bruteforce(X.tolist(), y.tolist(), 3)


def test_tie_goes_to_lowest_feature_then_threshold():
    # features 0 and 1 are identical copies: the split must use feature 0
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    y = np.array([0, 0, 1, 1])
    tree = fit_tree(X, y, 2)
    assert tree.structure()[:2] == (0, 1.5)
    # two equally good thresholds on one feature: the lower wins
    X = np.array([[0.0], [1.0], [2.0]])
    tree = fit_tree(X, np.array([0, 1, 0]), 2, max_depth=1)
    assert tree.structure()[1] == 0.5


def test_pure_node_and_depth_limit():
    X = np.arange(6, dtype=float)[:, None]
    assert fit_tree(X, np.zeros(6, int), 2).n_nodes == 1
    tree = fit_tree(X, np.array([0, 1, 0, 1, 0, 1]), 2, max_depth=2)
    assert max(depth for depth in _depths(tree)) <= 2


def _depths(tree):
    out, stack = [], [(0, 0)]
    while stack:
        i, dep = stack.pop()
        out.append(dep)
        if tree.left[i] >= 0:
            stack += [(tree.left[i], dep + 1), (tree.right[i], dep + 1)]
    return out


def blob_dataset(seed=0, n=30, d=10):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(m, 1.0, (n, d)) for m in (0.0, 2.5, 5.0)])
    return LabeledDataset(X, ["a"] * n + ["b"] * n + ["c"] * n)


def test_forest_learns_and_is_deterministic():
    ds = blob_dataset()
    params = ForestParams(n_trees=20)
    f1 = train_forest(ds, params, seed=3)
    f2 = train_forest(ds, params, seed=3)
    assert np.mean(np.array(f1.predict_batch(ds)) == np.array(ds.labels)) > 0.95
    assert [t.structure() for t in f1.trees] == [t.structure() for t in f2.trees]
    f3 = train_forest(ds, params, seed=4)
    assert [t.structure() for t in f1.trees] != [t.structure() for t in f3.trees]


@settings(max_examples=15)
@given(st.floats(0.1, 100), st.floats(-50, 50))
def test_forest_invariant_to_positive_affine_maps(scale, shift):
    ds = blob_dataset(1, n=10, d=4)
    moved = LabeledDataset(ds.features * scale + shift, ds.labels)
    params = ForestParams(n_trees=5)
    a = train_forest(ds, params, 0)
    b = train_forest(moved, params, 0)
    for ta, tb in zip(a.trees, b.trees):
        assert np.array_equal(ta.feature, tb.feature)
        assert np.array_equal(ta.value, tb.value)
    assert a.predict_batch(ds) == b.predict_batch(moved)


def test_constant_features_are_skipped():
    rng = np.random.default_rng(0)
    X = np.zeros((20, 5))
    X[:, 3] = rng.random(20)
    y = (X[:, 3] > 0.5).astype(int)
    tree = fit_tree(X, y, 2, max_features=1, rng=np.random.default_rng(1))
    assert tree.feature[0] == 3


def test_forest_errors():
    one = LabeledDataset(np.zeros((4, 2)), ["a"] * 4)
    with pytest.raises(DegenerateModelError):
        train_forest(one)
    model = train_forest(blob_dataset(n=5), ForestParams(n_trees=2))
    with pytest.raises(ShapeError):
        model.predict(np.zeros(3))
    assert model.predict(np.zeros(10)) in ("a", "b", "c")


def test_single_feature_baseline_uses_one_column():
    rng = np.random.default_rng(2)
    X = rng.random((40, 6))
    X[:20, 4] += 2.0
    ds = LabeledDataset(X, ["p"] * 20 + ["q"] * 20)
    stump = train_single_feature_baseline(ds)
    assert stump.feature == 4
    assert stump.predict_batch(ds) == list(ds.labels)


def test_max_features_resolution():
    assert ForestParams().resolve_max_features(100) == 10
    assert ForestParams(max_features=None).resolve_max_features(7) == 7
    assert ForestParams(max_features=50).resolve_max_features(7) == 7


def test_gini_oracle_self_check():
    assert gini_counts([2, 2]) == 0.5


def test_memorises_tiny_sets():
    two = LabeledDataset(np.array([[0.0], [1.0]]), ["a", "b"])
    xor = LabeledDataset(np.array([[0, 0], [1, 1], [0, 1], [1, 0]], float),
                         ["a", "a", "b", "b"])
    for ds in (two, xor):
        model = train_forest(ds, ForestParams(n_trees=10), seed=0)
        assert model.predict_batch(ds) == list(ds.labels)


def test_vote_ties_go_to_lowest_class():
    ds = LabeledDataset(np.array([[0.0], [1.0]]), ["a", "b"])
    model = train_forest(ds, ForestParams(n_trees=2, bootstrap=False), seed=0)
    model.trees[1].value = model.trees[1].value[:, ::-1].copy()
    assert model.predict_batch(ds) == ["a", "a"]


def test_batch_matches_per_row():
    ds = blob_dataset(n=8)
    model = train_forest(ds, ForestParams(n_trees=5), seed=1)
    assert model.predict_batch(ds) == [model.predict(r) for r in ds.features]
