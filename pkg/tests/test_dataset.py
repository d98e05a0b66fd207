import numpy as np
import pytest
from hypothesis import given, strategies as st

from linkprint.dataset import (OTHER, TARGET, LabeledDataset, SplitPair, is_baseline,
                               load_csv, make_open_world, normalize_minmax, normalize_pair,
                               save_csv, split_stratified, stratified_folds)
from linkprint.errors import (CsvLabelError, CsvNumericError, CsvWidthError,
                              DegenerateDataError, EmptyDatasetError, InvalidTargetError,
                              StratificationError, ValidationError)


def toy(n_per=10, classes=("A", "B", "C"), d=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.random((n_per * len(classes), d)) * 5 + 1
    labels = [c for c in classes for _ in range(n_per)]
    return LabeledDataset(X, labels)


def test_dataset_validation():
    with pytest.raises(ValidationError):
        LabeledDataset(np.zeros(3), ["a"] * 3)
    with pytest.raises(ValidationError):
        LabeledDataset(np.zeros((3, 2)), ["a"] * 2)
    with pytest.raises(ValidationError):
        LabeledDataset(np.zeros((1, 2)), ["a"], classes=("b",))
    ds = LabeledDataset(np.zeros((3, 2)), ["b", "a", "b"])
    assert ds.classes == ("b", "a")
    assert list(ds.y) == [0, 1, 0]


def test_normalize_uses_given_statistics():
    train = LabeledDataset(np.array([[1.0, 3.0], [5.0, 2.0]]), ["a", "b"])
    test = LabeledDataset(np.array([[0.0, 9.0], [3.0, 3.0]]), ["a", "b"])
    nt = normalize_minmax(train)
    assert nt.norm_meta == (1.0, 5.0)
    assert np.allclose(nt.features, [[0, 0.5], [1, 0.25]])
    ne = normalize_minmax(test, nt.norm_meta)
    # out-of-range test values are clamped
    assert np.allclose(ne.features, [[0, 1], [0.5, 0.5]])
    with pytest.raises(DegenerateDataError):
        normalize_minmax(LabeledDataset(np.ones((2, 2)), ["a", "b"]))


def test_normalize_pair_no_test_leakage():
    pair = split_stratified(toy(), 0.7, 1)
    scaled = normalize_pair(pair)
    lo, hi = pair.train.features.min(), pair.train.features.max()
    assert scaled.train.norm_meta == scaled.test.norm_meta == (lo, hi)


@given(st.integers(2, 30), st.floats(0.1, 0.9), st.integers(0, 1000))
def test_split_is_stratified_partition(n_per, frac, seed):
    ds = toy(n_per)
    pair = split_stratified(ds, frac, seed)
    ids = np.concatenate([pair.train.row_ids, pair.test.row_ids])
    assert sorted(ids.tolist()) == list(range(len(ds)))
    for c in ds.classes:
        n_train = pair.train.counts()[c]
        assert 1 <= n_train <= n_per - 1
        assert pair.test.counts()[c] == n_per - n_train


def test_split_fraction_and_seed():
    ds = toy(50)
    a = split_stratified(ds, 0.7, 3)
    b = split_stratified(ds, 0.7, 3)
    c = split_stratified(ds, 0.7, 4)
    assert len(a.train) == 105
    assert np.array_equal(a.train.row_ids, b.train.row_ids)
    assert not np.array_equal(a.train.row_ids, c.train.row_ids)
    with pytest.raises(StratificationError):
        split_stratified(LabeledDataset(np.zeros((3, 1)), ["a", "a", "b"]))


def test_duplicate_rows_survive_split():
    X = np.ones((6, 3))
    ds = LabeledDataset(X, ["a", "a", "a", "b", "b", "b"])
    pair = split_stratified(ds, 0.5, 0)
    assert len(pair.train) + len(pair.test) == 6


@given(st.integers(2, 10), st.integers(0, 100))
def test_folds_partition_and_balance(k, seed):
    ds = toy(12)
    folds = stratified_folds(ds, k, seed)
    assert sorted(np.concatenate(folds).tolist()) == list(range(len(ds)))
    for c in ds.classes:
        per_fold = [sum(ds.labels[i] == c for i in f) for f in folds]
        assert max(per_fold) - min(per_fold) <= 1


def test_open_world_relabel():
    pair = split_stratified(toy(10, ("A", "B", "C", "D")), 0.7, 0)
    ow = make_open_world(pair, "B", ("C",))
    assert ow.train.classes == (TARGET, OTHER)
    # C is gone from training but present (as OTHER) in test
    assert len(ow.train) == len(pair.train) - pair.train.counts()["C"]
    assert len(ow.test) == len(pair.test)
    assert ow.test.labels.count(TARGET) == pair.test.counts()["B"]
    with pytest.raises(InvalidTargetError):
        make_open_world(pair, "B", ("B",))
    with pytest.raises(InvalidTargetError):
        make_open_world(pair, "Z")


def test_open_world_warns_without_other():
    pair = split_stratified(toy(5, ("A", "B")), 0.6, 0)
    with pytest.warns(RuntimeWarning):
        make_open_world(pair, "A", ("B",))


def test_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(1)
    ds = LabeledDataset(rng.random((5, 3)) / 7, ["A", "B", "A", "C", "B"])
    path = tmp_path / "d.csv"
    save_csv(ds, path)
    back = load_csv(path)
    assert np.array_equal(back.features, ds.features)
    assert back.labels == ds.labels
    assert path.read_text().splitlines()[0] == "f0,f1,f2,label"


@pytest.mark.parametrize("text, exc, row", [
    ("", EmptyDatasetError, None),
    ("f0,f1,label\n", EmptyDatasetError, None),
    ("a,b,label\n1,2,A\n", CsvWidthError, 0),
    ("f0,f1,label\n1,2,A\n1,A\n", CsvWidthError, 2),
    ("f0,f1,label\n1,x,A\n", CsvNumericError, 1),
    ("f0,f1,label\n1,inf,A\n", CsvNumericError, 1),
    ("f0,f1,label\n1,2,\n", CsvLabelError, 1),
])
def test_csv_errors(tmp_path, text, exc, row):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(exc) as info:
        load_csv(path)
    if row is not None:
        assert info.value.row == row


def test_csv_schema_checks(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("f0,f1,label\n1,2,A\n")
    with pytest.raises(CsvWidthError):
        load_csv(path, n_features=3)
    with pytest.raises(CsvLabelError):
        load_csv(path, allowed_labels=("B",))
    path.write_text("f0,label\n1,NONE\n2,NONE\n")
    assert is_baseline(load_csv(path))
