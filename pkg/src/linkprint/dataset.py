"""Trace corpora: normalisation, splits, open-world relabelling, CSV."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import rng as rngmod
from .errors import (CsvLabelError, CsvNumericError, CsvWidthError,
                     DegenerateDataError, EmptyDatasetError, InvalidTargetError,
                     StratificationError, ValidationError)
from .victims import NONE_CODE

TARGET = "TARGET"
OTHER = "OTHER"


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix plus one class code per row.

    `classes` fixes the label order (index 0..n-1) used by every model;
    by default it is the order of first appearance. `row_ids` tracks row
    identity through splits.
    """

    features: np.ndarray
    labels: tuple
    classes: tuple = ()
    norm_meta: Optional[tuple] = None
    row_ids: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim != 2:
            raise ValidationError("features must be a 2-D matrix")
        labels = tuple(str(s) for s in self.labels)
        if len(labels) != X.shape[0]:
            raise ValidationError(f"{X.shape[0]} rows but {len(labels)} labels")
        classes = tuple(self.classes) if self.classes else tuple(dict.fromkeys(labels))
        unknown = set(labels) - set(classes)
        if unknown:
            raise ValidationError(f"labels {sorted(unknown)} missing from classes")
        ids = (np.arange(X.shape[0]) if self.row_ids is None
               else np.asarray(self.row_ids, dtype=np.int64))
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "row_ids", ids)

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def y(self):
        """Labels as class indices."""
        index = {c: i for i, c in enumerate(self.classes)}
        return np.array([index[s] for s in self.labels], dtype=np.int64)

    def take(self, rows):
        rows = np.asarray(rows, dtype=np.int64)
        return LabeledDataset(self.features[rows], tuple(self.labels[i] for i in rows),
                              self.classes, self.norm_meta, self.row_ids[rows])

    def class_rows(self, code):
        return np.array([i for i, s in enumerate(self.labels) if s == code], dtype=np.int64)

    def counts(self):
        return {c: sum(1 for s in self.labels if s == c) for c in self.classes}


@dataclass(frozen=True)
class SplitPair:
    train: LabeledDataset
    test: LabeledDataset
    split_seed: int


# -- normalisation -----------------------------------------------------------

def normalize_minmax(dataset, meta=None):
    """Global min-max scaling into [0, 1].

    Without `meta` the statistics come from `dataset` itself. With `meta`
    (a (min, max) pair, normally the training set's) values are scaled
    with it and clamped to [0, 1].
    """
    if len(dataset) == 0:
        raise DegenerateDataError("cannot normalise an empty dataset")
    X = dataset.features
    if meta is None:
        lo, hi = float(X.min()), float(X.max())
        if not hi > lo:
            raise DegenerateDataError(f"constant dataset (min = max = {lo})")
        Z = (X - lo) / (hi - lo)
    else:
        lo, hi = float(meta[0]), float(meta[1])
        if not hi > lo:
            raise DegenerateDataError("normalisation meta has max <= min")
        Z = (X - lo) / (hi - lo)
    Z = np.clip(Z, 0.0, 1.0)
    return replace(dataset, features=Z, norm_meta=(lo, hi))


def normalize_pair(pair):
    """Scale train by its own statistics and test by the train statistics."""
    train = normalize_minmax(pair.train)
    test = normalize_minmax(pair.test, train.norm_meta)
    return SplitPair(train, test, pair.split_seed)


# -- splitting ---------------------------------------------------------------

def split_stratified(dataset, train_fraction=0.7, seed=0):
    if not 0 < train_fraction < 1:
        raise ValidationError("train_fraction must lie in (0, 1)")
    rng = rngmod.generator(seed, rngmod.SPLIT)
    train_rows, test_rows = [], []
    for code in dataset.classes:
        rows = dataset.class_rows(code)
        if len(rows) == 0:
            continue
        if len(rows) < 2:
            raise StratificationError(f"class {code!r} has fewer than 2 rows")
        rows = rows[rng.permutation(len(rows))]
        n_train = min(len(rows) - 1, math.ceil(train_fraction * len(rows) - 1e-9))
        train_rows.extend(rows[:n_train])
        test_rows.extend(rows[n_train:])
    return SplitPair(dataset.take(sorted(train_rows)), dataset.take(sorted(test_rows)),
                     seed)


def stratified_folds(dataset, k, seed):
    """Assign each row to one of `k` folds, each class spread round-robin."""
    rng = rngmod.generator(seed, rngmod.CV)
    fold_of = np.empty(len(dataset), dtype=np.int64)
    offset = 0
    for code in dataset.classes:
        rows = dataset.class_rows(code)
        if len(rows) == 0:
            continue
        rows = rows[rng.permutation(len(rows))]
        fold_of[rows] = (np.arange(len(rows)) + offset) % k
        offset += len(rows)
    return [np.flatnonzero(fold_of == f) for f in range(k)]


def make_open_world(pair, target_code, unknown_codes=()):
    """Binary TARGET/OTHER relabelling; unknown classes vanish from train only."""
    unknown = set(unknown_codes)
    if target_code in unknown:
        raise InvalidTargetError(f"target {target_code!r} is also marked unknown")
    for part in (pair.train, pair.test):
        if target_code not in part.labels:
            raise InvalidTargetError(f"target {target_code!r} absent from a partition")

    def relabel(ds, drop):
        keep = [i for i, s in enumerate(ds.labels) if not (drop and s in unknown)]
        sub = ds.take(keep)
        labels = tuple(TARGET if s == target_code else OTHER for s in sub.labels)
        return LabeledDataset(sub.features, labels, (TARGET, OTHER), sub.norm_meta,
                              sub.row_ids)

    train = relabel(pair.train, True)
    if OTHER not in train.labels:
        warnings.warn("open-world training set holds only the target class",
                      RuntimeWarning, stacklevel=2)
    return SplitPair(train, relabel(pair.test, False), pair.split_seed)


# -- CSV ---------------------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def dataset_to_csv_text(dataset):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"f{i}" for i in range(dataset.n_features)] + ["label"])
    for row, label in zip(dataset.features, dataset.labels):
        w.writerow([_fmt(x) for x in row] + [label])
    return buf.getvalue()


def save_csv(dataset, path):
    Path(path).write_text(dataset_to_csv_text(dataset), encoding="utf-8", newline="\n")


def load_csv(path, n_features=None, allowed_labels=None):
    """Read a corpus CSV written by `save_csv`.

    `n_features` and `allowed_labels` are optional schema checks. Every
    malformed row raises a distinct `CsvFormatError` subclass carrying its
    1-based data row number.
    """
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not any(rows):
        raise EmptyDatasetError("empty dataset file")
    header = rows[0]
    if not header or header[-1] != "label":
        raise CsvWidthError("header must end with 'label'", 0)
    width = len(header)
    expected = [f"f{i}" for i in range(width - 1)]
    if header[:-1] != expected:
        raise CsvWidthError("header must read f0..f{N-1},label", 0)
    if n_features is not None and width - 1 != n_features:
        raise CsvWidthError(f"header has {width - 1} features, expected {n_features}", 0)
    allowed = None if allowed_labels is None else set(allowed_labels)
    feats, labels = [], []
    for r, row in enumerate(rows[1:], start=1):
        if not row:
            continue
        if len(row) != width:
            raise CsvWidthError(f"{len(row)} cells, expected {width}", r)
        label = row[-1].strip()
        if not label or (allowed is not None and label not in allowed):
            raise CsvLabelError(f"unknown label {label!r}", r)
        try:
            values = [float(c) for c in row[:-1]]
        except ValueError:
            raise CsvNumericError("non-numeric cell", r) from None
        if not all(math.isfinite(v) for v in values):
            raise CsvNumericError("non-finite cell", r)
        feats.append(values)
        labels.append(label)
    if not feats:
        raise EmptyDatasetError("dataset has a header but no rows")
    return LabeledDataset(np.array(feats, dtype=float), tuple(labels))


def is_baseline(dataset):
    return set(dataset.labels) == {NONE_CODE}
