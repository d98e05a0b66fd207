"""Shared classifier surface."""

import numpy as np

from ..errors import DegenerateModelError, ShapeError


class Classifier:
    """A trained model mapping feature rows to class codes.

    Subclasses implement `predict_index` on a 2-D array and set
    `classes` (tuple of codes; index order is label order) and
    `n_features`.
    """

    kind = "abstract"
    classes: tuple = ()
    n_features: int = 0

    def _check(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(f"expected rows of width {self.n_features}, got shape {X.shape}")
        return X

    def predict_index(self, X):
        raise NotImplementedError

    def predict(self, row):
        """Class code for a single feature row."""
        return self.classes[int(self.predict_index(self._check(row))[0])]

    def predict_batch(self, data):
        """Class codes for every row of a dataset or matrix."""
        X = data.features if hasattr(data, "features") else data
        return [self.classes[i] for i in self.predict_index(self._check(X))]


def require_two_classes(dataset):
    present = set(dataset.labels)
    if len(present) < 2:
        raise DegenerateModelError(
            f"training data has {len(present)} class(es); need at least 2")


def encode(dataset):
    """(X, y, classes) restricted to the classes present, in dataset order."""
    classes = tuple(c for c in dataset.classes if c in set(dataset.labels))
    index = {c: i for i, c in enumerate(classes)}
    y = np.array([index[s] for s in dataset.labels], dtype=np.int64)
    return dataset.features, y, classes
