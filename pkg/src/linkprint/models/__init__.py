"""Classifiers trained on trace corpora.

`train_model(family, train, seed)` dispatches on the family name;
`evaluate` and `cross_validate` score a family on held-out rows.
"""

from ..dataset import normalize_minmax
from ..errors import FoldError, ValidationError
from .base import Classifier
from .forest import (ForestModel, ForestParams, SingleFeatureModel, train_forest,
                     train_single_feature_baseline)
from .metrics import EvalMetrics, confusion_matrix, evaluate, metrics_from_confusion
from .nn import Conv1dModel, Conv1dParams, MlpModel, MlpParams, train_conv1d, train_mlp
from .projection import TsneParams, project_2d
from .svm import SvmModel, SvmParams, train_svm

FAMILIES = ("forest", "svm", "mlp", "conv1d")


def train_model(family, train, seed=0, params=None):
    """Train one model family on `train` with its default parameters."""
    if family == "forest":
        return train_forest(train, params, seed)
    if family == "svm":
        return train_svm(train, params)
    if family == "mlp":
        return train_mlp(train, params, seed)
    if family == "conv1d":
        return train_conv1d(train, params, seed)
    if family == "stump":
        return train_single_feature_baseline(train)
    raise ValidationError(f"unknown model family {family!r}")


def predict(model, row):
    return model.predict(row)


def predict_batch(model, data):
    return model.predict_batch(data)


def cross_validate(dataset, family, k=10, seed=0, params=None):
    """Per-fold metrics of stratified k-fold cross-validation.

    `dataset` holds raw (unnormalised) features; every round scales its
    training folds by their own min/max and the held-out fold by the same
    statistics.
    """
    from ..dataset import stratified_folds

    if k < 2:
        raise FoldError("k must be at least 2")
    small = {c: n for c, n in dataset.counts().items() if 0 < n < k}
    if small:
        raise FoldError(f"classes with fewer than {k} rows: {small}")
    folds = stratified_folds(dataset, k, seed)
    results = []
    for i, test_rows in enumerate(folds):
        train_rows = sorted(set(range(len(dataset))) - set(test_rows.tolist()))
        train = normalize_minmax(dataset.take(train_rows))
        test = normalize_minmax(dataset.take(test_rows), train.norm_meta)
        model = train_model(family, train, seed, params)
        results.append(evaluate(model, test))
    return results


__all__ = [
    "Classifier", "Conv1dModel", "Conv1dParams", "EvalMetrics", "FAMILIES", "ForestModel",
    "ForestParams", "MlpModel", "MlpParams", "SingleFeatureModel", "SvmModel", "SvmParams",
    "TsneParams", "confusion_matrix", "cross_validate", "evaluate", "metrics_from_confusion",
    "predict", "predict_batch", "project_2d", "train_conv1d", "train_forest", "train_mlp",
    "train_model", "train_single_feature_baseline", "train_svm",
]
