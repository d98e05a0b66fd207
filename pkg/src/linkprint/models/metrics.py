"""Confusion matrices and macro-averaged scores."""

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class EvalMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: np.ndarray  # rows = true class, columns = predicted class
    classes: tuple

    def as_dict(self):
        return {"accuracy": self.accuracy, "precision": self.precision,
                "recall": self.recall, "f1": self.f1, "classes": list(self.classes),
                "confusion": self.confusion.tolist()}


def confusion_matrix(true, pred, classes):
    index = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(true, pred):
        cm[index[t], index[p]] += 1
    return cm


def metrics_from_confusion(cm, classes=None):
    """Scores from a confusion matrix, macro-averaged over classes with true rows.

    A class that is never predicted has precision 0.
    """
    cm = np.asarray(cm, dtype=np.int64)
    n = len(cm)
    classes = tuple(classes) if classes is not None else tuple(range(n))
    total = cm.sum()
    tp = np.diag(cm).astype(float)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    present = support > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        prec = np.where(predicted > 0, tp / np.maximum(predicted, 1), 0.0)
        rec = np.where(support > 0, tp / np.maximum(support, 1), 0.0)
        f1 = np.where(prec + rec > 0, 2 * prec * rec / np.where(prec + rec > 0, prec + rec, 1), 0.0)
    return EvalMetrics(
        accuracy=float(tp.sum() / total) if total else 0.0,
        precision=float(prec[present].mean()),
        recall=float(rec[present].mean()),
        f1=float(f1[present].mean()),
        confusion=cm,
        classes=classes,
    )


def evaluate(model, test):
    """Score `model` on a labelled dataset."""
    if len(test) == 0:
        raise ValidationError("empty test set")
    pred = model.predict_batch(test)
    classes = tuple(model.classes) + tuple(c for c in test.classes
                                           if c not in model.classes and c in test.labels)
    return metrics_from_confusion(confusion_matrix(test.labels, pred, classes), classes)
