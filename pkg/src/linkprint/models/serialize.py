"""Versioned plain-text model files.

Layout, one record per line::

    model-kind forest
    version 1
    classes ["A", "AW"]
    n-features 100
    meta {"n_trees": 100}
    array tree0.feature int64 7
    3 -1 12 -1 -1 ...
    ...
    end

Header values after the key are JSON, except `model-kind`. Every array
is a header line (name, dtype, comma-separated shape) followed by one line
of space-separated values. Floats are written with `repr`, the shortest
string that reads back to the same double, so a save/load round trip
reproduces every parameter bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ModelFormatError, ReportIOError
from .forest import ForestModel, ForestParams, SingleFeatureModel, Tree
from .nn import Conv1dModel, MlpModel
from .svm import PairMachine, SvmModel

FORMAT_VERSION = 1
_DTYPES = {"float64", "float32", "int64"}
_TREE_FIELDS = ("feature", "threshold", "left", "right", "value")


def _fmt_array(a):
    if a.dtype.kind == "f":
        return " ".join(repr(float(x)) for x in a.ravel())
    return " ".join(str(int(x)) for x in a.ravel())


def _encode(model):
    """(meta dict, [(name, array)]) for a trained model."""
    arrays = []
    if isinstance(model, ForestModel):
        p = model.params
        meta = {"n_trees": p.n_trees, "max_depth": p.max_depth, "max_features": p.max_features,
                "min_leaf": p.min_leaf, "bootstrap": p.bootstrap, "seed": model.seed}
        for i, t in enumerate(model.trees):
            arrays += [(f"tree{i}.{f}", getattr(t, f)) for f in _TREE_FIELDS]
    elif isinstance(model, SingleFeatureModel):
        meta = {"feature": model.feature}
        arrays += [(f"tree.{f}", getattr(model.tree, f)) for f in _TREE_FIELDS]
    elif isinstance(model, SvmModel):
        meta = {"gamma": model.gamma, "C": model.C,
                "machines": [[m.a, m.b, m.rho, m.residual, m.iterations]
                             for m in model.machines]}
        for k, m in enumerate(model.machines):
            arrays += [(f"machine{k}.support", m.support), (f"machine{k}.coef", m.coef)]
    elif isinstance(model, (MlpModel, Conv1dModel)):
        meta = {"params": list(model.params)}
        arrays += list(model.params.items())
        if isinstance(model, Conv1dModel):
            arrays += [("running_mean", model.running_mean), ("running_var", model.running_var)]
    else:
        raise ModelFormatError(f"cannot serialise {type(model).__name__}")
    return meta, arrays


def dumps(model):
    meta, arrays = _encode(model)
    lines = [f"model-kind {model.kind}", f"version {FORMAT_VERSION}",
             f"classes {json.dumps(list(model.classes))}",
             f"n-features {model.n_features}",
             f"meta {json.dumps(meta, sort_keys=True)}"]
    norm = getattr(model, "norm_meta", None)
    if norm is not None:
        # min-max statistics the model's training features were scaled with
        lines.append(f"normalization {json.dumps([float(v) for v in norm])}")
    for name, a in arrays:
        a = np.asarray(a)
        dtype = "int64" if a.dtype.kind in "iu" else str(a.dtype)
        lines.append(f"array {name} {dtype} {','.join(str(d) for d in a.shape)}")
        lines.append(_fmt_array(a))
    lines.append("end")
    return "\n".join(lines) + "\n"


def _parse(text):
    lines = text.split("\n")
    header, arrays = {}, {}
    i = 0
    try:
        while i < len(lines):
            line = lines[i]
            i += 1
            if line == "end":
                break
            if not line.strip():
                continue
            key, _, rest = line.partition(" ")
            if key == "array":
                name, dtype, shape = rest.split(" ")
                if dtype not in _DTYPES:
                    raise ModelFormatError(f"line {i}: unsupported dtype {dtype!r}")
                dims = tuple(int(d) for d in shape.split(",")) if shape else ()
                values = lines[i].split()
                i += 1
                if dtype == "int64":
                    a = np.array([int(v) for v in values], dtype=np.int64)
                else:
                    a = np.array([float(v) for v in values], dtype=np.float64).astype(dtype)
                arrays[name] = a.reshape(dims)
            elif key == "model-kind":
                header[key] = rest
            else:
                header[key] = json.loads(rest)
        else:
            raise ModelFormatError("missing 'end' line")
    except ModelFormatError:
        raise
    except (ValueError, IndexError) as exc:
        raise ModelFormatError(f"malformed model file near line {i}: {exc}") from None
    for key in ("model-kind", "version", "classes", "n-features", "meta"):
        if key not in header:
            raise ModelFormatError(f"missing header field {key!r}")
    if header["version"] != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {header['version']!r}")
    return header, arrays


def loads(text):
    header, arrays = _parse(text)
    model = _build(header, arrays)
    if "normalization" in header:
        model.norm_meta = tuple(header["normalization"])
    return model


def _build(header, arrays):
    kind, meta = header["model-kind"], header["meta"]
    classes, d = tuple(header["classes"]), int(header["n-features"])
    try:
        if kind == "forest":
            params = ForestParams(meta["n_trees"], meta["max_depth"], meta["max_features"],
                                  meta["min_leaf"], meta["bootstrap"])
            trees = [Tree(*(arrays[f"tree{i}.{f}"] for f in _TREE_FIELDS))
                     for i in range(meta["n_trees"])]
            return ForestModel(trees, classes, d, params, meta["seed"])
        if kind == "stump":
            tree = Tree(*(arrays[f"tree.{f}"] for f in _TREE_FIELDS))
            return SingleFeatureModel(tree, meta["feature"], classes, d)
        if kind == "svm":
            machines = [PairMachine(a, b, arrays[f"machine{k}.support"],
                                    arrays[f"machine{k}.coef"], rho, res, its)
                        for k, (a, b, rho, res, its) in enumerate(meta["machines"])]
            return SvmModel(machines, classes, d, meta["gamma"], meta["C"])
        if kind in ("mlp", "conv1d"):
            params = {k: arrays[k] for k in meta["params"]}
            if kind == "mlp":
                return MlpModel(params, classes, d)
            return Conv1dModel(params, classes, d, arrays["running_mean"],
                               arrays["running_var"])
    except KeyError as exc:
        raise ModelFormatError(f"{kind} model file lacks {exc}") from None
    raise ModelFormatError(f"unknown model kind {kind!r}")


def save_model(model, path):
    try:
        Path(path).write_text(dumps(model), encoding="utf-8", newline="\n")
    except OSError as exc:
        raise ReportIOError(f"cannot write model to {path}: {exc}") from exc


def load_model(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ReportIOError(f"cannot read model from {path}: {exc}") from exc
    return loads(text)
