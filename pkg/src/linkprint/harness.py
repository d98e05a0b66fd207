"""End-to-end experiments: closed-world, open-world and parameter sweeps.

Each run is a pure function of its `ExperimentConfig`; every random
stream is derived from the config seed, so a report can be regenerated
from the config it echoes.
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, plots, rng as rngmod
from .config import DEFAULT_SWEEP_VALUES, config_to_ini, from_flat
from .dataset import (make_open_world, normalize_minmax, normalize_pair,
                      split_stratified)
from .errors import LinkprintError, ReportIOError, ValidationError
from .models import cross_validate, evaluate, project_2d, train_model
from .probe import collect_corpus
from .victims import ProfileSet, identical_profiles, resolve_profiles

STUMP_GATE = 0.40
FOREST_GATE = 0.85


# -- report types ------------------------------------------------------------

@dataclass
class SweepPoint:
    value: int
    model: str
    accuracies: list

    @property
    def mean(self):
        return float(np.mean(self.accuracies))

    @property
    def std(self):
        return float(np.std(self.accuracies))


@dataclass
class SweepCurve:
    axis: str
    points: list  # SweepPoint, value-major then model order
    fixed: dict  # the three probe parameters held at their configured values

    def series(self, model):
        return [(p.value, p.mean, p.std) for p in self.points if p.model == model]


@dataclass
class OpenWorldCell:
    target: str
    unknown_count: int
    accuracies: list
    unknown_sets: list

    @property
    def mean(self):
        return float(np.mean(self.accuracies))

    @property
    def std(self):
        return float(np.std(self.accuracies))


@dataclass
class Report:
    experiment_id: str
    scenario: str
    config: dict
    seeds: dict
    version: dict
    metrics: dict = field(default_factory=dict)  # model -> EvalMetrics
    baseline: object = None  # stump EvalMetrics (closed-world)
    cv: dict = field(default_factory=dict)  # model -> [EvalMetrics]
    curves: list = field(default_factory=list)
    open_world: list = field(default_factory=list)
    projection: object = None  # (points, labels)
    classes: tuple = ()

    @property
    def gate(self):
        """Nontriviality gate: forest above and single-feature tree below their bars."""
        if self.baseline is None or "forest" not in self.metrics:
            return None
        forest = self.metrics["forest"].accuracy
        stump = self.baseline.accuracy
        return {"forest_accuracy": forest, "stump_accuracy": stump,
                "forest_min": FOREST_GATE, "stump_max": STUMP_GATE,
                "passed": bool(forest >= FOREST_GATE and stump < STUMP_GATE)}

    def open_world_mean(self):
        return float(np.mean([c.mean for c in self.open_world])) if self.open_world else None

    def as_dict(self):
        out = {
            "experiment_id": self.experiment_id,
            "scenario": self.scenario,
            "version": self.version,
            "config": self.config,
            "seeds": self.seeds,
            "classes": list(self.classes),
        }
        if self.metrics:
            out["metrics"] = {m: e.as_dict() for m, e in self.metrics.items()}
        if self.baseline is not None:
            out["baseline"] = self.baseline.as_dict()
            out["gate"] = self.gate
        if self.cv:
            out["cv"] = {m: [e.accuracy for e in folds] for m, folds in self.cv.items()}
        if self.curves:
            out["curves"] = [{"axis": c.axis, "fixed": c.fixed,
                              "points": [{"value": p.value, "model": p.model, "mean": p.mean,
                                          "std": p.std, "accuracies": p.accuracies}
                                         for p in c.points]} for c in self.curves]
        if self.open_world:
            out["open_world"] = {
                "mean_accuracy": self.open_world_mean(),
                "cells": [{"target": c.target, "unknown_count": c.unknown_count,
                           "mean": c.mean, "std": c.std, "accuracies": c.accuracies,
                           "unknown_sets": c.unknown_sets} for c in self.open_world]}
        return out


# -- helpers -----------------------------------------------------------------

@contextlib.contextmanager
def _context(where):
    """Prefix errors raised inside the block with the experiment step."""
    try:
        yield
    except LinkprintError as exc:
        if exc.args:
            exc.args = (f"[{where}] {exc.args[0]}",) + exc.args[1:]
        raise


def load_profile_set(spec):
    """Profile set from a path, 'stock', or 'identical:<CODE>' (chance control)."""
    if isinstance(spec, ProfileSet):
        return spec
    if isinstance(spec, str) and spec.startswith("identical:"):
        code = spec.split(":", 1)[1]
        return identical_profiles(resolve_profiles("stock").by_code(code))
    return resolve_profiles(spec)


def _version(profiles):
    return {"tool": __version__, "profiles": profiles.version}


def _experiment_id(cfg):
    flat = dict(cfg.to_dict())
    flat.pop("experiment.jobs", None)  # parallelism never changes results
    return f"{cfg.scenario}-{from_flat(flat).digest()}"


def repetition_seed(seed, rep):
    return rngmod.derive_seed(seed, rngmod.REPETITION, rep)


def _prepare(cfg, profiles, probe, seed):
    """Corpus -> stratified split -> min-max scaling by training statistics."""
    with _context("corpus"):
        corpus = collect_corpus(cfg.link, profiles, probe, cfg.traces_per_class, seed)
    with _context("split"):
        pair = split_stratified(corpus, cfg.train_fraction, seed)
    return corpus, normalize_pair(pair)


def _map(fn, cells, jobs):
    if jobs > 1 and len(cells) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, cells))
    return [fn(c) for c in cells]


# -- closed world ------------------------------------------------------------

def run_closed_world(cfg, profiles=None):
    """Train every configured model on one corpus split and score it.

    Also trains the single-feature baseline tree for the nontriviality
    gate and, when `cv_folds` > 0, cross-validates the forest.
    """
    profiles = load_profile_set(profiles if profiles is not None else cfg.profiles)
    seed = cfg.seed
    corpus, pair = _prepare(cfg, profiles, cfg.probe, seed)
    report = Report(_experiment_id(cfg), "closed", cfg.to_dict(),
                    {"corpus": seed, "split": seed, "model": seed, "cv": seed},
                    _version(profiles), classes=corpus.classes)
    for name in cfg.models:
        with _context(f"train {name}"):
            model = train_model(name, pair.train, seed)
        report.metrics[name] = evaluate(model, pair.test)
    with _context("train stump"):
        report.baseline = evaluate(train_model("stump", pair.train, seed), pair.test)
    if cfg.cv_folds and "forest" in cfg.models:
        with _context("cross-validate forest"):
            report.cv["forest"] = cross_validate(corpus, "forest", cfg.cv_folds, seed)
    if cfg.projection != "none":
        with _context("projection"):
            scaled = normalize_minmax(corpus)
            points = project_2d(scaled, cfg.projection, seed=seed)
        report.projection = (points, corpus.labels)
        report.seeds["projection"] = seed
    return report


# -- open world --------------------------------------------------------------

def _open_cell(args):
    pair, target, unknown, model_seed = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        binary = make_open_world(pair, target, unknown)
    binary = normalize_pair(binary)
    model = train_model("forest", binary.train, model_seed)
    return evaluate(model, binary.test).accuracy


def run_open_world(cfg, profiles=None):
    """Binary target-vs-rest forests with some classes unseen in training.

    For each target and unknown count, every repetition draws a fresh
    unknown set (uniformly, never containing the target) from the other
    classes; those classes are removed from training but stay in the
    test set labelled OTHER.
    """
    profiles = load_profile_set(profiles if profiles is not None else cfg.profiles)
    seed = cfg.seed
    with _context("corpus"):
        corpus = collect_corpus(cfg.link, profiles, cfg.probe, cfg.traces_per_class, seed)
    with _context("split"):
        pair = split_stratified(corpus, cfg.train_fraction, seed)
    classes = corpus.classes
    targets = cfg.open_targets or classes
    for t in targets:
        if t not in classes:
            raise ValidationError(f"open-world target {t!r} is not a profile code")
    for k in cfg.unknown_counts:
        if k > len(classes) - 1:
            raise ValidationError(f"unknown count {k} exceeds n_classes - 1 = {len(classes) - 1}")
    cells, keys = [], []
    for t in targets:
        ti = classes.index(t)
        others = [c for c in classes if c != t]
        for k in cfg.unknown_counts:
            for rep in range(cfg.repetitions):
                draw = rngmod.generator(seed, rngmod.OPEN_WORLD, ti, k, rep)
                unknown = tuple(sorted((others[i] for i in draw.choice(len(others), k,
                                                                      replace=False)),
                                       key=classes.index))
                model_seed = rngmod.derive_seed(seed, rngmod.OPEN_WORLD, ti, k, rep)
                cells.append((pair, t, unknown, model_seed))
                keys.append((t, k, unknown))
    with _context("open-world"):
        accs = _map(_open_cell, cells, cfg.jobs)
    report = Report(_experiment_id(cfg), "open", cfg.to_dict(),
                    {"corpus": seed, "split": seed, "unknown_draw": seed, "model": "derived"},
                    _version(profiles), classes=classes)
    by_cell = {}
    for (t, k, unknown), acc in zip(keys, accs):
        cell = by_cell.setdefault((t, k), OpenWorldCell(t, k, [], []))
        cell.accuracies.append(acc)
        cell.unknown_sets.append(list(unknown))
    report.open_world = list(by_cell.values())
    return report


# -- sweeps ------------------------------------------------------------------

def _sweep_cell(args):
    cfg, profiles, axis, value, rep = args
    seed = repetition_seed(cfg.seed, rep)
    _, pair = _prepare(cfg, profiles, cfg.probe_for(axis, value), seed)
    out = []
    for name in cfg.models:
        with _context(f"{axis}={value} rep {rep} train {name}"):
            model = train_model(name, pair.train, seed)
        out.append(evaluate(model, pair.test).accuracy)
    return out


def run_sweep(cfg, profiles=None, axes=None):
    """Accuracy curves over one or more probe parameters.

    Every (axis value, repetition) cell collects a fresh corpus on the
    sweep subset of profiles; repetition r uses the same derived seed at
    every axis value, so curve points differ only by the swept parameter.
    The other three probe parameters stay at their configured values.
    """
    base = load_profile_set(profiles if profiles is not None else cfg.profiles)
    subset = base.subset(cfg.sweep_subset) if cfg.sweep_subset else base
    axes = (cfg.sweep_axis,) if axes is None else tuple(axes)
    report = Report(_experiment_id(cfg), "sweep", cfg.to_dict(),
                    {"repetitions": {str(r): repetition_seed(cfg.seed, r)
                                     for r in range(cfg.repetitions)}},
                    _version(base), classes=subset.codes)
    for axis in axes:
        values = cfg.axis_values if axis == cfg.sweep_axis else DEFAULT_SWEEP_VALUES[axis]
        cells = [(cfg, subset, axis, v, r) for v in values for r in range(cfg.repetitions)]
        results = _map(_sweep_cell, cells, cfg.jobs)
        fixed = {a: v for a, v in _probe_axes(cfg.probe).items() if a != axis}
        points = []
        for vi, v in enumerate(values):
            rows = results[vi * cfg.repetitions:(vi + 1) * cfg.repetitions]
            for mi, name in enumerate(cfg.models):
                points.append(SweepPoint(int(v), name, [r[mi] for r in rows]))
        report.curves.append(SweepCurve(axis, points, fixed))
    return report


def _probe_axes(probe):
    return {"access_num": probe.access_num, "repeat_num": probe.repeat_num,
            "buffer_size": probe.buffer_size_bytes, "buffer_num": probe.buffer_num}


def run(cfg, profiles=None):
    if cfg.scenario == "closed":
        return run_closed_world(cfg, profiles)
    if cfg.scenario == "open":
        return run_open_world(cfg, profiles)
    return run_sweep(cfg, profiles)


# -- output ------------------------------------------------------------------

def _num(x):
    return repr(float(x))


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def confusion_csv(metrics):
    classes = list(metrics.classes)
    rows = [[c] + [int(v) for v in metrics.confusion[i]] for i, c in enumerate(classes)]
    return _csv_text(["true\\pred"] + classes, rows)


def report_files(report):
    """Mapping of file name -> text for every artifact of `report`."""
    files = {"report.json": json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n",
             # rerun with `linkprint <scenario> --config config.ini`
             "config.ini": config_to_ini(from_flat(report.config))}
    if report.metrics:
        first = next(iter(report.metrics))
        files["confusion.csv"] = confusion_csv(report.metrics[first])
        for name, m in report.metrics.items():
            files[f"confusion_{name}.csv"] = confusion_csv(m)
        rows = [[name, _num(m.accuracy), _num(m.precision), _num(m.recall), _num(m.f1)]
                for name, m in report.metrics.items()]
        if report.baseline is not None:
            b = report.baseline
            rows.append(["stump", _num(b.accuracy), _num(b.precision), _num(b.recall),
                         _num(b.f1)])
        files["metrics.csv"] = _csv_text(["model", "accuracy", "precision", "recall", "f1"],
                                         rows)
    if report.cv:
        rows = [[name, i, _num(m.accuracy), _num(m.f1)]
                for name, folds in report.cv.items() for i, m in enumerate(folds)]
        files["cv.csv"] = _csv_text(["model", "fold", "accuracy", "f1"], rows)
        files["cv.svg"] = plots.strip_chart(
            {name: [m.accuracy for m in folds] for name, folds in report.cv.items()},
            title="Cross-validation accuracy", ylabel="accuracy")
    if report.projection is not None:
        points, labels = report.projection
        files["projection.csv"] = _csv_text(
            ["x", "y", "label"], [[_num(x), _num(y), lab] for (x, y), lab in zip(points, labels)])
        files["projection.svg"] = plots.scatter(points, labels, title="2-D projection")
    if report.curves:
        rows = [[c.axis, p.value, p.model, _num(p.mean), _num(p.std)]
                for c in report.curves for p in c.points]
        files["curves.csv"] = _csv_text(["axis", "value", "model", "mean", "std"], rows)
        for c in report.curves:
            models = list(dict.fromkeys(p.model for p in c.points))
            files[f"curves_{c.axis}.svg"] = plots.line_chart(
                {m: [(v, mean) for v, mean, _ in c.series(m)] for m in models},
                title=f"Accuracy vs {c.axis}", xlabel=c.axis, ylabel="accuracy", logx=True)
    if report.open_world:
        rows = [[c.target, c.unknown_count, _num(c.mean), _num(c.std), len(c.accuracies)]
                for c in report.open_world]
        files["open_world.csv"] = _csv_text(
            ["target", "unknown_count", "mean", "std", "repetitions"], rows)
        counts = sorted({c.unknown_count for c in report.open_world})
        files["open_world.svg"] = plots.line_chart(
            {f"unknown={k}": [(i, c.mean) for i, c in enumerate(
                [c for c in report.open_world if c.unknown_count == k])] for k in counts},
            title="Open-world accuracy per target", xlabel="target index", ylabel="accuracy",
            xticks=list(dict.fromkeys(c.target for c in report.open_world)))
    return files


def emit_report(report, out_dir):
    """Write every artifact of `report` into `out_dir`; returns the paths."""
    out = Path(out_dir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in report_files(report).items():
            path = out / name
            path.write_text(text, encoding="utf-8", newline="\n")
            written.append(path)
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {out}: {exc}") from exc
    return written
