"""Command-line entry point: ``linkprint <command> [options]``.

Exit codes: 0 success, 2 usage (bad flag, missing config file),
3 validation, 4 runtime or convergence failure, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import KEYS, SWEEP_AXES, ExperimentConfig, load_config
from .dataset import LabeledDataset, load_csv, normalize_minmax, save_csv, split_stratified
from .errors import ConfigError, LinkprintError, ReportIOError, ValidationError
from .harness import (confusion_csv, emit_report, load_profile_set, run_closed_world,
                      run_open_world, run_sweep)
from .models import evaluate, project_2d, train_model
from .models.serialize import load_model, save_model
from .plots import scatter
from .probe import collect_corpus, collect_trace
from .victims import NONE_CODE, stock_profiles

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4, 5

# short flags for the most used keys
ALIASES = {
    "access_num": ("probe.access_num", "accesses per kernel launch (default 1000)"),
    "repeat_num": ("probe.repeat_num", "launches averaged per trace point (default 10)"),
    "buffer_size": ("probe.buffer_size", "bytes per access (default 4)"),
    "buffer_num": ("probe.buffer_num", "trace points per trace (default 100)"),
    "seed": ("experiment.seed", "global seed (default 0)"),
    "jobs": ("experiment.jobs", "cap on parallel experiment cells (default 1)"),
}


class UsageError(Exception):
    pass


def _add_common(p):
    p.add_argument("--config", help="INI config file; flags override its values")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    for name, (dotted, text) in ALIASES.items():
        p.add_argument(f"--{name.replace('_', '-')}", dest=f"alias_{name}", metavar="N",
                       help=text)
    group = p.add_argument_group("config overrides (one per config key)")
    for spec in KEYS:
        group.add_argument(spec.flag, dest=f"key_{spec.section}_{spec.key}", metavar="V",
                           help=f"{spec.help} [{spec.dotted}]")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="linkprint",
        description="Simulated fingerprinting of co-located accelerators from "
                    "shared-link contention traces.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("simulate", help="collect probe traces into a CSV")
    _add_common(p)
    p.add_argument("--victim", default="none",
                   help="profile code to run beside the probe, or 'none' (default)")
    p.add_argument("--traces", type=int, default=1, help="number of traces (default 1)")

    p = sub.add_parser("train", help="train one model and save it")
    _add_common(p)
    p.add_argument("--model", default="forest",
                   choices=("forest", "svm", "mlp", "conv1d", "stump"))
    p.add_argument("--data", help="corpus CSV; without it a corpus is simulated and split")

    p = sub.add_parser("eval", help="score a saved model on a corpus CSV")
    _add_common(p)
    p.add_argument("--model-file", required=True, help="model written by 'train'")
    p.add_argument("--data", required=True, help="corpus CSV with raw trace points")

    sub_help = {"closed-world": "closed-world n-way classification experiment",
                "open-world": "target-vs-rest experiment with unseen classes",
                "sweep": "accuracy curves over a probe parameter"}
    for name, text in sub_help.items():
        p = sub.add_parser(name, help=text)
        _add_common(p)
        if name == "sweep":
            p.add_argument("--param", default=None,
                           help="axis to sweep: access-num, repeat-num, buffer-size, "
                                "buffer-num, or 'all'")
            p.add_argument("--values", default=None,
                           help="comma-separated increasing axis values")
        if name == "open-world":
            p.add_argument("--target", default=None, help="target class (default: every class)")
            p.add_argument("--unknown", default=None,
                           help="comma-separated unknown-class counts (default 4)")

    p = sub.add_parser("project", help="2-D projection of a corpus")
    _add_common(p)
    p.add_argument("--method", default="tsne", choices=("pca", "tsne"))
    p.add_argument("--data", help="corpus CSV; without it a corpus is simulated")

    sub.add_parser("version", help="print tool and asset versions")
    return parser


def effective_config(args):
    """Config file (or defaults) with every given flag applied on top."""
    if args.config:
        if not Path(args.config).is_file():
            raise UsageError(f"config file not found: {args.config}")
        cfg = load_config(args.config)
    else:
        cfg = ExperimentConfig()
    flat = {}
    for spec in KEYS:
        value = getattr(args, f"key_{spec.section}_{spec.key}", None)
        if value is not None:
            flat[spec.dotted] = value
    for name, (dotted, _) in ALIASES.items():
        value = getattr(args, f"alias_{name}", None)
        if value is not None:
            flat[dotted] = value
    return cfg.with_overrides(flat) if flat else cfg


def _write(path, text):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc}") from exc


def _load_data(path):
    try:
        return load_csv(path)
    except OSError as exc:
        raise ReportIOError(f"cannot read {path}: {exc}") from exc


def cmd_simulate(args, cfg):
    profiles = load_profile_set(cfg.profiles)
    if args.traces < 1:
        raise ValidationError("--traces must be >= 1")
    if args.victim.lower() == "none":
        profile, ci = None, 0
    else:
        profile = profiles.by_code(args.victim)
        ci = profiles.codes.index(args.victim)
    rows = [collect_trace(cfg.link, profile, cfg.probe, cfg.seed, ci, t)
            for t in range(args.traces)]
    ds = LabeledDataset(np.vstack([r.points for r in rows]), [r.label for r in rows])
    out = Path(args.out)
    name = "baseline.csv" if profile is None else f"trace_{profile.code}.csv"
    try:
        out.mkdir(parents=True, exist_ok=True)
        save_csv(ds, out / name)
    except OSError as exc:
        raise ReportIOError(f"cannot write {out / name}: {exc}") from exc
    print(out / name)


def cmd_train(args, cfg):
    out = Path(args.out)
    if args.data:
        train = _load_data(args.data)
    else:
        corpus = collect_corpus(cfg.link, load_profile_set(cfg.profiles), cfg.probe,
                                cfg.traces_per_class, cfg.seed)
        pair = split_stratified(corpus, cfg.train_fraction, cfg.seed)
        train = pair.train
        try:
            out.mkdir(parents=True, exist_ok=True)
            save_csv(pair.train, out / "train.csv")
            save_csv(pair.test, out / "test.csv")
        except OSError as exc:
            raise ReportIOError(f"cannot write corpus to {out}: {exc}") from exc
    train = normalize_minmax(train)
    model = train_model(args.model, train, cfg.seed)
    model.norm_meta = train.norm_meta
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportIOError(f"cannot create {out}: {exc}") from exc
    save_model(model, out / f"{args.model}.model")
    print(out / f"{args.model}.model")


def cmd_eval(args, cfg):
    model = load_model(args.model_file)
    data = _load_data(args.data)
    meta = getattr(model, "norm_meta", None)
    data = normalize_minmax(data, meta)
    m = evaluate(model, data)
    out = Path(args.out)
    _write(out / "metrics.json", json.dumps(m.as_dict(), indent=2, sort_keys=True) + "\n")
    _write(out / "confusion.csv", confusion_csv(m))
    print(f"accuracy {m.accuracy:.4f}  f1 {m.f1:.4f}")


def _summarise(report):
    if report.metrics:
        for name, m in report.metrics.items():
            print(f"{name:8s} accuracy {m.accuracy:.4f}  f1 {m.f1:.4f}")
        if report.gate:
            g = report.gate
            print(f"stump    accuracy {g['stump_accuracy']:.4f}  gate "
                  f"{'passed' if g['passed'] else 'FAILED'}")
    if report.open_world:
        print(f"open-world mean accuracy {report.open_world_mean():.4f}")
    for c in report.curves:
        for p in c.points:
            print(f"{c.axis}={p.value:<6d} {p.model:8s} {p.mean:.4f} +- {p.std:.4f}")


def _finish(report, args):
    for path in emit_report(report, args.out):
        print(path)
    _summarise(report)


def cmd_closed(args, cfg):
    _finish(run_closed_world(cfg.with_overrides({"experiment.scenario": "closed"})), args)


def cmd_open(args, cfg):
    flat = {"experiment.scenario": "open"}
    if args.target:
        flat["open.targets"] = args.target
    if args.unknown:
        flat["open.unknown_counts"] = args.unknown
    _finish(run_open_world(cfg.with_overrides(flat)), args)


def cmd_sweep(args, cfg):
    flat = {"experiment.scenario": "sweep"}
    axes = None
    if args.param == "all":
        if args.values:
            raise UsageError("--values cannot be combined with --param all")
        axes = SWEEP_AXES
    elif args.param:
        axis = args.param.replace("-", "_")
        if axis not in SWEEP_AXES:
            raise UsageError(f"unknown sweep parameter {args.param!r}")
        flat["sweep.axis"] = axis
        flat["sweep.values"] = ""
    if args.values:
        flat["sweep.values"] = args.values
    _finish(run_sweep(cfg.with_overrides(flat), axes=axes), args)


def cmd_project(args, cfg):
    if args.data:
        data = _load_data(args.data)
    else:
        data = collect_corpus(cfg.link, load_profile_set(cfg.profiles), cfg.probe,
                              cfg.traces_per_class, cfg.seed)
    scaled = normalize_minmax(data)
    points = project_2d(scaled, args.method, seed=cfg.seed)
    rows = ["x,y,label"] + [f"{float(x)!r},{float(y)!r},{lab}"
                            for (x, y), lab in zip(points, data.labels)]
    out = Path(args.out)
    _write(out / "projection.csv", "\n".join(rows) + "\n")
    _write(out / "projection.svg", scatter(points, data.labels, title=f"{args.method} projection"))
    print(out / "projection.csv")


def cmd_version(args, cfg):
    print(f"linkprint {__version__}")
    print(f"stock profiles victims8 version {stock_profiles().version}")
    print(f"kernels {kernels.BACKEND}")


COMMANDS = {
    "simulate": cmd_simulate, "train": cmd_train, "eval": cmd_eval,
    "closed-world": cmd_closed, "open-world": cmd_open, "sweep": cmd_sweep,
    "project": cmd_project, "version": cmd_version,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        cfg = effective_config(args) if args.command != "version" else None
        COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"linkprint: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, ConfigError) as exc:
        print(f"linkprint: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ReportIOError, OSError) as exc:
        print(f"linkprint: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except LinkprintError as exc:
        print(f"linkprint: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if args.command not in ("version",):
        print(f"done in {time.perf_counter() - start:.1f}s", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
