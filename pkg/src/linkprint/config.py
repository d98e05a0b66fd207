"""Experiment configuration: dataclass, INI files and flat overrides.

Config files are sectioned ``key = value`` text read with `configparser`.
Every key is addressable as ``section.key``; the CLI exposes each one as
``--section-key``.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from io import StringIO
from pathlib import Path

from .errors import ConfigError, ValidationError
from .linksim import LinkConfig
from .probe import ProbeConfig

SCENARIOS = ("closed", "open", "sweep")
SWEEP_AXES = ("access_num", "repeat_num", "buffer_size", "buffer_num")
DEFAULT_SWEEP_VALUES = {
    "access_num": (250, 500, 1000, 2000, 4000),
    "repeat_num": (1, 5, 10, 20, 50),
    "buffer_size": (1, 2, 4, 8, 16),
    "buffer_num": (50, 100, 200, 400, 800),
}
SWEEP_SUBSET = ("A", "AW", "F", "M", "C", "V")
MODEL_NAMES = ("forest", "svm", "mlp", "conv1d")
PROJECTIONS = ("none", "pca", "tsne")


def _int_tuple(text):
    return tuple(int(v) for v in _str_tuple(text))


def _str_tuple(text):
    if isinstance(text, (tuple, list)):
        return tuple(text)
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    link: LinkConfig = field(default_factory=LinkConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    profiles: str = "stock"
    scenario: str = "closed"
    traces_per_class: int = 50
    seed: int = 0
    models: tuple = MODEL_NAMES
    train_fraction: float = 0.7
    cv_folds: int = 10
    repetitions: int = 5
    projection: str = "none"
    jobs: int = 1
    open_targets: tuple = ()  # empty means every class
    unknown_counts: tuple = (4,)
    sweep_axis: str = "repeat_num"
    sweep_values: tuple = ()  # empty means the axis defaults
    sweep_subset: tuple = SWEEP_SUBSET

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValidationError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.traces_per_class < 2:
            raise ValidationError("traces_per_class must be >= 2")
        bad = [m for m in self.models if m not in MODEL_NAMES]
        if bad or not self.models:
            raise ValidationError(f"models must be a non-empty subset of {MODEL_NAMES}")
        if len(set(self.models)) != len(self.models):
            raise ValidationError("models listed twice")
        if not 0 < self.train_fraction < 1:
            raise ValidationError("train_fraction must lie in (0, 1)")
        if self.cv_folds < 0 or self.cv_folds == 1:
            raise ValidationError("cv_folds must be 0 (off) or >= 2")
        if self.repetitions < 1:
            raise ValidationError("repetitions must be >= 1")
        if self.projection not in PROJECTIONS:
            raise ValidationError(f"projection must be one of {PROJECTIONS}")
        if self.jobs < 1:
            raise ValidationError("jobs must be >= 1")
        if any(k < 0 for k in self.unknown_counts) or not self.unknown_counts:
            raise ValidationError("unknown counts must be non-negative")
        if self.sweep_axis not in SWEEP_AXES:
            raise ValidationError(f"sweep axis must be one of {SWEEP_AXES}")
        values = self.axis_values
        if any(v <= 0 for v in values):
            raise ValidationError("sweep values must be positive")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValidationError("sweep values must be strictly increasing")

    @property
    def axis_values(self):
        return tuple(self.sweep_values) or DEFAULT_SWEEP_VALUES[self.sweep_axis]

    def probe_for(self, axis, value):
        """The probe config with one axis changed, the others untouched."""
        key = "buffer_size_bytes" if axis == "buffer_size" else axis
        return self.probe.replace(**{key: int(value)})

    def to_dict(self):
        """Flat ``section.key -> value`` echo, the inverse of `from_flat`."""
        out = {}
        for spec in KEYS:
            out[spec.dotted] = spec.get(self)
        return out

    def digest(self):
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def with_overrides(self, flat):
        return from_flat({**self.to_dict(), **flat})


@dataclass(frozen=True)
class _Key:
    section: str
    key: str
    attr: str  # "link.x", "probe.x" or plain attribute
    parse: object
    help: str = ""

    @property
    def dotted(self):
        return f"{self.section}.{self.key}"

    @property
    def flag(self):
        return f"--{self.section}-{self.key.replace('_', '-')}"

    def get(self, cfg):
        obj, _, name = self.attr.rpartition(".")
        target = getattr(cfg, obj) if obj else cfg
        value = getattr(target, name)
        return list(value) if isinstance(value, tuple) else value


KEYS = (
    _Key("link", "capacity_bytes_per_us", "link.capacity_bytes_per_us", float,
         "link capacity in bytes per microsecond"),
    _Key("link", "launch_overhead_us", "link.launch_overhead_us", float,
         "fixed cost of one probe kernel launch"),
    _Key("link", "noise_sigma_rel", "link.noise_sigma_rel", float,
         "relative std-dev of per-launch timing noise"),
    _Key("link", "seed", "link.seed", int, "link seed (reserved)"),
    _Key("probe", "access_num", "probe.access_num", int, "accesses per kernel launch"),
    _Key("probe", "repeat_num", "probe.repeat_num", int, "launches averaged per trace point"),
    _Key("probe", "buffer_size", "probe.buffer_size_bytes", int, "bytes per access"),
    _Key("probe", "buffer_num", "probe.buffer_num", int, "trace points per trace"),
    _Key("experiment", "profiles", "profiles", str,
         "victim profile file, 'stock', or 'identical:<CODE>'"),
    _Key("experiment", "scenario", "scenario", str, "closed, open or sweep"),
    _Key("experiment", "traces_per_class", "traces_per_class", int, "traces per victim class"),
    _Key("experiment", "seed", "seed", int, "global seed"),
    _Key("experiment", "models", "models", _str_tuple, "comma-separated model families"),
    _Key("experiment", "train_fraction", "train_fraction", float, "stratified train share"),
    _Key("experiment", "cv_folds", "cv_folds", int, "forest cross-validation folds (0 = off)"),
    _Key("experiment", "repetitions", "repetitions", int, "repetitions for averaging"),
    _Key("experiment", "projection", "projection", str, "none, pca or tsne"),
    _Key("experiment", "jobs", "jobs", int, "parallel experiment cells"),
    _Key("open", "targets", "open_targets", _str_tuple, "target classes (empty = all)"),
    _Key("open", "unknown_counts", "unknown_counts", _int_tuple,
         "numbers of classes withheld from training"),
    _Key("sweep", "axis", "sweep_axis", str, "probe parameter to sweep"),
    _Key("sweep", "values", "sweep_values", _int_tuple, "axis values (empty = defaults)"),
    _Key("sweep", "subset", "sweep_subset", _str_tuple, "profile codes used by the sweep"),
)
KEY_INDEX = {k.dotted: k for k in KEYS}


def from_flat(flat):
    """Build a config from ``section.key -> value`` pairs (strings or typed)."""
    link, probe, top = {}, {}, {}
    for dotted, raw in flat.items():
        spec = KEY_INDEX.get(dotted)
        if spec is None:
            raise ConfigError(f"unknown config key {dotted!r}")
        try:
            value = spec.parse(raw) if not isinstance(raw, list) else spec.parse(tuple(raw))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{dotted}: {exc}") from None
        obj, _, name = spec.attr.rpartition(".")
        {"link": link, "probe": probe, "": top}[obj][name] = value
    try:
        return ExperimentConfig(link=LinkConfig(**link), probe=ProbeConfig(**probe), **top)
    except ValidationError:
        raise
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path):
    """Read an INI config file; missing keys keep their defaults."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    flat = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            flat[f"{section}.{key}"] = value
    return from_flat({**ExperimentConfig().to_dict(), **flat})


def config_to_ini(cfg):
    parser = configparser.ConfigParser(interpolation=None)
    for dotted, value in cfg.to_dict().items():
        section, key = dotted.split(".")
        if not parser.has_section(section):
            parser.add_section(section)
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        parser.set(section, key, str(value))
    buf = StringIO()
    parser.write(buf)
    return buf.getvalue()


def save_config(cfg, path):
    Path(path).write_text(config_to_ini(cfg), encoding="utf-8", newline="\n")
