"""The measurement probe: repeated kernel launches that time the link.

For each of `buffer_num` buffers the probe launches its kernel
`repeat_num` times, averages the measured durations and records the
inverse mean as one trace point. Every launch pays a fixed overhead and
then moves ``2 * access_num * buffer_size`` bytes (one read and one write
per access) across the shared link.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, rng as rngmod
from .errors import ValidationError
from .linksim import LinkConfig, Owner, Timeline, noisy_duration
from .victims import NONE_CODE, VictimDriver, draws_needed, jitter_draws

DEFAULT_ACCESS_NUM = 1000
DEFAULT_REPEAT_NUM = 10
DEFAULT_BUFFER_SIZE = 4
DEFAULT_BUFFER_NUM = 100


@dataclass(frozen=True)
class ProbeConfig:
    access_num: int = DEFAULT_ACCESS_NUM
    repeat_num: int = DEFAULT_REPEAT_NUM
    buffer_size_bytes: int = DEFAULT_BUFFER_SIZE
    buffer_num: int = DEFAULT_BUFFER_NUM

    def __post_init__(self):
        for name in ("access_num", "repeat_num", "buffer_size_bytes", "buffer_num"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value <= 0:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def config_id(self):
        return (f"a{self.access_num}-r{self.repeat_num}"
                f"-s{self.buffer_size_bytes}-n{self.buffer_num}")

    def replace(self, **changes):
        fields = dict(access_num=self.access_num, repeat_num=self.repeat_num,
                      buffer_size_bytes=self.buffer_size_bytes, buffer_num=self.buffer_num)
        fields.update(changes)
        return ProbeConfig(**fields)


@dataclass(frozen=True)
class Trace:
    points: np.ndarray
    label: str
    probe_config_id: str
    seed: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if not (np.all(np.isfinite(pts)) and np.all(pts > 0)):
            raise ValidationError("trace points must be finite and positive")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)


def kernel_bytes(config):
    return 2.0 * config.access_num * config.buffer_size_bytes


def invoke_kernel(timeline, config, rng):
    """One probe launch on a general `Timeline`; returns the measured duration."""
    start = timeline.current_time_us
    timeline.advance(start + timeline.link.launch_overhead_us)
    timeline.transfer(Owner.PROBE, kernel_bytes(config))
    true = timeline.current_time_us - start
    return noisy_duration(rng, true, timeline.link.noise_sigma_rel)


def _horizon_bound(link, config, period):
    per_launch = link.launch_overhead_us + kernel_bytes(config) / (0.5 * link.capacity_bytes_per_us)
    return period + config.buffer_num * config.repeat_num * per_launch


@dataclass
class TraceDraws:
    """Every random number one trace consumes, drawn up front."""

    offset: float
    jitter: np.ndarray
    noise: np.ndarray


def trace_draws(link, profile, config, victim_rng, probe_rng):
    """Draw the victim offset, victim jitter and probe noise for one trace.

    Victim stream: the initial phase offset (uniform over one nominal
    period), then (bytes, idle) jitter pairs. Probe stream: one standard
    normal per launch.
    """
    n_launch = config.buffer_num * config.repeat_num
    if profile is None:
        offset, jitter = 0.0, np.zeros((0, 2))
    else:
        period = profile.period(link.capacity_bytes_per_us)
        offset = float(victim_rng.random() * period)
        n = draws_needed(profile, _horizon_bound(link, config, period),
                         link.capacity_bytes_per_us)
        jitter = jitter_draws(victim_rng, n)
    noise = probe_rng.standard_normal(n_launch)
    return TraceDraws(offset, jitter, noise)


def _kernel_args(link, profile, config, draws):
    if profile is None:
        pb = pi = pj = np.zeros(0)
    else:
        pb, pi, pj = profile.arrays()
    return (float(link.capacity_bytes_per_us), float(link.launch_overhead_us),
            float(link.noise_sigma_rel), kernel_bytes(config),
            config.buffer_num, config.repeat_num, pb, pi, pj,
            np.ascontiguousarray(draws.jitter, dtype=float), draws.offset,
            np.ascontiguousarray(draws.noise, dtype=float))


def run_trace(link, profile, config, draws, impl=None):
    """(points, durations) from the selected trace kernel."""
    fn = kernels.probe_trace if impl is None else kernels.IMPLEMENTATIONS[impl]
    return fn(*_kernel_args(link, profile, config, draws))


def run_trace_reference(link, profile, config, draws):
    """Same as `run_trace`, but on the general event-driven `Timeline`.

    Slow; exists to cross-check the specialised kernels.
    """
    tl = Timeline(link)
    if profile is not None:
        driver = VictimDriver(profile, draws.jitter)
        driver.start(tl)
        tl.advance(draws.offset)
    noise_iter = iter(draws.noise)

    class _Replay:
        def standard_normal(self):
            return next(noise_iter)

    replay = _Replay()
    durations = np.empty(config.buffer_num * config.repeat_num)
    points = np.empty(config.buffer_num)
    idx = 0
    for i in range(config.buffer_num):
        total = 0.0
        for _ in range(config.repeat_num):
            d = invoke_kernel(tl, config, replay)
            durations[idx] = d
            total += d
            idx += 1
        points[i] = 1.0 / (total / config.repeat_num)
    return points, durations


def collect_trace(link, profile, config, seed, class_index=0, trace_index=0):
    """One labelled trace; `profile` None means an idle (victim-free) link."""
    victim_rng, probe_rng = rngmod.trace_streams(seed, class_index, trace_index)
    draws = trace_draws(link, profile, config, victim_rng, probe_rng)
    points, _ = run_trace(link, profile, config, draws)
    label = NONE_CODE if profile is None else profile.code
    return Trace(points, label, config.config_id,
                 rngmod.derive_seed(seed, rngmod.CORPUS, class_index, trace_index))


def _corpus_cell(args):
    link, profile, config, seed, ci, ti = args
    return collect_trace(link, profile, config, seed, ci, ti).points


def collect_corpus(link, profiles, config, traces_per_class, base_seed, jobs=1):
    """`traces_per_class` traces per profile, rows class-major then seed-minor."""
    from .dataset import LabeledDataset

    if traces_per_class < 1:
        raise ValidationError("traces_per_class must be >= 1")
    cells = [(link, p, config, base_seed, ci, ti)
             for ci, p in enumerate(profiles) for ti in range(traces_per_class)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_corpus_cell, cells, chunksize=8))
    else:
        rows = [_corpus_cell(c) for c in cells]
    labels = [p.code for p in profiles for _ in range(traces_per_class)]
    features = np.vstack(rows) if rows else np.zeros((0, config.buffer_num))
    return LabeledDataset(features, labels, classes=tuple(p.code for p in profiles))
