"""Victim accelerator I/O profiles.

A profile is a cyclic list of phases. Each phase moves `transfer_bytes`
over the link and then idles for `idle_us` (compute time). Every
repetition of a phase scales both numbers by ``1 + jitter_rel * u`` with
``u`` uniform on [-1, 1), two draws per repetition, taken in order from the
victim's random stream.

Profile files are plain text::

    version = 1

    [fir]
    name = fir
    code = F
    phase = 2048, 900, 0.05
    phase = 0, 300, 0.05

Repeated ``phase`` keys are why this is not parsed with configparser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ProfileParseError, ProfileValidationError

STOCK_CODES = ("A", "AW", "F", "M", "C", "V", "NG", "HS")
STOCK_NAME = "victims8"
NONE_CODE = "NONE"


@dataclass(frozen=True)
class Phase:
    transfer_bytes: float
    idle_us: float
    jitter_rel: float = 0.0

    def __post_init__(self):
        if self.transfer_bytes < 0 or self.idle_us < 0:
            raise ProfileValidationError("phase bytes and idle time must be non-negative")
        if not self.transfer_bytes + self.idle_us > 0:
            raise ProfileValidationError("phase must move bytes or consume time")
        if not 0 <= self.jitter_rel < 1:
            raise ProfileValidationError("jitter_rel must lie in [0, 1)")

    def nominal_duration(self, capacity):
        return self.transfer_bytes / capacity + self.idle_us


@dataclass(frozen=True)
class VictimProfile:
    name: str
    code: str
    phases: tuple[Phase, ...]

    def __post_init__(self):
        if not self.phases:
            raise ProfileValidationError(f"profile {self.name!r} has no phases")
        object.__setattr__(self, "phases", tuple(self.phases))

    def period(self, capacity):
        """Cycle length when the victim has the link to itself."""
        return math.fsum(p.nominal_duration(capacity) for p in self.phases)

    def duty_cycle(self, capacity):
        busy = math.fsum(p.transfer_bytes / capacity for p in self.phases)
        return busy / self.period(capacity)

    def arrays(self):
        """(bytes, idle, jitter) as float arrays, for the trace kernels."""
        return (np.array([p.transfer_bytes for p in self.phases], dtype=float),
                np.array([p.idle_us for p in self.phases], dtype=float),
                np.array([p.jitter_rel for p in self.phases], dtype=float))


@dataclass(frozen=True)
class ProfileSet:
    profiles: tuple[VictimProfile, ...]
    version: int = 1

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        names, codes = set(), set()
        for p in self.profiles:
            if p.name in names:
                raise ProfileValidationError(f"duplicate profile name {p.name!r}")
            if p.code in codes:
                raise ProfileValidationError(f"duplicate profile code {p.code!r}")
            if p.code == NONE_CODE:
                raise ProfileValidationError(f"code {NONE_CODE!r} is reserved")
            names.add(p.name)
            codes.add(p.code)

    def __len__(self):
        return len(self.profiles)

    def __iter__(self):
        return iter(self.profiles)

    @property
    def codes(self):
        return tuple(p.code for p in self.profiles)

    def by_code(self, code):
        for p in self.profiles:
            if p.code == code:
                return p
        raise ProfileValidationError(f"unknown profile code {code!r}")

    def subset(self, codes):
        keep = set(codes)
        missing = keep - set(self.codes)
        if missing:
            raise ProfileValidationError(f"unknown profile codes {sorted(missing)}")
        return ProfileSet(tuple(p for p in self.profiles if p.code in keep), self.version)

    def without(self, codes):
        return self.subset([c for c in self.codes if c not in set(codes)])


def _parse_phase(value, lineno):
    parts = [s.strip() for s in value.split(",")]
    if len(parts) not in (2, 3):
        raise ProfileParseError("phase needs 'bytes, idle_us[, jitter]'", lineno, "phase")
    try:
        nums = [float(s) for s in parts]
    except ValueError:
        raise ProfileParseError(f"non-numeric phase {value!r}", lineno, "phase") from None
    if not all(math.isfinite(x) for x in nums):
        raise ProfileParseError(f"non-finite phase {value!r}", lineno, "phase")
    try:
        return Phase(*nums)
    except ProfileValidationError as exc:
        raise ProfileParseError(str(exc), lineno, "phase") from None


def parse_profiles(text, source="<string>"):
    version = 1
    sections = []  # [lineno, header, fields, phases]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ProfileParseError(f"malformed section header {raw.strip()!r}", lineno)
            sections.append([lineno, line[1:-1].strip(), {}, []])
            continue
        if "=" not in line:
            raise ProfileParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not sections:
            if key != "version":
                raise ProfileParseError("only 'version' may precede the first section",
                                        lineno, key)
            try:
                version = int(value)
            except ValueError:
                raise ProfileParseError(f"bad version {value!r}", lineno, key) from None
            continue
        sec = sections[-1]
        if key == "phase":
            sec[3].append(_parse_phase(value, lineno))
        elif key in ("name", "code"):
            if key in sec[2]:
                raise ProfileParseError(f"duplicate key in section [{sec[1]}]", lineno, key)
            if not value:
                raise ProfileParseError("empty value", lineno, key)
            sec[2][key] = value
        else:
            raise ProfileParseError(f"unknown key in {source}", lineno, key)
    profiles = []
    for lineno, header, fields, phases in sections:
        for key in ("name", "code"):
            if key not in fields:
                raise ProfileParseError(f"section [{header}] lacks {key!r}", lineno, key)
        if not phases:
            raise ProfileValidationError(
                f"profile {fields['name']!r} (line {lineno}) has no phases")
        profiles.append(VictimProfile(fields["name"], fields["code"], tuple(phases)))
    return ProfileSet(tuple(profiles), version)


def load_profiles(path):
    path = Path(path)
    return parse_profiles(path.read_text(encoding="utf-8"), str(path))


def stock_path():
    return resources.files("linkprint") / "assets" / f"{STOCK_NAME}.profiles"


def stock_profiles():
    return parse_profiles(stock_path().read_text(encoding="utf-8"), STOCK_NAME)


def resolve_profiles(spec):
    """Load a profile set from a path, or the stock set for 'stock'/'victims8'."""
    if spec in (None, "", "stock", STOCK_NAME):
        return stock_profiles()
    return load_profiles(spec)


def identical_profiles(profile, n=8):
    """`n` copies of one profile under distinct names and codes (chance control)."""
    return ProfileSet(tuple(VictimProfile(f"{profile.name}_{i}", f"X{i}", profile.phases)
                            for i in range(n)))


# -- jittered phase sequence -------------------------------------------------

def jitter_draws(rng, n):
    """`n` (bytes, idle) jitter pairs, uniform on [-1, 1)."""
    return 2.0 * rng.random((n, 2)) - 1.0


def jittered_phase(profile_arrays, draws, k):
    """Bytes and idle time of repetition `k` of the unrolled phase cycle."""
    pb, pi, pj = profile_arrays
    p = k % len(pb)
    return (pb[p] * (1.0 + pj[p] * draws[k, 0]),
            pi[p] * (1.0 + pj[p] * draws[k, 1]))


def draws_needed(profile, horizon_us, capacity):
    """Upper bound on phase repetitions that fit into `horizon_us`.

    Contention only stretches phases, so the shortest possible
    uncontended, fully jittered-down phase gives the bound.
    """
    shortest = min(p.nominal_duration(capacity) * (1.0 - p.jitter_rel)
                   for p in profile.phases)
    return int(math.ceil(horizon_us / shortest)) + len(profile.phases) + 2


def victim_schedule(profile, horizon_us, rng, capacity=8.0):
    """Open-loop arrivals of `profile` on an otherwise idle link.

    Returns ``[(arrival_time_us, transfer_bytes), ...]`` for arrivals in
    ``[0, horizon_us)``. Phases without bytes only contribute idle time.
    """
    if not horizon_us > 0:
        raise ValueError("horizon_us must be > 0")
    arrays = profile.arrays()
    draws = jitter_draws(rng, draws_needed(profile, horizon_us, capacity))
    out, t, k = [], 0.0, 0
    while t < horizon_us:
        b, idle = jittered_phase(arrays, draws, k)
        k += 1
        if b > 0:
            out.append((t, b))
        t += b / capacity + idle
    return out


class VictimDriver:
    """Runs a profile closed-loop on a `Timeline`.

    The next phase starts `idle` microseconds after the previous transfer
    has departed, so contention from other flows stretches the victim's
    own cycle.
    """

    def __init__(self, profile, draws, owner=None):
        from .linksim import Owner
        self.arrays = profile.arrays()
        self.draws = draws
        self.owner = owner or Owner.VICTIM
        self.k = 0
        self._idle = 0.0

    def start(self, timeline):
        self._next_phase(timeline)

    def _next_phase(self, timeline):
        if self.k >= len(self.draws):
            from .errors import InternalInvariantError
            raise InternalInvariantError("victim ran out of jitter draws")
        b, idle = jittered_phase(self.arrays, self.draws, self.k)
        self.k += 1
        self._idle = idle
        if b > 0:
            timeline.add_flow(self.owner, b, on_complete=self._transfer_done)
        else:
            self._after_idle(timeline)

    def _transfer_done(self, timeline, flow):
        self._after_idle(timeline)

    def _after_idle(self, timeline):
        if self._idle > 0:
            timeline.call_at(timeline.current_time_us + self._idle, self._next_phase)
        else:
            self._next_phase(timeline)
