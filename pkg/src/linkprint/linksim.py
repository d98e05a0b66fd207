"""Event-driven model of one shared host-accelerator link.

Concurrent transfers are fluid flows that split the link capacity by
weighted processor sharing. Between events every rate is constant, so the
timeline jumps from one event (arrival, departure, scheduled callback) to
the next and drains each active flow linearly in between.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import (InternalInvariantError, InvalidFlowError,
                     InvalidRequestError, ValidationError)

# residual bytes below this fraction of the flow size count as delivered
_DONE_REL = 1e-12
NOISE_FLOOR = 0.01


class Owner(enum.Enum):
    PROBE = "probe"
    VICTIM = "victim"


@dataclass(frozen=True)
class LinkConfig:
    capacity_bytes_per_us: float = 8.0
    launch_overhead_us: float = 50.0
    noise_sigma_rel: float = 0.08
    seed: int = 0

    def __post_init__(self):
        if not self.capacity_bytes_per_us > 0:
            raise ValidationError("capacity_bytes_per_us must be > 0")
        if not self.launch_overhead_us >= 0:
            raise ValidationError("launch_overhead_us must be >= 0")
        if not 0 <= self.noise_sigma_rel <= 0.5:
            raise ValidationError("noise_sigma_rel must lie in [0, 0.5]")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")


@dataclass(eq=False)
class Flow:
    id: int
    owner: Owner
    bytes_remaining: float
    weight: float = 1.0
    size: float = field(default=0.0, repr=False)
    on_complete: Optional[Callable[["Timeline", "Flow"], None]] = field(
        default=None, repr=False)


@dataclass(frozen=True)
class Event:
    time_us: float
    kind: str
    flow_id: int
    bytes_remaining: float

    def as_tsv(self):
        return f"{self.time_us!r}\t{self.kind}\t{self.flow_id}\t{self.bytes_remaining!r}"


def allocate_rates(flows, capacity):
    """Weighted processor-sharing rates, keyed by flow id."""
    flows = list(flows)
    for f in flows:
        if not f.weight > 0:
            raise InvalidFlowError(f"flow {f.id} has non-positive weight {f.weight}")
    if not flows:
        return {}
    total = math.fsum(f.weight for f in flows)
    return {f.id: capacity * f.weight / total for f in flows}


def noisy_duration(rng, true_duration_us, sigma_rel):
    """Multiplicative Gaussian measurement noise, clamped at 1% of the input.

    One standard normal is drawn from `rng` on every call, also when
    `sigma_rel` is zero, so the stream position never depends on the noise
    level.
    """
    g = rng.standard_normal()
    return true_duration_us * max(NOISE_FLOOR, 1.0 + sigma_rel * g)


class Timeline:
    """Single-threaded event loop over the link.

    Pending work is a heap of ``(time, seq, kind, payload)`` entries. Kind
    ``"arrival"`` activates a `Flow`; kind ``"call"`` runs a callback with
    the timeline, which is how victim drivers schedule their next phase.
    """

    def __init__(self, link: LinkConfig, record_events=False):
        self.link = link
        self.capacity = float(link.capacity_bytes_per_us)
        self.current_time_us = 0.0
        self.active_flows: dict[int, Flow] = {}
        self.pending_events: list = []
        self._seq = itertools.count()
        self._ids = itertools.count()
        self.events: Optional[list[Event]] = [] if record_events else None

    # -- scheduling ---------------------------------------------------------
    def add_flow(self, owner, nbytes, weight=1.0, at=None, on_complete=None):
        if not nbytes > 0:
            raise InvalidRequestError(f"transfer size must be > 0, got {nbytes}")
        if not weight > 0:
            raise InvalidFlowError(f"non-positive weight {weight}")
        flow = Flow(next(self._ids), owner, float(nbytes), float(weight),
                    float(nbytes), on_complete)
        if at is None or at <= self.current_time_us:
            if at is not None and at < self.current_time_us:
                raise InternalInvariantError(
                    f"arrival at {at} precedes current time {self.current_time_us}")
            self._activate(flow)
        else:
            self._push(at, "arrival", flow)
        return flow

    def call_at(self, at, callback):
        if at < self.current_time_us:
            raise InternalInvariantError(
                f"callback at {at} precedes current time {self.current_time_us}")
        self._push(at, "call", callback)

    def _push(self, at, kind, payload):
        heapq.heappush(self.pending_events, (float(at), next(self._seq), kind, payload))

    def _log(self, kind, flow):
        if self.events is not None:
            self.events.append(Event(self.current_time_us, kind, flow.id,
                                      flow.bytes_remaining))

    def _activate(self, flow):
        self.active_flows[flow.id] = flow
        self._log("arrival", flow)

    # -- time ---------------------------------------------------------------
    def _next_departure(self, rates):
        best_t, best = math.inf, None
        for f in self.active_flows.values():
            t = self.current_time_us + f.bytes_remaining / rates[f.id]
            if t < best_t:
                best_t, best = t, f
        return best_t, best

    def _drain(self, rates, dt):
        if dt <= 0:
            return
        for f in self.active_flows.values():
            f.bytes_remaining = max(0.0, f.bytes_remaining - rates[f.id] * dt)

    def step(self, until_us=math.inf):
        """Process the next event if it happens no later than `until_us`.

        Returns True when an event was processed. Otherwise the clock moves
        to `until_us` (when finite) and active flows are drained to it.
        """
        rates = allocate_rates(self.active_flows.values(), self.capacity)
        t_dep, dep = self._next_departure(rates)
        t_pend = self.pending_events[0][0] if self.pending_events else math.inf
        t_next = min(t_dep, t_pend)
        if t_next > until_us:
            if math.isfinite(until_us):
                self._drain(rates, until_us - self.current_time_us)
                self.current_time_us = float(until_us)
            return False
        if t_next < self.current_time_us:
            raise InternalInvariantError(
                f"event at {t_next} precedes current time {self.current_time_us}")
        self._drain(rates, t_next - self.current_time_us)
        self.current_time_us = t_next
        if t_dep <= t_pend:
            dep.bytes_remaining = 0.0
            done = [f for f in self.active_flows.values()
                    if f.bytes_remaining <= _DONE_REL * f.size]
            for f in done:
                f.bytes_remaining = 0.0
                del self.active_flows[f.id]
                self._log("departure", f)
            for f in done:
                if f.on_complete is not None:
                    f.on_complete(self, f)
        else:
            _, _, kind, payload = heapq.heappop(self.pending_events)
            if kind == "arrival":
                self._activate(payload)
            else:
                payload(self)
        return True

    def advance(self, until_us):
        """Process every event up to and including `until_us`."""
        if until_us < self.current_time_us:
            raise InvalidRequestError(
                f"cannot advance backwards from {self.current_time_us} to {until_us}")
        while self.step(until_us):
            pass
        return self

    def transfer(self, owner, nbytes, weight=1.0):
        """Start a flow now, run until it departs, return the elapsed time."""
        start = self.current_time_us
        flow = self.add_flow(owner, nbytes, weight)
        while flow.id in self.active_flows:
            if not self.step():
                raise InternalInvariantError("flow still active with no events left")
        return self.current_time_us - start

    def dump_events(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("time_us\tevent_kind\tflow_id\tbytes_remaining\n")
            for e in self.events or ():
                fh.write(e.as_tsv() + "\n")
