import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from linkprint.errors import (InternalInvariantError, InvalidFlowError, InvalidRequestError,
                              ValidationError)
from linkprint.linksim import (NOISE_FLOOR, Flow, LinkConfig, Owner, Timeline,
                               allocate_rates, noisy_duration)
from oracles import ps_completion_times


def simulate(arrivals, sizes, weights, capacity=8.0):
    tl = Timeline(LinkConfig(capacity_bytes_per_us=capacity))
    done = {}
    for i, (a, s, w) in enumerate(zip(arrivals, sizes, weights)):
        tl.add_flow(Owner.PROBE, s, w, at=a,
                    on_complete=lambda t, f, i=i: done.__setitem__(i, t.current_time_us))
    tl.advance(1e12)
    return [done[i] for i in range(len(sizes))]


flows = st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 2000), min_size=n, max_size=n),
    st.lists(st.integers(1, 5000), min_size=n, max_size=n),
    st.lists(st.integers(1, 4), min_size=n, max_size=n)))


@given(flows)
def test_completion_times_match_exact_ps(case):
    arrivals, sizes, weights = case
    got = simulate(arrivals, sizes, weights)
    want = ps_completion_times(arrivals, sizes, weights, 8)
    for g, w in zip(got, want):
        assert g == pytest.approx(float(w), rel=1e-9)


def test_two_equal_flows_share_evenly():
    # both start at 0 with 800 bytes on an 8 B/us link: each gets 4 B/us
    assert simulate([0, 0], [800, 800], [1, 1]) == pytest.approx([200.0, 200.0])


def test_weighted_split():
    # weights 3:1 -> rates 6 and 2; the heavy flow finishes at 100 us,
    # the light one has 400 bytes left at full rate: 150 us
    assert simulate([0, 0], [600, 600], [3, 1]) == pytest.approx([100.0, 150.0])


@given(st.lists(st.floats(0.01, 100), min_size=1, max_size=6), st.floats(0.1, 100))
def test_rates_sum_to_capacity(weights, capacity):
    fl = [Flow(i, Owner.PROBE, 1.0, w) for i, w in enumerate(weights)]
    rates = allocate_rates(fl, capacity)
    assert math.fsum(rates.values()) == pytest.approx(capacity, rel=1e-12)
    for f in fl:
        assert rates[f.id] / capacity == pytest.approx(f.weight / sum(weights), rel=1e-12)


@given(flows)
def test_work_conservation(case):
    # while any flow is active the link runs at full capacity
    arrivals, sizes, weights = case
    times = simulate(arrivals, sizes, weights)
    intervals = sorted(zip(arrivals, times))
    busy, cur_start, cur_end = 0.0, None, None
    for a, d in intervals:
        if cur_end is None or a > cur_end:
            if cur_end is not None:
                busy += cur_end - cur_start
            cur_start, cur_end = a, d
        else:
            cur_end = max(cur_end, d)
    busy += cur_end - cur_start
    assert busy * 8.0 == pytest.approx(sum(sizes), rel=1e-9)


def test_transfer_on_idle_link():
    tl = Timeline(LinkConfig(capacity_bytes_per_us=4.0))
    assert tl.transfer(Owner.PROBE, 100) == pytest.approx(25.0)


def test_event_log(tmp_path):
    tl = Timeline(LinkConfig(), record_events=True)
    tl.add_flow(Owner.VICTIM, 80)
    tl.add_flow(Owner.PROBE, 80, at=5.0)
    tl.advance(1000)
    kinds = [e.kind for e in tl.events]
    assert kinds == ["arrival", "arrival", "departure", "departure"]
    path = tmp_path / "events.tsv"
    tl.dump_events(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "time_us\tevent_kind\tflow_id\tbytes_remaining"
    assert len(lines) == 5


def test_callbacks_run_in_time_order():
    tl = Timeline(LinkConfig())
    seen = []
    tl.call_at(30, lambda t: seen.append(("b", t.current_time_us)))
    tl.call_at(10, lambda t: seen.append(("a", t.current_time_us)))
    tl.advance(100)
    assert seen == [("a", 10.0), ("b", 30.0)]
    assert tl.current_time_us == 100.0


def test_invalid_requests():
    tl = Timeline(LinkConfig())
    with pytest.raises(InvalidRequestError):
        tl.add_flow(Owner.PROBE, 0)
    with pytest.raises(InvalidFlowError):
        tl.add_flow(Owner.PROBE, 10, weight=0)
    tl.advance(50)
    with pytest.raises(InvalidRequestError):
        tl.advance(10)
    with pytest.raises(InternalInvariantError):
        tl.call_at(1, lambda t: None)


@pytest.mark.parametrize("kwargs", [{"capacity_bytes_per_us": 0},
                                    {"launch_overhead_us": -1},
                                    {"noise_sigma_rel": 0.6}])
def test_link_config_validation(kwargs):
    with pytest.raises(ValidationError):
        LinkConfig(**kwargs)


def test_noise_draws_once_and_clamps():
    rng = np.random.default_rng(3)
    ref = np.random.default_rng(3)
    assert noisy_duration(rng, 10.0, 0.0) == 10.0
    ref.standard_normal()
    assert rng.bit_generator.state == ref.bit_generator.state

    class Fixed:
        def standard_normal(self):
            return -1e9

    assert noisy_duration(Fixed(), 10.0, 0.1) == 10.0 * NOISE_FLOOR


def test_probe_against_active_victim():
    tl = Timeline(LinkConfig(capacity_bytes_per_us=8.0))
    tl.add_flow(Owner.VICTIM, 1000)
    # 4 bytes/us while the victim is active
    assert tl.transfer(Owner.PROBE, 80) == pytest.approx(20.0)


def test_transfer_against_saturating_competitor():
    tl = Timeline(LinkConfig(capacity_bytes_per_us=8.0))
    tl.add_flow(Owner.VICTIM, 1e9)
    assert tl.transfer(Owner.PROBE, 160) == pytest.approx(40.0)


def test_back_to_back_transfers_have_no_history():
    tl = Timeline(LinkConfig(capacity_bytes_per_us=8.0))
    assert [tl.transfer(Owner.PROBE, 80) for _ in range(2)] == [10.0, 10.0]


def test_empty_advance_only_moves_time():
    tl = Timeline(LinkConfig())
    tl.advance(10)
    assert tl.current_time_us == 10 and not tl.active_flows and not tl.pending_events


@given(flows, st.integers(0, 2000), st.integers(1, 5000))
def test_adding_a_competitor_never_speeds_anyone_up(case, arrival, size):
    arrivals, sizes, weights = case
    before = simulate(arrivals, sizes, weights)
    after = simulate(arrivals + [arrival], sizes + [size], weights + [1])
    for b, a in zip(before, after):
        assert a >= b * (1 - 1e-12)


def test_noise_is_unbiased():
    rng = np.random.default_rng(0)
    draws = [noisy_duration(rng, 10.0, 0.1) for _ in range(100_000)]
    assert np.mean(draws) == pytest.approx(10.0, abs=0.02)
