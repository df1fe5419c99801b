import pytest
import numpy as np

from dds_latency.errors import CycleMismatchError, IncommensurableError, ScenarioError
from dds_latency.model import (
    EventKind, ScenarioParams, SolverConfig, SteadyStateCycle, TimelineMode, UnackedDistribution,
)
from dds_latency.reference import H_VALUES, M_VALUES, P_VALUES, R_VALUES
from dds_latency.steady_state import (
    CycleWalker, build_timeline, cycle_distance, period_R, solve_steady_state,
)


@pytest.mark.parametrize("r, h, expected", [
    (50, 200, 4),
    (100, 200, 2),
    (200, 200, 1),
    (200, 50, 1),
    (500, 200, 2),
    (50, 100.5, 201),
])
def test_period_R(r, h, expected):
    assert period_R(r, h) == expected


@pytest.mark.parametrize("r, h", [(50, 100.05), (0.01, 50), (50, 0)])
def test_period_R_off_grid(r, h):
    with pytest.raises(IncommensurableError):
        period_R(r, h)


def _kinds(timeline):
    return [(event.time_ms, event.kind) for event in timeline]


def test_build_timeline_nominal():
    """
    Tests that heartbeats follow the publish at equal timestamps
    """
    timeline = build_timeline(ScenarioParams(m=1, r=50, h=200, p=0.9), SolverConfig(), 400)
    pubs = [e.time_ms for e in timeline if e.kind is EventKind.PUBLISH]
    hbs = [e.time_ms for e in timeline if e.kind is EventKind.HEARTBEAT]
    assert pubs == [0, 50, 100, 150, 200, 250, 300, 350, 400]
    assert hbs == [0, 200, 400]
    assert _kinds(timeline)[:2] == [(0, EventKind.PUBLISH), (0, EventKind.HEARTBEAT)]


def test_build_timeline_drifted():
    cfg = SolverConfig(timeline_mode=TimelineMode.DRIFTED)
    timeline = build_timeline(ScenarioParams(m=1, r=100, h=100, p=0.9), cfg, 300)
    hbs = [e.time_ms for e in timeline if e.kind is EventKind.HEARTBEAT]
    assert hbs == pytest.approx([0, 100.2, 200.4])


def test_build_timeline_equal_periods():
    timeline = build_timeline(ScenarioParams(m=1, r=50, h=50, p=0.9), SolverConfig(), 100)
    assert _kinds(timeline) == [
        (0, EventKind.PUBLISH), (0, EventKind.HEARTBEAT),
        (50, EventKind.PUBLISH), (50, EventKind.HEARTBEAT),
        (100, EventKind.PUBLISH), (100, EventKind.HEARTBEAT),
    ]
    times = [event.time_ms for event in timeline]
    assert times == sorted(times)


def _cycle(*dists):
    return SteadyStateCycle(dists=tuple(UnackedDistribution(d) for d in dists), period_R=len(dists))


def test_cycle_distance():
    a = _cycle([1.0], [0.5, 0.5])
    assert cycle_distance(a, a) == 0.0
    b = _cycle([1.0], [0.501, 0.499])
    assert cycle_distance(a, b) == pytest.approx(1e-3)
    c = _cycle([1.0, 0.0, 0.0], [0.5, 0.5])
    assert cycle_distance(a, c) == 0.0


def test_cycle_distance_length_mismatch():
    with pytest.raises(CycleMismatchError):
        cycle_distance(_cycle([1.0], [1.0]), _cycle([1.0], [1.0], [1.0], [1.0]))


@pytest.mark.parametrize("m", [0.008, 1, 10])
@pytest.mark.parametrize("r, h", [(50, 50), (50, 200), (200, 50), (100, 200)])
def test_lossless_channel_collapses(m, r, h):
    Q = solve_steady_state(ScenarioParams(m=m, r=r, h=h, p=1.0))
    assert Q.converged
    assert Q.cycles_used == 1
    assert all(d == UnackedDistribution.delta(0) for d in Q.dists)


def test_solve_rejects_invalid_scenario():
    with pytest.raises(ScenarioError):
        solve_steady_state(ScenarioParams(m=1, r=50, h=50, p=0))


def test_period_four_cycle_delivery_ratio():
    """
    Tests m=1, r=50, h=200, p=0.95 against its published MDR of 85.38
    """
    Q = solve_steady_state(ScenarioParams(m=1, r=50, h=200, p=0.95))
    assert Q.converged
    assert Q.period_R == 4
    assert len(Q.dists) == 4
    assert np.mean([d[0] for d in Q.dists]) == pytest.approx(0.8538, abs=1e-3)


def test_single_phase_delivery_ratio():
    Q = solve_steady_state(ScenarioParams(m=1, r=50, h=50, p=0.75))
    assert Q.period_R == 1
    assert Q.dists[0][0] == pytest.approx(0.5410, abs=1e-3)


@pytest.mark.parametrize("m", M_VALUES)
@pytest.mark.parametrize("r", R_VALUES)
@pytest.mark.parametrize("h", H_VALUES)
@pytest.mark.parametrize("p", P_VALUES)
def test_converges_quickly(m, r, h, p):
    Q = solve_steady_state(ScenarioParams(m=m, r=r, h=h, p=p))
    assert Q.converged
    assert Q.cycles_used <= 50
    assert Q.final_distance < SolverConfig().epsilon
    for dist in Q.dists:
        assert dist.probs.sum() == pytest.approx(1.0, abs=1e-9)


def test_converged_cycle_is_a_fixed_point():
    sp = ScenarioParams(m=3, r=50, h=100, p=0.85)
    cfg = SolverConfig()
    walker = CycleWalker(sp, cfg)
    Q = solve_steady_state(sp, cfg, walker=walker)
    again = SteadyStateCycle(dists=walker.next_cycle(), period_R=Q.period_R)
    assert cycle_distance(Q, again) <= 2 * cfg.epsilon


def test_max_cycles_reports_unconverged():
    Q = solve_steady_state(ScenarioParams(m=10, r=50, h=200, p=0.75), SolverConfig(max_cycles=2))
    assert not Q.converged
    assert Q.cycles_used == 2
    assert Q.final_distance > 0


def test_kmax_grows_for_heavy_load():
    sp = ScenarioParams(m=1, r=50, h=200, p=0.75)
    cfg = SolverConfig(kmax_floor=4)
    walker = CycleWalker(sp, cfg)
    solve_steady_state(sp, cfg, walker=walker)
    assert walker.k_max > 10
    assert walker.tail_mass < 1e-8


def _heartbeats_after_each_publish(r, h, publishes):
    timeline = build_timeline(ScenarioParams(m=1, r=r, h=h, p=0.9), SolverConfig(), r * publishes)
    counts = []
    for event in timeline:
        if event.kind is EventKind.PUBLISH:
            counts.append(0)
        else:
            counts[-1] += 1
    return counts[:-1]


@pytest.mark.parametrize("r", [50, 100, 200])
@pytest.mark.parametrize("h", [50, 100, 200])
def test_period_matches_event_pattern(r, h):
    """
    Tests period_R against the smallest period of the heartbeat counts between publishes
    """
    counts = _heartbeats_after_each_publish(r, h, 40)
    smallest = next(
        length for length in range(1, 20)
        if all(counts[i] == counts[i + length] for i in range(len(counts) - length))
    )
    assert smallest == period_R(r, h)
