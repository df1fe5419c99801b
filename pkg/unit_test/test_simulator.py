import pytest
import numpy as np
from scipy import stats

from dds_latency.errors import ModelError, ScenarioError
from dds_latency.metrics import analyze
from dds_latency.model import ScenarioParams
from dds_latency.simulator import (
    SimConfig, _delivery_times, empirical_metrics, make_rng, run_sim, write_trace,
)


def test_lossless_channel_has_no_delay():
    result = run_sim(ScenarioParams(m=1, r=50, h=50, p=1.0), SimConfig(n_messages=1000))
    assert result.metrics.as_tuple() == (100.0, 0.0, 0.0)
    assert result.undelivered == 0
    assert result.delays_ms.size == 1000


def test_same_seed_same_run():
    sp = ScenarioParams(m=1, r=50, h=50, p=0.75)
    first = run_sim(sp, SimConfig(n_messages=300, seed=7))
    second = run_sim(sp, SimConfig(n_messages=300, seed=7))
    assert np.array_equal(first.delays_ms, second.delays_ms)
    assert first.metrics == second.metrics


def test_scenario_index_selects_another_stream():
    sp = ScenarioParams(m=1, r=50, h=50, p=0.75)
    first = run_sim(sp, SimConfig(n_messages=300, seed=7, scenario_index=0))
    other = run_sim(sp, SimConfig(n_messages=300, seed=7, scenario_index=1))
    assert not np.array_equal(first.delays_ms, other.delays_ms)


def test_make_rng_streams():
    assert make_rng(3, 2).random() == make_rng(3, 2).random()
    assert make_rng(3, 2).random() != make_rng(3, 1).random()


def test_invalid_scenario_is_rejected():
    with pytest.raises(ScenarioError):
        run_sim(ScenarioParams(m=1, r=50, h=50, p=0), SimConfig(n_messages=10))


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(n_messages=0)
    with pytest.raises(ValueError):
        SimConfig(zero_delay_ms=-1)


def test_empirical_metrics_examples():
    metrics = empirical_metrics([0, 0, 10, 10])
    assert metrics.as_tuple() == pytest.approx((50.0, 5.0, 5.0))

    # delays up to 3 ms weigh as zero in latency and jitter, never in the delivery ratio
    metrics = empirical_metrics([2.9, 3.0, 3.1])
    assert metrics.mdr_pct == 0.0
    assert metrics.avg_latency_ms == pytest.approx(3.1 / 3)
    assert metrics.jitter_ms == pytest.approx(np.std([0, 0, 3.1]))


def test_quick_repair_is_not_a_first_transmission():
    metrics = empirical_metrics([0.0, 0.4, 0.0, 50.2])
    assert metrics.mdr_pct == pytest.approx(50.0)
    assert metrics.avg_latency_ms == pytest.approx(50.2 / 4)


def test_quick_repairs_do_not_raise_the_delivery_ratio():
    """
    Tests r = 2h, where a running timer can repair a lost message within a millisecond of its publish
    """
    sp = ScenarioParams(m=0.008, r=100, h=50, p=0.95)
    result = run_sim(sp, SimConfig(n_messages=5000, seed=5))
    delays = result.delays_ms
    assert np.count_nonzero((delays > 0) & (delays <= 3.0)) > 0
    assert result.metrics.mdr_pct == pytest.approx(100.0 * np.count_nonzero(delays == 0) / delays.size)
    assert result.metrics.mdr_pct == pytest.approx(analyze(sp).metrics.mdr_pct, abs=1.5)


def test_empirical_metrics_needs_delays():
    with pytest.raises(ModelError):
        empirical_metrics([])


def test_delivery_times_order():
    complete_at = [0, 180, 120]
    publish_times = [0, 50, 100]
    assert _delivery_times(complete_at, publish_times, True) == [0, 130, 80]
    assert _delivery_times(complete_at, publish_times, False) == [0, 130, 20]
    assert _delivery_times([0, None, 120], publish_times, True) == [0]
    assert _delivery_times([0, None, 120], publish_times, False) == [0, None, 20]


def test_drain_delivers_everything():
    sp = ScenarioParams(m=3, r=50, h=50, p=0.8)
    drained = run_sim(sp, SimConfig(n_messages=400))
    assert drained.undelivered == 0
    cut = run_sim(sp, SimConfig(n_messages=400, drain=False))
    assert cut.delays_ms.size + cut.undelivered == 400


def test_timer_stops_when_everything_is_acked():
    """
    Tests that the heartbeat timer stops once nothing is unacknowledged and restarts on the next publish
    """
    sp = ScenarioParams(m=1, r=5000, h=50, p=1.0)
    result = run_sim(sp, SimConfig(n_messages=3, record_trace=True))
    events = [event for _, event, _ in result.trace]
    assert events.count("timer_start") == 3
    assert events.count("timer_stop") == 3
    assert "retransmit" not in events
    heartbeats = [time for time, event, _ in result.trace if event == "heartbeat"]
    assert heartbeats
    assert all(time % 5000 < 60 for time in heartbeats)
    assert result.trace[0][:2] == (0.0, "publish")


def _slow_publisher_delays(n_messages):
    sp = ScenarioParams(m=1, r=5000, h=50, p=0.9)
    return sp, run_sim(sp, SimConfig(n_messages=n_messages, seed=11)).delays_ms


def test_delays_are_whole_heartbeat_periods():
    sp, delays = _slow_publisher_delays(2000)
    late = delays[delays > 0]
    assert late.size > 0
    ticks = late / sp.hb_period_ms
    assert np.allclose(ticks, np.round(ticks), atol=1e-6)
    assert np.all(np.round(ticks) >= 1)


def test_retry_count_is_geometric():
    """
    Tests the number of failed heartbeat rounds before a lost message gets through

    Each round needs the heartbeat, the AckNack and the repair to arrive, so the
    failures follow a geometric law with success probability p^3.
    """
    sp, delays = _slow_publisher_delays(20000)
    late = delays[delays > 0]
    retries = np.round(late / sp.hb_period_ms).astype(int) - 1
    observed = np.array([np.sum(retries == k) for k in range(4)] + [np.sum(retries >= 4)])
    q = sp.p ** 3
    probs = np.array([q * (1 - q) ** k for k in range(4)] + [(1 - q) ** 4])
    expected = probs * observed.sum()
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_delivery_ratio_tracks_analytic_value(row1_params):
    simulated = run_sim(row1_params, SimConfig(n_messages=5000)).metrics.mdr_pct
    assert simulated == pytest.approx(analyze(row1_params).metrics.mdr_pct, abs=1.5)


def test_write_trace(tmp_path):
    sp = ScenarioParams(m=1, r=50, h=50, p=0.9)
    sc = SimConfig(n_messages=20, seed=5)
    result = run_sim(sp, sc)
    path = tmp_path / "delays.txt"
    write_trace(result, path, sp, sc)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# ")
    assert "seed=5" in lines[0]
    assert len(lines) == 1 + result.delays_ms.size
    assert float(lines[1]) == pytest.approx(result.delays_ms[0], abs=1e-6)
