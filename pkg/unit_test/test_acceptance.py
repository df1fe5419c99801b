"""
End-to-end checks of the engine and the simulator against the reference table.
"""
import pytest
import numpy as np

from dds_latency.metrics import analyze
from dds_latency.model import ScenarioParams
from dds_latency.reference import H_VALUES, M_VALUES, R_VALUES, find_row, load_reference
from dds_latency.runner import build_tasks, compare_with_reference, run_tasks
from dds_latency.simulator import SimConfig, run_sim
from dds_latency.steady_state import period_R


@pytest.fixture(scope="module")
def reference_rows():
    return load_reference()


# one row from every (r, h) block, the r = 2h blocks included
BLOCK_ROWS = (1, 31, 61, 91, 117, 121, 151, 181, 211, 240, 241)

# Table I extremes: the four r and h corners, each at the lightest load and at m = 1 with p = 0.95 and 0.75
CROSS_CHECK_ROWS = (1, 11, 15, 61, 71, 75, 181, 191, 195, 241, 251, 255)


def _validate(rows):
    tasks = build_tasks([row.params for row in rows], "analytic", None, SimConfig())
    return compare_with_reference(rows, run_tasks(tasks), "analytic", 5000)


def test_selected_rows_pass_validation(reference_rows):
    rows = [find_row(reference_rows, idx) for idx in BLOCK_ROWS]
    report = _validate(rows)
    assert report.passed
    assert report.failures == ()
    assert report.frame["mdr_tight"].all()
    assert report.frame["lat_tight"].all()
    assert list(report.frame["idx"]) == list(BLOCK_ROWS)


def test_every_reference_row_passes_validation(reference_rows):
    """
    Tests the analytic engine over the whole bundled table against the acceptance bands
    """
    report = _validate(reference_rows)
    assert report.failures == ()
    assert report.passed
    assert report.frame["within_loose"].all()


def test_validation_flags_a_wrong_row(reference_rows):
    row = find_row(reference_rows, 1)
    result = {"mdr_pct": row.mdr_a - 2.0, "avg_latency_ms": row.lat_a, "jitter_ms": row.jit_a}
    report = compare_with_reference([row], [result], "analytic", 5000)
    assert not report.passed
    assert report.failures == (1,)


def test_published_periods():
    assert (period_R(50, 200), period_R(100, 200), period_R(200, 200)) == (4, 2, 1)


@pytest.mark.parametrize("m", M_VALUES)
def test_lossless_channel_everywhere(m):
    """
    Tests that p = 1 gives exactly (100, 0, 0) from the engine and the simulator
    """
    for r in R_VALUES:
        for h in H_VALUES:
            sp = ScenarioParams(m=m, r=r, h=h, p=1.0)
            assert analyze(sp).metrics.as_tuple() == (100.0, 0.0, 0.0)
            assert run_sim(sp, SimConfig(n_messages=100)).metrics.as_tuple() == (100.0, 0.0, 0.0)


def test_latency_dips_at_half_the_publish_period():
    latency = {
        h: analyze(ScenarioParams(m=1, r=500, h=h, p=0.85)).metrics.avg_latency_ms
        for h in (200, 250, 300)
    }
    assert latency[250] < latency[200]
    assert latency[250] < latency[300]


def test_delivery_ratio_falls_with_message_size():
    ratios = [analyze(ScenarioParams(m=m, r=50, h=50, p=0.85)).metrics.mdr_pct for m in (1, 3, 5, 10)]
    assert ratios == sorted(ratios, reverse=True)
    assert len(set(ratios)) == 4


def _simulated_means(sp, idx, seeds, n_messages):
    runs = [
        run_sim(sp, SimConfig(n_messages=n_messages, seed=seed, scenario_index=idx, record_delays=False)).metrics
        for seed in range(seeds)
    ]
    return tuple(float(np.mean(values)) for values in zip(*(m.as_tuple() for m in runs)))


@pytest.mark.parametrize("idx", [1, 61, 91, 181, 211])
def test_simulator_agrees_with_engine(reference_rows, idx):
    """
    Tests the mean of four seeded 5000-message runs against the analytic metrics

    Rows 91 and 211 publish every second heartbeat, so a publish into an acked state
    waits a full heartbeat period before its first repair.

    Params:
        idx (int): reference row

    Returns:
        None
    """
    sp = find_row(reference_rows, idx).params
    analytic = analyze(sp).metrics
    mdr, latency, _ = _simulated_means(sp, idx, 4, 5000)
    assert mdr == pytest.approx(analytic.mdr_pct, abs=1.5)
    assert latency == pytest.approx(analytic.avg_latency_ms, rel=0.15)


@pytest.mark.slow
@pytest.mark.parametrize("idx", CROSS_CHECK_ROWS)
def test_simulator_cross_validation(reference_rows, idx):
    """
    Tests 20 seeds of 5000 messages against the analytic metrics: MDR within 1.5 points,
    latency within 5% and jitter within 10%
    """
    sp = find_row(reference_rows, idx).params
    analytic = analyze(sp).metrics
    mdr, latency, jit = _simulated_means(sp, idx, 20, 5000)
    assert mdr == pytest.approx(analytic.mdr_pct, abs=1.5)
    assert latency == pytest.approx(analytic.avg_latency_ms, rel=0.05)
    assert jit == pytest.approx(analytic.jitter_ms, rel=0.10)
