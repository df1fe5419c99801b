# Shared pytest fixtures. Tests run from the repository root with `pytest unit_test`.
import pytest
import numpy as np

from dds_latency.model import ScenarioParams, SolverConfig, UnackedDistribution


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="also run the multi-seed simulator checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-seed simulator runs, skipped unless --runslow is given")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def solver_cfg():
    """
    The default solver settings

    Returns:
        SolverConfig: defaults
    """
    return SolverConfig()


@pytest.fixture
def row1_params():
    """
    Scenario of reference row 1: 12 byte messages, r = h = 50 ms, p = 0.95
    """
    return ScenarioParams(m=0.008, r=50, h=50, p=0.95)


@pytest.fixture
def random_distributions():
    """
    1000 seeded random distributions over 1 to 40 counts

    Returns:
        list of UnackedDistribution
    """
    rng = np.random.default_rng(12345)
    dists = []
    for _ in range(1000):
        weights = rng.random(rng.integers(1, 41))
        weights[0] += 1e-3
        dists.append(UnackedDistribution(weights / weights.sum()))
    return dists
