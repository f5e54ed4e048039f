import numpy as np
import pytest

from rankinfer.model import ComparisonDataset, ComparisonGraph
from rankinfer.simulate import simulate_dataset


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def record(label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        request.config.stash[ACCEPTANCE_KEY].append(line)
        print(line)
        assert ok, line

    return record


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="slow; use --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def random_dataset(n, p, L, seed, spread=1.0):
    """Connected random dataset with centered scores of the given spread."""
    rs = np.random.default_rng(seed)
    for attempt in range(100):
        theta = rs.uniform(-spread, spread, n)
        theta -= theta.mean()
        data = simulate_dataset(theta, p, L, (seed, attempt))
        from rankinfer.estimate import check_connected

        if data.graph.m and check_connected(data.graph):
            return theta, data
    raise RuntimeError("could not draw a connected graph")


def dataset_from(n, edges, outcomes):
    g = ComparisonGraph.from_edges(n, edges)
    order = {e: k for k, e in enumerate(edges)}
    rows = [outcomes[order[e]] for e in g.edges]
    return ComparisonDataset(g, np.array(rows))


@pytest.fixture
def top_design():
    """30 items at 10, 70 at 7.5, p=0.2, L=200."""
    theta = np.r_[np.full(30, 10.0), np.full(70, 7.5)]
    theta -= theta.mean()
    return theta, simulate_dataset(theta, 0.2, 200, 11)
