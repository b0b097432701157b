import numpy as np
import pytest

from cisprt.graph import Graph, random_geometric
from cisprt.weights import optimal_constant_weight


@pytest.fixture
def p3():
    return Graph.path(3)


@pytest.fixture(scope="session")
def rgg30():
    g = random_geometric(30, 0.6, seed=3)
    return g, optimal_constant_weight(g)


def random_connected(n, p, rng):
    """Erdos-Renyi draw, retried until connected."""
    from cisprt.graph import is_connected_traversal
    while True:
        a = np.triu((rng.random((n, n)) < p).astype(float), 1)
        g = Graph.from_adjacency(a + a.T)
        if is_connected_traversal(g):
            return g


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """``record(n, ok, detail)`` prints one criterion line and keeps it for the summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(n, ok, detail):
        tag = "PASS" if ok is True else ("FAIL" if ok is False else ok)
        line = f"criterion {n:>4}: {tag:<4}  {detail}"
        print(line)
        lines.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
