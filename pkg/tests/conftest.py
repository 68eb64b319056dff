import numpy as np
import pytest

from modsig import CommunityAssignment, EdgeModel, Graph, build_graph, estimate_pi


def random_pi(rng, n, lo=0.2, hi=2.0):
    return rng.uniform(lo, hi, n)


def random_assignment(rng, n, k):
    groups = rng.integers(0, k, n)
    groups[:k] = np.arange(k)  # every group non-empty
    return CommunityAssignment.from_values(groups.tolist())


def poisson_graph(rng, pi, labels=None):
    n = pi.size
    i, j = np.triu_indices(n, 1)
    w = rng.poisson(pi[i] * pi[j]).astype(float)
    return Graph.from_arrays(labels or [str(k) for k in range(n)], i, j, w)


MODELS = [EdgeModel.bernoulli(), EdgeModel.poisson(), EdgeModel.negbin(0.7)]


@pytest.fixture
def path():
    return build_graph([("a", "b", 1), ("b", "c", 1)])


@pytest.fixture
def path_split():
    return CommunityAssignment.from_values(["x", "x", "y"])


@pytest.fixture
def path_pi(path):
    return estimate_pi(path)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split("criterion")[1].split()[0])):
        terminalreporter.write_line(line)
