import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_graph(rng, n, p):
    from pdperm.graphio import Graph

    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return Graph(n, np.column_stack([iu[keep], ju[keep]]))


def random_diagram(rng, n_max=8, kind="ORD0", lo=0.0, hi=5.0):
    from pdperm.persistence import PersistenceDiagram

    n = int(rng.integers(0, n_max + 1))
    b = rng.uniform(lo, hi, n)
    return PersistenceDiagram.from_points(np.column_stack([b, b + rng.uniform(0, 3, n)]), kind)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = [mod.RESULTS[k] for k in sorted(mod.RESULTS)] if mod else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
