import numpy as np
import pytest
from hypothesis import strategies as st

from stratcls.graph import CausalGraph, Edge, Feature


def random_dag(rng, d, density=0.4, scale=1.0, n_desirable=None):
    """DAG whose edges respect a random hidden order."""
    order = rng.permutation(d)
    edges = []
    for a in range(d):
        for b in range(a + 1, d):
            if rng.random() < density:
                edges.append(Edge(int(order[a]), int(order[b]), float(rng.uniform(-scale, scale))))
    k = d // 2 if n_desirable is None else n_desirable
    feats = tuple(Feature(f"f{i}", i < k) for i in range(d))
    return CausalGraph(feats, tuple(edges))


def random_psd(rng, d, rank=None, scale=0.5):
    L = rng.normal(size=(d, rank or d)) * scale
    return L @ L.T


@st.composite
def dags(draw, max_d=8):
    d = draw(st.integers(1, max_d))
    seed = draw(st.integers(0, 2**32 - 1))
    density = draw(st.floats(0.0, 1.0))
    return random_dag(np.random.default_rng(seed), d, density)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
