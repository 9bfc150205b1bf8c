import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from labelprop.graph import from_arrays

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def graphs(draw, min_n=1, max_n=12, weighted=False, loops=False, max_w=5):
    """Small undirected graphs with integer weights."""
    n = draw(st.integers(min_n, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + (0 if loops else 1), n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    ws = [draw(st.integers(1, max_w)) if weighted else 1 for _ in chosen]
    return from_arrays(n, [u for u, _ in chosen], [v for _, v in chosen], ws)


@st.composite
def graph_and_labels(draw, **kw):
    g = draw(graphs(**kw))
    k = draw(st.integers(1, g.n))
    labels = np.array(draw(st.lists(st.integers(0, k - 1), min_size=g.n, max_size=g.n)), dtype=np.int64)
    return g, labels


def random_graph(rng, n, p, weighted=False):
    iu, iv = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    w = rng.integers(1, 4, keep.sum()) if weighted else None
    return from_arrays(n, iu[keep], iv[keep], w)


def path(n):
    return from_arrays(n, range(n - 1), range(1, n))


def cycle(n):
    return from_arrays(n, range(n), [(i + 1) % n for i in range(n)])


def complete(n):
    iu, iv = np.triu_indices(n, 1)
    return from_arrays(n, iu, iv)


def star(leaves):
    return from_arrays(leaves + 1, [0] * leaves, range(1, leaves + 1))


def complete_bipartite(a, b):
    u = [i for i in range(a) for _ in range(b)]
    v = [a + j for _ in range(a) for j in range(b)]
    return from_arrays(a + b, u, v, node_types=[0] * a + [1] * b)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail=""):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
