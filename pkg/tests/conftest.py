import os

# single-threaded BLAS keeps floating-point reductions reproducible
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spectral_gn.graph import Graph, symmetric_edges

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def undirected(n, pairs, **kw):
    """Graph on ``n`` vertices with both directions of every pair."""
    return Graph.from_edges(n, symmetric_edges(pairs), **kw)


def path_graph(n, **kw):
    return undirected(n, [(i, i + 1) for i in range(n - 1)], **kw)


def cycle_graph(n, **kw):
    return undirected(n, [(i, (i + 1) % n) for i in range(n)], **kw)


def complete_graph(n, **kw):
    return undirected(n, [(i, j) for i in range(n) for j in range(i + 1, n)], **kw)


def random_connected(rng, n, extra=None):
    """Random spanning tree plus ``extra`` random chords."""
    pairs = {(int(rng.integers(0, i)), i) for i in range(1, n)}
    for _ in range(n if extra is None else extra):
        i, j = rng.choice(n, size=2, replace=False)
        pairs.add((int(min(i, j)), int(max(i, j))))
    return undirected(n, sorted(pairs))


def with_features(g, rng, dv=3, de=2, dg=2):
    return g.replace(node_feats=rng.normal(size=(g.n_nodes, dv)), edge_feats=rng.normal(size=(g.n_edges, de)),
                     global_feats=rng.normal(size=dg))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_REPORT = pytest.StashKey[list]()


@pytest.fixture
def acceptance_report(request):
    """Collects ``(criterion, passed, detail)`` lines for the terminal summary."""
    return request.config.stash.setdefault(_REPORT, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_REPORT, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in sorted(lines, key=lambda x: str(x[0])):
        terminalreporter.write_line(f"criterion {name}: {'PASS' if passed else 'FAIL'}  {detail}")
