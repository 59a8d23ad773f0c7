import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from redistph.graph_core import NodeRecord, build_dual_graph  # noqa: E402


def make_graph(pops, edges, attrs=None):
    """Graph on string ids ``"0".."n-1"``; ``attrs`` maps name -> per-node list."""
    attrs = attrs or {}
    nodes = [
        NodeRecord(str(i), p, {a: float(v[i]) for a, v in attrs.items()}) for i, p in enumerate(pops)
    ]
    return build_dual_graph(nodes, [(str(a), str(b)) for a, b in edges])


def path_edges(n):
    return [(i, i + 1) for i in range(n - 1)]


@pytest.fixture
def graph_factory():
    return make_graph


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
