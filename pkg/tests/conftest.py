import sys
from pathlib import Path

import numpy as np
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from ohmlab.netgraph import Network  # noqa: E402


@st.composite
def connected_graphs(draw, max_vertices=7, max_extra=6):
    """Random connected multigraph: a random tree plus extra (possibly parallel) edges."""
    n = draw(st.integers(2, max_vertices))
    edges = [(draw(st.integers(0, k - 1)), k) for k in range(1, n)]
    for _ in range(draw(st.integers(0, max_extra))):
        a = draw(st.integers(0, n - 1))
        b = draw(st.integers(0, n - 1).filter(lambda x: x != a))
        edges.append((min(a, b), max(a, b)))
    u, v = zip(*edges)
    return Network(n, np.array(u), np.array(v))


@st.composite
def graph_env_pair(draw, values=(1, 2, 3), **kw):
    net = draw(connected_graphs(**kw))
    r = draw(st.lists(st.sampled_from(values), min_size=net.edge_count, max_size=net.edge_count))
    x = draw(st.integers(0, net.vertex_count - 1))
    y = draw(st.integers(0, net.vertex_count - 1).filter(lambda k: k != x))
    return net, np.array(r, dtype=float), x, y


_acceptance_lines: list[str] = []


def record_acceptance(line: str) -> None:
    _acceptance_lines.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
