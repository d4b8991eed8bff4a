import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ohmlab.errors import PreconditionError
from ohmlab.netgraph import (
    Network,
    TerminalPair,
    build_box_lattice,
    build_cycle,
    build_parallel,
    build_parallel_series,
    build_path,
    build_rect_lattice,
    component_labels,
    connectivity_check,
    contract_terminals,
    lattice_neighbours,
    left_right_terminals,
)


@pytest.mark.parametrize("d,side", [(1, 5), (2, 1), (2, 4), (3, 3), (4, 2)])
def test_box_counts(d, side):
    net = build_box_lattice(d, side)
    assert net.vertex_count == (side + 1) ** d
    assert net.edge_count == d * side * (side + 1) ** (d - 1)
    assert net.dim == d


def test_box_degrees_interior():
    net = build_box_lattice(3, 4)
    deg = net.degree()
    interior = np.all((net.coords > 0) & (net.coords < 4), axis=1)
    assert np.all(deg[interior] == 6)
    corners = np.all((net.coords == 0) | (net.coords == 4), axis=1)
    assert np.all(deg[corners] == 3)


def test_box_rejects_bad_arguments():
    with pytest.raises(PreconditionError):
        build_box_lattice(5, 2)
    with pytest.raises(PreconditionError):
        build_box_lattice(2, 0)


def test_rect_lattice_is_c_ordered():
    net = build_rect_lattice([-1, -2], [1, 2])
    assert net.coords[0].tolist() == [-1, -2]
    assert net.coords[-1].tolist() == [1, 2]
    assert net.index_of((0, 0)) == 7
    assert np.all(net.u < net.v)


def test_index_of_missing_coordinate():
    with pytest.raises(PreconditionError):
        build_box_lattice(2, 2).index_of((3, 0))


def test_parallel_series_layout():
    net = build_parallel_series(4)
    assert net.vertex_count == 5
    assert net.edge_count == 16
    for i in range(4):
        ids = range(i * i, (i + 1) ** 2)
        assert all(net.u[k] == i and net.v[k] == i + 1 for k in ids)


def test_small_builders():
    assert build_path(3).edges == [(0, 0, 1), (1, 1, 2), (2, 2, 3)]
    assert build_parallel(3).edges == [(0, 0, 1), (1, 0, 1), (2, 0, 1)]
    assert build_cycle(3).edge_count == 3
    with pytest.raises(PreconditionError):
        build_cycle(2)


def test_validation():
    with pytest.raises(PreconditionError):
        Network(2, [0], [0])
    with pytest.raises(PreconditionError):
        Network(2, [0], [2])
    with pytest.raises(PreconditionError):
        Network(2, [0], [1], coords=[[0, 0], [1, 1]])


def test_arrays_are_read_only():
    net = build_path(2)
    with pytest.raises(ValueError):
        net.u[0] = 1


def test_json_round_trip(tmp_path):
    net = build_box_lattice(2, 2)
    path = tmp_path / "net.json"
    net.dump(path)
    back = Network.load(path)
    assert back.vertex_count == net.vertex_count
    assert np.array_equal(back.u, net.u) and np.array_equal(back.v, net.v)
    assert np.array_equal(back.coords, net.coords)
    assert set(json.loads(path.read_text())) == {"vertices", "edges", "coords"}


def test_malformed_json():
    with pytest.raises(PreconditionError):
        Network.from_json({"edges": [[0, 1]]})


def test_terminal_validation():
    net = build_path(2)
    with pytest.raises(PreconditionError):
        TerminalPair(0, 0).validate(net)
    with pytest.raises(PreconditionError):
        TerminalPair([], 1).validate(net)
    with pytest.raises(PreconditionError):
        TerminalPair(0, 7).validate(net)


def test_left_right_terminals():
    net = build_box_lattice(2, 3)
    t = left_right_terminals(net)
    assert len(t.sources) == len(t.sinks) == 4
    assert all(net.coords[x][0] == 0 for x in t.sources)
    assert all(net.coords[x][0] == 3 for x in t.sinks)
    with pytest.raises(PreconditionError):
        left_right_terminals(build_box_lattice(3, 2))


def test_contraction_singletons_unchanged():
    net = build_box_lattice(2, 2)
    con = contract_terminals(net, TerminalPair(0, 8))
    assert con.network.vertex_count == net.vertex_count
    assert con.network.edge_count == net.edge_count
    assert (con.source, con.sink) == (0, 8)


def test_contraction_drops_internal_edges():
    net = build_box_lattice(2, 2)
    con = contract_terminals(net, left_right_terminals(net))
    # each column has 2 vertical edges that vanish
    assert con.network.edge_count == net.edge_count - 4
    assert con.network.vertex_count == net.vertex_count - 4
    assert con.network.coords is None


def test_components():
    net = Network(4, [0, 2], [1, 3])
    labels = component_labels(net)
    assert labels[0] == labels[1] != labels[2] == labels[3]
    assert not connectivity_check(net, TerminalPair(0, 3))
    assert connectivity_check(net, TerminalPair(0, 1))


def test_lattice_neighbours():
    nb = lattice_neighbours(3)
    assert len(nb) == 6 and all(sum(map(abs, e)) == 1 for e in nb)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.lists(st.integers(1, 4), min_size=3, max_size=3))
def test_rect_lattice_edges_are_unit_steps(d, sides):
    net = build_rect_lattice([0] * d, sides[:d])
    assert net.vertex_count == int(np.prod([s + 1 for s in sides[:d]]))
    dist = np.abs(net.coords[net.u] - net.coords[net.v]).sum(axis=1)
    assert np.all(dist == 1)
    assert len({(a, b) for _, a, b in net.edges}) == net.edge_count
