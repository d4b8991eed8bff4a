import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import hand_enumeration

from ohmlab.errors import PreconditionError
from ohmlab.influence import (
    FSBoundInputs,
    LeftRight,
    PointToPoint,
    PResistance,
    check_efron_stein,
    check_energy_bound,
    check_flip_bound,
    check_fs_inequality,
    discrete_gradient,
    exhaustive_analysis,
    fs_variance_bound,
    mc_influence,
    far_edge_variance_bound,
    report_from_values,
    submean_bound_constant,
)
from ohmlab.netgraph import (
    Network,
    TerminalPair,
    build_box_lattice,
    build_cycle,
    build_parallel,
    build_parallel_series,
    build_path,
)
from ohmlab.randomenv import Bernoulli


def parallel_pair(env):
    r1, r2 = env
    return r1 * r2 / (r1 + r2)


def test_two_parallel_edges_by_hand():
    rep = exhaustive_analysis(build_parallel(2), PointToPoint(0, 1), 1.0, 2.0)
    mean, var, l1, l2 = hand_enumeration(parallel_pair, 2, 1.0, 2.0)
    assert rep.mean == pytest.approx(mean, abs=1e-15) and rep.mean == pytest.approx(17 / 24)
    assert rep.variance == pytest.approx(var, abs=1e-15) and rep.variance == pytest.approx(19 / 576)
    assert np.allclose(rep.per_edge_l1, l1) and np.allclose(rep.per_edge_l2sq, l2)
    assert rep.sum_l1_sq == pytest.approx(1 / 32)
    assert rep.sum_l2sq == pytest.approx(5 / 144)


def test_two_parallel_fs_value():
    rep = exhaustive_analysis(build_parallel(2), PointToPoint(0, 1), 1.0, 2.0)
    chk = check_fs_inequality(rep)
    want = (19 / 576) * math.log((19 / 576) / (1 / 32))
    assert chk.lhs == pytest.approx(want, rel=1e-12)
    assert chk.lhs == pytest.approx(0.0017834673682903474, rel=1e-12)
    assert chk.holds and not chk.vacuous


def test_triangle_by_hand():
    def f(env):
        r0, r1, r2 = env  # edges (0,1), (1,2), (0,2)
        return r2 * (r0 + r1) / (r0 + r1 + r2)

    rep = exhaustive_analysis(build_cycle(3), PointToPoint(0, 2), 1.0, 3.0)
    mean, var, l1, l2 = hand_enumeration(f, 3, 1.0, 3.0)
    assert rep.mean == pytest.approx(mean, rel=1e-12)
    assert rep.variance == pytest.approx(var, rel=1e-12)
    assert np.allclose(rep.per_edge_l1, l1, rtol=1e-12)
    assert np.allclose(rep.per_edge_l2sq, l2, rtol=1e-12)


@pytest.mark.parametrize("n", [1, 3, 7])
def test_path_law(n):
    rep = exhaustive_analysis(build_path(n), PointToPoint(0, n), 1.0, 3.0)
    assert rep.mean == pytest.approx(2 * n, rel=1e-12)
    assert rep.variance == pytest.approx(n, rel=1e-12)
    # every edge contributes exactly (b-a)/2 to every gradient
    assert np.allclose(rep.per_edge_l1, 1.0)


def test_left_right_observable():
    net = build_box_lattice(2, 1)
    rep = exhaustive_analysis(net, LeftRight(1), 1.0, 1.0)
    assert rep.mean == pytest.approx(0.5) and rep.variance == pytest.approx(0.0, abs=1e-15)
    chk = check_fs_inequality(rep)
    assert chk.holds and chk.vacuous


def test_p_observable_matches_linear_at_p2():
    net = build_cycle(4)
    lin = exhaustive_analysis(net, PointToPoint(0, 2), 1.0, 2.0)
    nonlin = exhaustive_analysis(net, PResistance(0, 2, 2.0), 1.0, 2.0)
    assert np.allclose(lin.values, nonlin.values, rtol=1e-8)


def test_discrete_gradient_antisymmetric():
    net = build_box_lattice(2, 2)
    obs = PointToPoint(0, 8)
    r = np.where(np.arange(net.edge_count) % 3 == 0, 2.0, 1.0)
    for e in range(net.edge_count):
        g = discrete_gradient(net, obs, r, e, 1.0, 2.0)
        flipped = r.copy()
        flipped[e] = 3.0 - r[e]
        assert discrete_gradient(net, obs, flipped, e, 1.0, 2.0) == pytest.approx(-g)


def test_enumeration_agrees_with_direct_evaluation():
    net = build_box_lattice(2, 2)
    obs = PointToPoint(0, 8)
    rep = exhaustive_analysis(net, obs, 1.0, 2.0)
    f = obs.evaluator(net)
    rng = np.random.default_rng(0)
    for mask in rng.integers(0, 1 << net.edge_count, size=20):
        r = np.where((int(mask) >> np.arange(net.edge_count)) & 1, 2.0, 1.0)
        assert rep.values[mask] == pytest.approx(f(r), rel=1e-12)


def test_terminal_merging_in_enumeration():
    # sources {0, 1} joined by an internal edge that must not matter
    net = Network(4, [0, 0, 1, 2], [1, 2, 3, 3])
    rep = exhaustive_analysis(net, PointToPoint(frozenset({0, 1}), 3), 1.0, 2.0)
    assert rep.per_edge_l1[0] == 0.0 and rep.per_edge_l2sq[0] == 0.0


def test_edge_limit():
    with pytest.raises(PreconditionError):
        exhaustive_analysis(build_box_lattice(2, 3), PointToPoint(0, 15), 1.0, 2.0)


def test_flip_bound_and_flows():
    net = build_box_lattice(2, 2)
    rep = exhaustive_analysis(net, PointToPoint(0, 8), 1.0, 2.0, with_flows=True)
    assert rep.flows.shape == (1 << 12, 12)
    assert check_flip_bound(rep, 12, 1.0, 2.0).holds
    with pytest.raises(PreconditionError):
        check_flip_bound(exhaustive_analysis(net, PointToPoint(0, 8), 1.0, 2.0), 12, 1.0, 2.0)


@pytest.mark.parametrize(
    "net,obs",
    [
        (build_box_lattice(2, 2), PointToPoint(0, 8)),
        (build_parallel(2), PointToPoint(0, 1)),
        (build_parallel_series(2), PointToPoint(0, 2)),
        (build_cycle(3), PointToPoint(0, 2)),
    ],
)
@pytest.mark.parametrize("a,b", [(1.0, 2.0), (0.5, 4.0)])
def test_inequality_suite(net, obs, a, b):
    rep = exhaustive_analysis(net, obs, a, b)
    assert check_efron_stein(rep).holds
    assert check_fs_inequality(rep).holds
    assert check_energy_bound(rep, a, b).holds


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=8, max_size=8))
def test_efron_stein_for_arbitrary_functions(vals):
    rep = report_from_values(np.array(vals), 3)
    assert check_efron_stein(rep).holds
    if rep.sum_l1_sq > 0:
        assert check_fs_inequality(rep).holds


def test_variance_formulas_agree():
    rep = exhaustive_analysis(build_box_lattice(2, 2), PointToPoint(0, 8), 1.0, 2.0)
    assert rep.second_moment_variance == pytest.approx(rep.variance, rel=1e-9)


def test_fs_bound_value():
    assert fs_variance_bound(FSBoundInputs(1.0, math.e**2)) == pytest.approx(2 * math.e**2 / math.log(math.e**2 / 2))
    assert fs_variance_bound(FSBoundInputs(1.0, math.e**2)) == pytest.approx(11.3075, rel=1e-4)
    with pytest.raises(PreconditionError):
        fs_variance_bound(FSBoundInputs(1.0, 2.0))


def test_submean_constant():
    assert submean_bound_constant(1, 2) == math.e
    assert submean_bound_constant(1, 5) == 8.0


def test_mc_influence_close_to_exact():
    net = build_box_lattice(2, 2)
    obs = PointToPoint(0, 8)
    exact = exhaustive_analysis(net, obs, 1.0, 2.0)
    est = mc_influence(net, obs, Bernoulli(1, 2), [0, 5], 2000, seed=3)
    for e in est:
        assert abs(e.l1 - exact.per_edge_l1[e.edge]) < 4 * e.l1_se + 1e-12
        assert abs(e.l2sq - exact.per_edge_l2sq[e.edge]) < 4 * e.l2sq_se + 1e-12


def test_far_edge_variance_bound():
    net = build_box_lattice(2, 6)
    obs = PointToPoint(net.index_of((2, 3)), net.index_of((4, 3)))
    lo = np.minimum(net.coords[net.u], net.coords[net.v])
    far = np.flatnonzero(np.abs(lo - 3).max(axis=1) >= 3)
    res = far_edge_variance_bound(net, obs, 1.0, 1.1, far, 20, seed=0)
    assert 0 < res.alpha_m < 1 and res.beta_m > 0
    assert res.applicable == (res.epsilon_m < 1)
    with pytest.raises(PreconditionError):
        far_edge_variance_bound(net, obs, 1.0, 2.0, [], 20, 0)
    # terminal pair sanity
    assert isinstance(obs.terminals(net), TerminalPair)


def test_left_right_side_is_checked():
    with pytest.raises(PreconditionError):
        LeftRight(3).terminals(build_box_lattice(2, 2))
