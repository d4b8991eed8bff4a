import math

import numpy as np
import pytest
from conftest import graph_env_pair
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import null_space
from scipy.optimize import minimize

from ohmlab.errors import PreconditionError
from ohmlab.linres import check_flow, effective_resistance
from ohmlab.netgraph import TerminalPair, build_box_lattice, build_parallel, build_path
from ohmlab.pres import p_energy, p_resistance, p_scaling_reference, p_triangle_diagnostic


def parallel_closed_form(r, p):
    """k parallel edges: theta_i proportional to r_i^(-1/(p-1))."""
    q = 1.0 / (p - 1.0)
    return sum(x ** (-q) for x in r) ** (-(p - 1.0))


def scipy_oracle(net, r, t, p):
    """Minimize the p-energy over the affine space of unit flows with a generic optimizer."""
    B = np.zeros((net.vertex_count, net.edge_count))
    B[net.u, np.arange(net.edge_count)] = 1
    B[net.v, np.arange(net.edge_count)] = -1
    theta0 = effective_resistance(net, r, t).flow.theta
    N = null_space(B)
    if N.shape[1] == 0:
        return p_energy(r, theta0, p)
    fun = lambda c: p_energy(r, theta0 + N @ c, p)  # noqa: E731
    jac = lambda c: N.T @ (p * r * np.abs(theta0 + N @ c) ** (p - 1) * np.sign(theta0 + N @ c))  # noqa: E731
    res = minimize(fun, np.zeros(N.shape[1]), jac=jac, method="BFGS", options={"gtol": 1e-12, "maxiter": 5000})
    return res.fun


def test_two_parallel_unit_edges_p3():
    res = p_resistance(build_parallel(2), np.ones(2), TerminalPair(0, 1), 3.0)
    assert res.value == pytest.approx(0.25, abs=1e-6)
    assert res.converged


@pytest.mark.parametrize("p", [1.3, 1.5, 2.5, 3.0, 5.0])
def test_parallel_closed_form(p):
    r = [1.0, 2.0, 3.0, 1.5]
    res = p_resistance(build_parallel(4), np.array(r), TerminalPair(0, 1), p)
    assert res.value == pytest.approx(parallel_closed_form(r, p), rel=1e-6)


def test_series_sums():
    r = np.array([1.0, 2.0, 0.5])
    assert p_resistance(build_path(3), r, TerminalPair(0, 3), 3.5).value == pytest.approx(3.5)


def test_p2_matches_linear():
    net = build_box_lattice(2, 4)
    r = np.where(np.random.default_rng(0).integers(0, 2, net.edge_count) == 1, 2.0, 1.0)
    t = TerminalPair(0, 17)
    assert p_resistance(net, r, t, 2.0).value == pytest.approx(effective_resistance(net, r, t).value, rel=1e-9)


def test_energy_trace_is_monotone_and_flow_is_unit():
    net = build_box_lattice(2, 4)
    r = np.where(np.random.default_rng(5).integers(0, 2, net.edge_count) == 1, 2.0, 1.0)
    t = TerminalPair(0, 24)
    res = p_resistance(net, r, t, 1.5)
    assert all(b <= a for a, b in zip(res.energy_trace, res.energy_trace[1:]))
    diag = check_flow(net, res.flow, t)
    assert diag.strength == pytest.approx(1.0, abs=1e-9)
    assert diag.node_law_residual < 1e-9


def test_result_independent_of_damping():
    net = build_box_lattice(2, 3)
    r = np.where(np.random.default_rng(6).integers(0, 2, net.edge_count) == 1, 2.0, 1.0)
    t = TerminalPair(0, 15)
    base = p_resistance(net, r, t, 3.0, tol=1e-12).value
    alt = p_resistance(net, r, t, 3.0, tol=1e-12, first_step=0.2).value
    assert alt == pytest.approx(base, rel=1e-6)


@pytest.mark.parametrize("p", [1.0, 0.5, 9.0])
def test_rejects_p_out_of_range(p):
    with pytest.raises(PreconditionError):
        p_resistance(build_parallel(2), np.ones(2), TerminalPair(0, 1), p)


def test_non_convergence_is_reported():
    net = build_box_lattice(2, 4)
    res = p_resistance(net, np.ones(net.edge_count), TerminalPair(0, 24), 1.2, tol=1e-15, max_iter=2)
    assert not res.converged and res.iterations == 2


@settings(max_examples=30, deadline=None)
@given(graph_env_pair(max_vertices=6, max_extra=4), st.sampled_from([1.5, 3.0, 4.0]))
def test_against_generic_optimizer(case, p):
    net, r, x, y = case
    t = TerminalPair(x, y)
    got = p_resistance(net, r, t, p, tol=1e-12).value
    assert got == pytest.approx(scipy_oracle(net, r, t, p), rel=1e-5)


@settings(max_examples=30, deadline=None)
@given(graph_env_pair(max_vertices=6, max_extra=4), st.sampled_from([1.5, 2.5, 3.0]), st.floats(0.5, 4))
def test_homogeneity_in_resistance(case, p, c):
    net, r, x, y = case
    t = TerminalPair(x, y)
    a = p_resistance(net, c * r, t, p, tol=1e-12).value
    b = p_resistance(net, r, t, p, tol=1e-12).value
    assert a == pytest.approx(c * b, rel=1e-6)


def test_scaling_reference():
    assert p_scaling_reference(1, 10, 3.0) == 10
    assert p_scaling_reference(2, 16, 2.0) == pytest.approx(math.log(16))
    assert p_scaling_reference(2, 16, 1.5) == pytest.approx(4.0)
    assert p_scaling_reference(3, 16, 2.0) == 1.0
    assert p_scaling_reference(3, 16, 1.5) == pytest.approx(math.log(16))


def test_triangle_diagnostic():
    net = build_box_lattice(2, 3)
    r = np.where(np.random.default_rng(8).integers(0, 2, net.edge_count) == 1, 2.0, 1.0)
    for p in (1.5, 2.0, 3.0):
        chk = p_triangle_diagnostic(net, r, 0, 5, 15, p, 2.0)
        assert chk.holds and chk.lhs > 0
    with pytest.raises(PreconditionError):
        p_triangle_diagnostic(build_parallel(2), np.ones(2), 0, 1, 1, 2.0, 1.0)
