"""Discrete gradients and edge influences on the cube {a,b}^E.

``Delta_e f(r) = (f(r) - f(sigma_e r)) / 2`` where ``sigma_e`` swaps ``r_e``
between ``a`` and ``b``. Exhaustive analysis evaluates ``f`` on all ``2^|E|``
environments and derives exact means, variances and per-edge norms; the
Monte Carlo variants estimate the same quantities on larger graphs.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from ohmlab import kernels
from ohmlab.errors import PreconditionError
from ohmlab.linres import ResistanceSolver
from ohmlab.netgraph import Network, TerminalPair, left_right_terminals
from ohmlab.pres import p_resistance
from ohmlab.randomenv import Bernoulli, Environment, SeedSpec, flip_edge, mask_environment

MAX_EXHAUSTIVE_EDGES = 20
ABS_SLACK = 1e-9
REL_SLACK = 1e-6


# --- observables ----------------------------------------------------------

@dataclass(frozen=True)
class PointToPoint:
    """Effective resistance between two vertices (or vertex sets)."""

    source: int | frozenset
    sink: int | frozenset
    linear = True

    def terminals(self, net: Network) -> TerminalPair:
        return TerminalPair(self.source, self.sink)

    def evaluator(self, net: Network) -> Callable[[np.ndarray], float]:
        solver = ResistanceSolver(net, self.terminals(net))
        return lambda r: solver.value(r)


@dataclass(frozen=True)
class LeftRight:
    """Left-right resistance of the 2-d box of side ``side``."""

    side: int
    linear = True

    def terminals(self, net: Network) -> TerminalPair:
        if net.coords is None or net.coords.shape[1] != 2 or int(np.ptp(net.coords[:, 0])) != self.side:
            raise PreconditionError(f"network is not a 2-d box of side {self.side}")
        return left_right_terminals(net)

    def evaluator(self, net: Network) -> Callable[[np.ndarray], float]:
        solver = ResistanceSolver(net, self.terminals(net))
        return lambda r: solver.value(r)


@dataclass(frozen=True)
class PResistance:
    source: int
    sink: int
    p: float
    linear = False

    def terminals(self, net: Network) -> TerminalPair:
        return TerminalPair(self.source, self.sink)

    def evaluator(self, net: Network) -> Callable[[np.ndarray], float]:
        t = self.terminals(net)
        solver = ResistanceSolver(net, t)
        return lambda r: p_resistance(net, r, t, self.p, solver=solver).value


Observable = Union[PointToPoint, LeftRight, PResistance]


def _r(env) -> np.ndarray:
    return env.resistances if isinstance(env, Environment) else np.asarray(env, dtype=float)


def discrete_gradient(net: Network, obs: Observable, env, e: int, a: float, b: float) -> float:
    """``(f(r) - f(sigma_e r)) / 2``."""
    f = obs.evaluator(net)
    env = env if isinstance(env, Environment) else Environment(env)
    return 0.5 * (f(env.resistances) - f(flip_edge(env, e, a, b).resistances))


# --- exhaustive analysis ----------------------------------------------------

@dataclass(eq=False)
class InfluenceReport:
    variance: float
    mean: float
    per_edge_l1: np.ndarray
    per_edge_l2sq: np.ndarray
    sum_l1_sq: float
    sum_l2sq: float
    exact: bool
    replicas: int | None = None
    second_moment_variance: float | None = None
    values: np.ndarray | None = field(default=None, repr=False)
    flows: np.ndarray | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "variance": self.variance,
            "sum_l1_sq": self.sum_l1_sq,
            "sum_l2sq": self.sum_l2sq,
            "per_edge_l1": [float(x) for x in self.per_edge_l1],
            "per_edge_l2sq": [float(x) for x in self.per_edge_l2sq],
            "exact": self.exact,
            "replicas": self.replicas,
        }

    def edge_table_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["edge_id", "l1", "l2sq"])
        for k, (l1, l2) in enumerate(zip(self.per_edge_l1, self.per_edge_l2sq)):
            w.writerow([k, repr(float(l1)), repr(float(l2))])
        return buf.getvalue()


def _enumerate_linear(net: Network, obs: Observable, a: float, b: float, with_flows: bool):
    solver = ResistanceSolver(net, obs.terminals(net))
    con = solver.contraction
    active = solver._active_index
    cnet = con.network
    edge_active = active[cnet.u] >= 0
    cu = np.ascontiguousarray(active[cnet.u[edge_active]], dtype=np.int64)
    cv = np.ascontiguousarray(active[cnet.v[edge_active]], dtype=np.int64)
    orig = solver._edge_orig
    n_active = int((active >= 0).sum())
    s = int(active[con.source])
    t = int(active[con.sink])
    k = len(cu)
    g = np.empty(1 << k)
    gtheta = np.empty((1 << k, k)) if with_flows else None
    kernels.enumerate_resistance(cu, cv, n_active, s, t, float(a), float(b), g, gtheta)
    m = net.edge_count
    masks = np.arange(1 << m, dtype=np.int64)
    amask = np.zeros(1 << m, dtype=np.int64)
    for j, e in enumerate(orig):
        amask |= ((masks >> int(e)) & 1) << j
    values = g[amask]
    flows = None
    if with_flows:
        flows = np.zeros((1 << m, m))
        flows[:, orig] = gtheta[amask]
    return values, flows


def evaluate_all(net: Network, obs: Observable, a: float, b: float, with_flows: bool = False,
                 max_edges: int = MAX_EXHAUSTIVE_EDGES):
    """``f`` on every environment of {a,b}^E, indexed by bitmask (bit e set <=> r_e = b)."""
    m = net.edge_count
    if m > max_edges:
        raise PreconditionError(f"{m} edges exceeds the exhaustive limit of {max_edges}")
    if not 0 < a <= b:
        raise PreconditionError("need 0 < a <= b")
    if obs.linear:
        return _enumerate_linear(net, obs, a, b, with_flows)
    if with_flows:
        raise PreconditionError("flows are only recorded for linear observables")
    f = obs.evaluator(net)
    return np.array([f(mask_environment(mask, m, a, b)) for mask in range(1 << m)]), None


def report_from_values(values: np.ndarray, n_edges: int) -> InfluenceReport:
    """Exact report from ``f`` tabulated on all ``2^n_edges`` bitmasks."""
    size = 1 << n_edges
    if values.shape != (size,):
        raise PreconditionError("need one value per environment")
    mean = math.fsum(values.tolist()) / size
    dev = values - mean
    variance = math.fsum((dev * dev).tolist()) / size
    second = math.fsum((values * values).tolist()) / size - mean * mean
    masks = np.arange(size)
    l1 = np.empty(n_edges)
    l2 = np.empty(n_edges)
    for e in range(n_edges):
        delta = 0.5 * (values - values[masks ^ (1 << e)])
        l1[e] = math.fsum(np.abs(delta).tolist()) / size
        l2[e] = math.fsum((delta * delta).tolist()) / size
    return InfluenceReport(
        variance=variance,
        mean=mean,
        per_edge_l1=l1,
        per_edge_l2sq=l2,
        sum_l1_sq=math.fsum((l1 * l1).tolist()),
        sum_l2sq=math.fsum(l2.tolist()),
        exact=True,
        second_moment_variance=second,
        values=values,
    )


def exhaustive_analysis(net: Network, obs: Observable, a: float, b: float, with_flows: bool = False,
                        max_edges: int = MAX_EXHAUSTIVE_EDGES) -> InfluenceReport:
    """Exact mean, variance and edge influences under the uniform measure on {a,b}^E."""
    values, flows = evaluate_all(net, obs, a, b, with_flows, max_edges)
    rep = report_from_values(values, net.edge_count)
    rep.flows = flows
    return rep


# --- inequality checks --------------------------------------------------------

@dataclass(frozen=True)
class InequalityCheck:
    lhs: float
    rhs: float
    holds: bool
    vacuous: bool = False

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds, "vacuous": self.vacuous}


def _le(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + ABS_SLACK + REL_SLACK * max(abs(lhs), abs(rhs))


def check_efron_stein(report: InfluenceReport) -> InequalityCheck:
    """``Var f <= sum_e ||Delta_e f||_2^2``."""
    return InequalityCheck(report.variance, report.sum_l2sq, _le(report.variance, report.sum_l2sq))


def check_fs_inequality(report: InfluenceReport) -> InequalityCheck:
    """``Var f * log(Var f / sum ||Delta_e f||_1^2) <= 2 sum ||Delta_e f||_2^2``.

    Vacuous (reported as holding) when ``Var f <= sum ||Delta_e f||_1^2``.
    """
    var, s1, s2 = report.variance, report.sum_l1_sq, report.sum_l2sq
    rhs = 2.0 * s2
    if s1 <= 0.0:
        if var <= ABS_SLACK:
            return InequalityCheck(0.0, rhs, True, vacuous=True)
        raise PreconditionError("zero influences with positive variance")
    lhs = var * math.log(var / s1) if var > 0 else 0.0
    return InequalityCheck(lhs, rhs, _le(lhs, rhs), vacuous=var <= s1)


def check_energy_bound(report: InfluenceReport, a: float, b: float) -> InequalityCheck:
    """``sum_e ||Delta_e f||_2^2 <= (b-a)^2 / (2a) * E f``."""
    rhs = (b - a) ** 2 / (2 * a) * report.mean
    return InequalityCheck(report.sum_l2sq, rhs, _le(report.sum_l2sq, rhs))


def check_flip_bound(report: InfluenceReport, n_edges: int, a: float, b: float) -> InequalityCheck:
    """Worst case over environments and edges of ``f(sigma_e r) - f(r) - (b-a) theta_r(e)^2`` for ``r_e = a``.

    ``lhs`` is the largest excess (should be <= 0 up to solver precision).
    """
    if report.values is None or report.flows is None:
        raise PreconditionError("report needs values and flows (exhaustive_analysis(..., with_flows=True))")
    f, th = report.values, report.flows
    masks = np.arange(1 << n_edges)
    worst = -math.inf
    for e in range(n_edges):
        low = masks[((masks >> e) & 1) == 0]
        excess = f[low | (1 << e)] - f[low] - (b - a) * th[low, e] ** 2
        worst = max(worst, float(excess.max()))
    scale = float(np.abs(f).max())
    return InequalityCheck(worst, 0.0, worst <= ABS_SLACK + REL_SLACK * scale)


@dataclass(frozen=True)
class FSBoundInputs:
    """Upper bounds ``e1 >= sum ||Delta f||_1^2`` and ``e2 >= sum ||Delta f||_2^2``."""

    e1: float
    e2: float


def fs_variance_bound(inputs: FSBoundInputs) -> float:
    """``2 e2 / log(e2 / (e1 log(e2/e1)))``, valid when ``e2/e1 >= e``."""
    e1, e2 = inputs.e1, inputs.e2
    if not (e1 > 0 and e2 > 0):
        raise PreconditionError("e1 and e2 must be positive")
    ratio = e2 / e1
    if ratio < math.e * (1 - 1e-12):
        raise PreconditionError(f"e2/e1 = {ratio:.6g} is below e")
    ratio = max(ratio, math.e)
    inner = ratio / math.log(ratio)
    if not inner > 1:
        raise PreconditionError("inner logarithm argument must exceed 1")
    return 2.0 * e2 / math.log(inner)


# --- Monte Carlo ------------------------------------------------------------------

@dataclass(frozen=True)
class EdgeInfluence:
    edge: int
    l1: float
    l1_se: float
    l2sq: float
    l2sq_se: float


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def mc_influence(
    net: Network,
    obs: Observable,
    dist: Bernoulli,
    edges: Sequence[int],
    replicas: int,
    seed: int,
) -> list[EdgeInfluence]:
    """Sample means (with standard errors) of ``|Delta_e f|`` and ``(Delta_e f)^2``."""
    if replicas < 2:
        raise PreconditionError("need at least 2 replicas")
    if not isinstance(dist, Bernoulli):
        raise PreconditionError("edge flips need a Bernoulli distribution")
    edges = [int(e) for e in edges]
    if not edges:
        return []
    f = obs.evaluator(net)
    root = SeedSpec(seed)
    deltas = np.empty((replicas, len(edges)))
    for k in range(replicas):
        r = dist.sample(root.child(k).rng(), net.edge_count)
        f0 = f(r)
        for j, e in enumerate(edges):
            flipped = r.copy()
            flipped[e] = dist.b if r[e] == dist.a else dist.a
            deltas[k, j] = 0.5 * (f0 - f(flipped))
    out = []
    for j, e in enumerate(edges):
        l1, l1_se = _mean_se(np.abs(deltas[:, j]))
        l2, l2_se = _mean_se(deltas[:, j] ** 2)
        out.append(EdgeInfluence(e, l1, l1_se, l2, l2_se))
    return out


@dataclass(frozen=True)
class FarEdgeBound:
    alpha_m: float
    beta_m: float
    epsilon_m: float
    bound: float | None
    applicable: bool
    mean_resistance: float
    replicas: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def submean_bound_constant(a: float, b: float) -> float:
    """``K = max((b-a)^2 / (2a), e)``."""
    return max((b - a) ** 2 / (2 * a), math.e)


def far_edge_variance_bound(
    net: Network,
    obs: PointToPoint | LeftRight,
    a: float,
    b: float,
    far_edges: Sequence[int],
    mc_replicas: int,
    seed: int,
) -> FarEdgeBound:
    """Monte Carlo evaluation of the far-edge variance bound.

    ``far_edges`` is ``E_m``; its complement (the near edges) must be finite,
    which on a finite network it always is. ``alpha_m`` is the largest estimated
    ``E[r_e theta_r(e)^2]`` over ``E_m`` and ``beta_m = |E_m^c| / E[R]``.
    """
    far = np.unique(np.asarray(list(far_edges), dtype=np.int64))
    if far.size == 0:
        raise PreconditionError("E_m must be non-empty")
    if far.min() < 0 or far.max() >= net.edge_count:
        raise PreconditionError("edge id out of range")
    if mc_replicas < 2:
        raise PreconditionError("need at least 2 replicas")
    dist = Bernoulli(a, b)
    solver = ResistanceSolver(net, obs.terminals(net))
    root = SeedSpec(seed)
    energy = np.zeros(far.size)
    total_r = []
    for k in range(mc_replicas):
        r = dist.sample(root.child(k).rng(), net.edge_count)
        res = solver.solve(r)
        energy += r[far] * res.flow.theta[far] ** 2
        total_r.append(res.value)
    alpha = float((energy / mc_replicas).max())
    mean_r = math.fsum(total_r) / mc_replicas
    beta = (net.edge_count - far.size) / mean_r
    eps = ((b - a) / a) ** 2 * alpha + (b - a) ** 2 * beta
    K = submean_bound_constant(a, b)
    bound = None
    if eps < 1:
        bound = 0.0 if eps == 0 else 2 * K * mean_r / math.log(K / (eps * math.log(K / eps)))
    return FarEdgeBound(alpha, beta, eps, bound, eps < 1, mean_r, mc_replicas)
