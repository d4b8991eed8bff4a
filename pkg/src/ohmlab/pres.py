"""p-resistance: minimal p-energy ``sum_e r_e |theta_e|^p`` over unit flows.

Solved by damped iteratively reweighted least squares. Each step computes the
linear current for edge weights ``r_e p |theta_e|^(p-2)``; moving by
``1/(p-1)`` of the way towards it is exactly a Newton step for the p-energy on
the affine space of unit flows, and the step is halved until the energy drops.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ohmlab.errors import PreconditionError
from ohmlab.linres import ResistanceSolver, UnitFlow, _resistances, check_flow
from ohmlab.netgraph import Network, TerminalPair

P_MAX = 8.0
SMOOTHING = 1e-12
MAX_HALVINGS = 30
WEIGHT_RANGE = 1e6  # wider ranges lose flow accuracy to conditioning, narrower ones bias large p


@dataclass(frozen=True, eq=False)
class PFlowResult:
    value: float
    flow: UnitFlow
    p: float
    iterations: int
    converged: bool
    energy_trace: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "p": self.p,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def p_energy(r: np.ndarray, theta: np.ndarray, p: float) -> float:
    return float(np.dot(r, np.abs(theta) ** p))


def _check_p(p: float) -> None:
    if not 1.0 < p <= P_MAX:
        raise PreconditionError(f"p must lie in (1, {P_MAX:g}], got {p}")


def p_resistance(
    net: Network,
    env,
    t: TerminalPair,
    p: float,
    tol: float = 1e-8,
    max_iter: int = 500,
    solver: ResistanceSolver | None = None,
    first_step: float | None = None,
) -> PFlowResult:
    """Minimize the p-energy over unit flows from ``t.sources`` to ``t.sinks``.

    ``first_step`` overrides the initial damping factor (default ``1/(p-1)``);
    the minimizer does not depend on it.
    """
    _check_p(p)
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    r = _resistances(env)
    solver = solver or ResistanceSolver(net, t)
    theta = solver.solve(r).flow.theta
    energy = p_energy(r, theta, p)
    trace = [energy]
    step0 = 1.0 / (p - 1.0) if first_step is None else float(first_step)
    # floor on |theta| keeps the weight dynamic range bounded for p far from 2
    floor_rel = WEIGHT_RANGE ** (-1.0 / abs(p - 2.0)) if p != 2.0 else 0.0
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        mag = np.abs(theta)
        floor = floor_rel * mag.max()
        w = r * p * (np.maximum(mag, floor) + SMOOTHING) ** (p - 2.0)
        direction = solver.solve(w).flow.theta - theta
        step = step0
        for _ in range(MAX_HALVINGS + 1):
            cand = theta + step * direction
            e_new = p_energy(r, cand, p)
            if e_new <= energy:
                break
            step *= 0.5
        else:
            converged = True  # no descent left at machine precision
            break
        change = (energy - e_new) / energy
        theta, energy = cand, e_new
        trace.append(energy)
        if change < tol:
            converged = True
            break
    diag = check_flow(net, theta, t)
    return PFlowResult(energy, UnitFlow(theta, diag.strength, diag.node_law_residual), p, it, converged, trace)


def p_scaling_reference(d: int, n: int, p: float) -> float:
    """Growth scale of the mean p-resistance on Z^d at distance n.

    ``n^(1-(d-1)(p-1))`` below the critical exponent ``d/(d-1)``, ``log n`` at
    it, and 1 above it.
    """
    if d < 1 or n < 2:
        raise PreconditionError("need d >= 1 and n >= 2")
    if d == 1:
        return float(n)
    crit = d / (d - 1)
    if math.isclose(p, crit, rel_tol=1e-12):
        return math.log(n)
    if p < crit:
        return float(n) ** (1 - (d - 1) * (p - 1))
    return 1.0


@dataclass(frozen=True)
class TriangleCheck:
    lhs: float
    rhs: float
    holds: bool


def p_triangle_diagnostic(
    net: Network, env, x: int, y: int, z: int, p: float, b: float, tol: float = 1e-6
) -> TriangleCheck:
    """Compare ``R^p(x,z)`` with ``R^p(x,y) + 2^p b |z - y|`` (l1 distance)."""
    if net.coords is None:
        raise PreconditionError("the p-triangle diagnostic needs lattice coordinates")
    _check_p(p)

    def rp(s: int, e: int) -> float:
        if s == e:
            return 0.0
        return p_resistance(net, env, TerminalPair(s, e), p).value

    dist = int(np.abs(net.coords[z] - net.coords[y]).sum())
    lhs = rp(x, z)
    rhs = rp(x, y) + 2.0**p * b * dist
    return TriangleCheck(lhs, rhs, lhs <= rhs + tol * max(1.0, abs(rhs)))
