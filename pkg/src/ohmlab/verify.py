"""Reduced-scale self-test: every acceptance property, quick enough for a CLI call."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ohmlab.closedform import d1_moments, ps_exact_moments
from ohmlab.experiments import ExperimentConfig, rows_to_csv, run_box_energy, run_point_to_point
from ohmlab.influence import (
    PointToPoint,
    check_efron_stein,
    check_energy_bound,
    check_fs_inequality,
    exhaustive_analysis,
)
from ohmlab.linres import ResistanceSolver, effective_resistance
from ohmlab.netgraph import (
    TerminalPair,
    build_box_lattice,
    build_cycle,
    build_parallel,
    build_parallel_series,
    build_path,
    build_rect_lattice,
    left_right_terminals,
)
from ohmlab.pres import p_resistance, p_triangle_diagnostic
from ohmlab.randomenv import SeedSpec


def _left_right(seed, fault):
    worst = 0.0
    for n in range(1, 17):
        net = build_box_lattice(2, n)
        val = effective_resistance(net, np.ones(net.edge_count), left_right_terminals(net)).value
        worst = max(worst, abs(val - n / (n + 1)) / (n / (n + 1)))
    return worst <= 1e-9, {"max_rel_error": worst}


def _d1_law(seed, fault):
    worst = 0.0
    for n in range(1, 9):
        rep = exhaustive_analysis(build_path(n), PointToPoint(0, n), 1.0, 2.0)
        ref = d1_moments(n, 1.0, 2.0)
        worst = max(worst, abs(rep.mean - ref["mean"]), abs(rep.variance - ref["variance"]))
    return worst <= 1e-10, {"max_abs_error": worst}


def _inequalities(seed, fault):
    graphs = [
        (build_box_lattice(2, 2), PointToPoint(0, 8)),
        (build_parallel(2), PointToPoint(0, 1)),
        (build_parallel_series(2), PointToPoint(0, 2)),
        (build_cycle(3), PointToPoint(0, 2)),
    ]
    bad = 0
    for net, obs in graphs:
        rep = exhaustive_analysis(net, obs, 1.0, 2.0)
        bad += sum(not c.holds for c in (check_efron_stein(rep), check_fs_inequality(rep),
                                         check_energy_bound(rep, 1.0, 2.0)))
    return bad == 0, {"violations": bad}


def _parallel_series(seed, fault):
    rep = exhaustive_analysis(build_parallel_series(3), PointToPoint(0, 3), 0.5, 1.0)
    ex = ps_exact_moments(3, 0.5, 1.0)
    err = max(abs(rep.mean - ex["mean"]), abs(rep.variance - ex["variance"]))
    tail = ps_exact_moments(400, 0.5, 1.0)["variance"] - ps_exact_moments(200, 0.5, 1.0)["variance"]
    return err <= 1e-10 and 0 <= tail <= 1e-5, {"exact_error": err, "variance_tail": tail}


def _flow_metric(seed, fault):
    tol = -1.0 if fault == "flow-bound" else 1e-8
    rng = SeedSpec(seed, 5).rng()
    bad_flow = bad_tri = bad_cmp = 0
    net = build_box_lattice(2, 4)
    ones = np.ones(net.edge_count)
    for _ in range(100):
        r = np.where(rng.integers(0, 2, net.edge_count) == 1, 2.0, 1.0)
        x, y, z = rng.choice(net.vertex_count, size=3, replace=False)
        rxz = effective_resistance(net, r, TerminalPair(x, z))
        ryz = effective_resistance(net, r, TerminalPair(y, z)).value
        rxy = effective_resistance(net, r, TerminalPair(x, y)).value
        bad_flow += np.abs(rxz.flow.theta).max() > 1 + tol
        bad_tri += rxz.value > rxy + ryz + 1e-9
        unit = effective_resistance(net, ones, TerminalPair(x, z)).value
        bad_cmp += not (unit * (1 - 1e-9) <= rxz.value <= 2 * unit * (1 + 1e-9))
    return bad_flow + bad_tri + bad_cmp == 0, {"flow": int(bad_flow), "triangle": int(bad_tri),
                                              "comparison": int(bad_cmp)}


def _p_engine(seed, fault):
    rng = SeedSpec(seed, 6).rng()
    net = build_box_lattice(2, 3)
    worst = 0.0
    bad = 0
    for _ in range(10):
        r = np.where(rng.integers(0, 2, net.edge_count) == 1, 2.0, 1.0)
        x, y, z = (int(i) for i in rng.choice(net.vertex_count, size=3, replace=False))
        lin = effective_resistance(net, r, TerminalPair(x, z)).value
        worst = max(worst, abs(p_resistance(net, r, TerminalPair(x, z), 2.0).value - lin) / lin)
        for p in (1.5, 3.0):
            bad += not p_triangle_diagnostic(net, r, x, y, z, p, 2.0).holds
    two = p_resistance(build_parallel(2), np.ones(2), TerminalPair(0, 1), 3.0).value
    ok = worst <= 1e-6 and bad == 0 and abs(two - 0.25) <= 1e-6
    return ok, {"p2_rel_error": worst, "triangle_violations": bad, "parallel_p3": two}


def _box_energy(seed, fault):
    cfg = ExperimentConfig("boxenergy", distribution="bernoulli:1,2", replicas=20, master_seed=seed)
    bad = sum(run_box_energy(cfg, 8, m, side=16).violations for m in (2, 4))
    return bad == 0, {"violations": bad}


def _adjacent(seed, fault):
    vals = []
    for side in (8, 16, 32):
        h = side // 2
        net = build_rect_lattice([-h, -h], [h, h])
        t = TerminalPair(net.index_of((0, 0)), net.index_of((1, 0)))
        vals.append(ResistanceSolver(net, t).value(np.ones(net.edge_count)))
    ok = all(a > b > 0.5 for a, b in zip(vals, vals[1:])) and vals[-1] - 0.5 < 0.02
    return ok, {"values": vals}


def _determinism(seed, fault):
    cfg = ExperimentConfig("p2p", scales=[4, 8], replicas=20, master_seed=seed)
    one = rows_to_csv(run_point_to_point(cfg, threads=1))
    many = rows_to_csv(run_point_to_point(cfg, threads=4))
    return one == many, {"bytes": len(one)}


CHECKS: dict[str, Callable] = {
    "left_right_exact": _left_right,
    "d1_law": _d1_law,
    "inequality_suite": _inequalities,
    "parallel_series": _parallel_series,
    "flow_and_metric": _flow_metric,
    "p_engine": _p_engine,
    "box_energy": _box_energy,
    "adjacent_vertices": _adjacent,
    "determinism": _determinism,
}


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer, np.bool_)):
        return x.item()
    return x


def run_verify(seed: int = 0, fault: str | None = None) -> dict:
    """Run every check; ``fault='flow-bound'`` corrupts one tolerance as a negative control."""
    results = []
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn(seed, fault)
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, {"error": f"{type(exc).__name__}: {exc}"}
        results.append({"name": name, "passed": bool(ok), "detail": _plain(detail)})
    return {"passed": all(r["passed"] for r in results), "seed": seed, "checks": results}
