"""Compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--sides 32,64,128] [--repeat 5]

Prints one line per workload with the best-of-``repeat`` wall time of each
backend, the speedup, and the largest disagreement between their outputs.
"""
import argparse
import time

import numpy as np

from ohmlab import _fallback
from ohmlab.linres import LaplacianPattern
from ohmlab.netgraph import build_box_lattice, build_cycle, build_parallel_series

try:
    from ohmlab import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def pcg_case(side, seed=0):
    net = build_box_lattice(2, side)
    r = np.where(np.random.default_rng(seed).integers(0, 2, net.edge_count) == 1, 2.0, 1.0)
    pat = LaplacianPattern(net.vertex_count, net.u, net.v, ground=net.vertex_count - 1)
    data, diag = pat.assemble(1.0 / r)
    b = np.zeros(pat.n)
    b[0] = 1.0

    def run(mod):
        x = np.zeros(pat.n)
        mod.pcg(pat.indptr, pat.indices, data, diag, b, x, 1e-10, 10 * (pat.n + 1))
        return x

    return f"pcg  2-d box side {side:<4d} n={pat.n}", run


def enum_case(net, s, t, label):
    cu = np.ascontiguousarray(net.u, dtype=np.int64)
    cv = np.ascontiguousarray(net.v, dtype=np.int64)

    def run(mod):
        out = np.empty(1 << net.edge_count)
        mod.enumerate_resistance(cu, cv, net.vertex_count, s, t, 1.0, 2.0, out)
        return out

    return f"enum {label:<18s} 2^{net.edge_count}", run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sides", default="32,64,128")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; nothing to compare")
        return
    cases = [pcg_case(int(s)) for s in args.sides.split(",")]
    cases.append(enum_case(build_box_lattice(2, 2), 0, 8, "2x2 grid"))
    cases.append(enum_case(build_parallel_series(3), 0, 3, "G_3"))
    cases.append(enum_case(build_cycle(14), 0, 7, "14-cycle"))
    print(f"{'workload':<36s} {'compiled':>10s} {'fallback':>10s} {'speedup':>8s} {'max diff':>10s}")
    for label, run in cases:
        tc, xc = best_of(lambda: run(_kernels), args.repeat)
        tf, xf = best_of(lambda: run(_fallback), args.repeat)
        diff = float(np.max(np.abs(xc - xf)))
        print(f"{label:<36s} {tc:10.4f} {tf:10.4f} {tf / tc:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
