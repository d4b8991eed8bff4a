"""Command-line entry point: ``ohmlab {resist,pres,enumerate,psnet,exp,verify}``.

Exit codes: 0 success, 1 precondition error, 2 numerical non-convergence,
3 I/O error, 64 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Sequence

import numpy as np

from ohmlab.closedform import ps_exact_moments, ps_resistance
from ohmlab.errors import ConvergenceError, OhmlabError, PreconditionError
from ohmlab.experiments import (
    ExperimentConfig,
    ReplicaStats,
    RowAborted,
    rows_to_csv,
    rows_to_json,
    run_averaged_influence,
    run_box_energy,
    run_left_right,
    run_p_scaling,
    run_point_to_point,
    run_shape,
    run_tail,
    tail_to_csv,
)
from ohmlab.influence import (
    PResistance,
    PointToPoint,
    check_efron_stein,
    check_energy_bound,
    check_fs_inequality,
    exhaustive_analysis,
)
from ohmlab.linres import effective_resistance
from ohmlab.netgraph import (
    Network,
    TerminalPair,
    build_box_lattice,
    build_cycle,
    build_parallel,
    build_parallel_series,
    build_path,
    left_right_terminals,
)
from ohmlab.pres import p_resistance
from ohmlab.randomenv import Bernoulli, Environment, SeedSpec, parse_distribution, sample_environment
from ohmlab.verify import run_verify

EXIT_OK, EXIT_PRECONDITION, EXIT_NUMERIC, EXIT_IO, EXIT_USAGE = 0, 1, 2, 3, 64


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _ints(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _default_seed() -> int:
    return int(os.environ.get("OHMLAB_SEED", "0"))


# --- shared argument groups -----------------------------------------------------

def _add_network_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("network")
    g.add_argument("--grid", type=int, help="box [0,N]^d of the lattice")
    g.add_argument("--dim", type=int, default=2, help="lattice dimension for --grid")
    g.add_argument("--path", type=int, help="path with N edges")
    g.add_argument("--psnet", type=int, help="parallel-series network G_N")
    g.add_argument("--parallel", type=int, help="two vertices joined by K parallel edges")
    g.add_argument("--triangle", action="store_true", help="3-cycle")
    g.add_argument("--network", help="network JSON file")
    t = p.add_argument_group("terminals")
    t.add_argument("--left-right", action="store_true", help="left/right columns of a 2-d grid")
    t.add_argument("--source", help="comma-separated source vertex ids")
    t.add_argument("--sink", help="comma-separated sink vertex ids")
    t.add_argument("--source-coord", help="lattice coordinate of the source, e.g. 0,0")
    t.add_argument("--sink-coord", help="lattice coordinate of the sink")


def _add_env_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dist", default="const:1", help="bernoulli:a,b | uniform:lo,hi | const:c")
    p.add_argument("--env", help="environment CSV (edge_id,resistance); overrides --dist")
    p.add_argument("--seed", type=int, default=None, help="master seed (default $OHMLAB_SEED or 0)")
    p.add_argument("--tol", type=float, default=1e-10)


def _add_output_args(p: argparse.ArgumentParser, formats=("text", "json", "csv"), default="text") -> None:
    p.add_argument("--format", choices=formats, default=default)
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--config", help="TOML or JSON file of flag values (flags win)")


def build_network(args) -> Network:
    chosen = [k for k in ("grid", "path", "psnet", "parallel", "network") if getattr(args, k) is not None]
    chosen += ["triangle"] if args.triangle else []
    if len(chosen) != 1:
        raise UsageError("choose exactly one of --grid, --path, --psnet, --parallel, --triangle, --network")
    kind = chosen[0]
    if kind == "grid":
        return build_box_lattice(args.dim, args.grid)
    if kind == "path":
        return build_path(args.path)
    if kind == "psnet":
        return build_parallel_series(args.psnet)
    if kind == "parallel":
        return build_parallel(args.parallel)
    if kind == "triangle":
        return build_cycle(3)
    return Network.load(args.network)


def build_terminals(args, net: Network) -> TerminalPair:
    if args.left_right:
        return left_right_terminals(net)
    src = _ints(args.source) if args.source else None
    snk = _ints(args.sink) if args.sink else None
    if args.source_coord:
        src = [net.index_of(_ints(args.source_coord))]
    if args.sink_coord:
        snk = [net.index_of(_ints(args.sink_coord))]
    return TerminalPair(src if src is not None else 0, snk if snk is not None else net.vertex_count - 1)


def build_environment(args, net: Network) -> Environment:
    if args.env:
        import csv

        with open(args.env) as fh:
            rows = sorted((int(r["edge_id"]), float(r["resistance"])) for r in csv.DictReader(fh))
        if [k for k, _ in rows] != list(range(net.edge_count)):
            raise PreconditionError("environment CSV must list every edge id exactly once")
        return Environment(np.array([x for _, x in rows]))
    return sample_environment(net, parse_distribution(args.dist), SeedSpec(args.seed))


def _flows_csv(theta) -> str:
    lines = ["edge_id,theta"] + [f"{k},{float(x)!r}" for k, x in enumerate(theta)]
    return "\n".join(lines) + "\n"


def _num(x: float) -> str:
    return f"{x:.12g}"


# --- subcommands ----------------------------------------------------------------

def cmd_resist(args) -> tuple[str, int]:
    net = build_network(args)
    env = build_environment(args, net)
    res = effective_resistance(net, env, build_terminals(args, net), args.tol)
    if args.format == "json":
        return json.dumps(res.to_json()) + "\n", EXIT_OK
    if args.format == "csv":
        return _flows_csv(res.flow.theta), EXIT_OK
    return _num(res.value) + "\n", EXIT_OK


def cmd_pres(args) -> tuple[str, int]:
    net = build_network(args)
    env = build_environment(args, net)
    res = p_resistance(net, env, build_terminals(args, net), args.p, args.ptol, args.max_iter)
    code = EXIT_OK if res.converged else EXIT_NUMERIC
    if args.format == "json":
        return json.dumps(res.to_json()) + "\n", code
    if args.format == "csv":
        return _flows_csv(res.flow.theta), code
    return _num(res.value) + "\n", code


def cmd_enumerate(args) -> tuple[str, int]:
    net = build_network(args)
    t = build_terminals(args, net)
    a, b = args.a, args.b
    if len(t.sources) == 1 and len(t.sinks) == 1 and args.p is not None:
        obs = PResistance(min(t.sources), min(t.sinks), args.p)
    elif args.p is not None:
        raise PreconditionError("p-resistance observables need single-vertex terminals")
    else:
        obs = PointToPoint(t.sources, t.sinks)
    rep = exhaustive_analysis(net, obs, a, b, max_edges=args.max_edges)
    if args.format == "csv":
        return rep.edge_table_csv(), EXIT_OK
    out = rep.to_json()
    out["checks"] = {
        "efron_stein": check_efron_stein(rep).to_json(),
        "falik_samorodnitsky": check_fs_inequality(rep).to_json(),
        "energy_bound": check_energy_bound(rep, a, b).to_json(),
    }
    return json.dumps(out, indent=2) + "\n", EXIT_OK


def cmd_psnet(args) -> tuple[str, int]:
    if args.mc:
        dist = Bernoulli(args.a, args.b)
        net = build_parallel_series(args.n)
        root = SeedSpec(args.seed)
        st = ReplicaStats.from_values(
            ps_resistance(dist.sample(root.child(k).rng(), net.edge_count)) for k in range(args.replicas)
        )
        out = {"mean": st.mean, "variance": st.variance,
               "mean_se": math.sqrt(st.variance / st.count), "replicas": st.count}
    else:
        out = ps_exact_moments(args.n, args.a, args.b)
    if args.format == "json":
        return json.dumps(out) + "\n", EXIT_OK
    return "".join(f"{k} {_num(v)}\n" for k, v in out.items()), EXIT_OK


def cmd_exp(args) -> tuple[str, int]:
    cfg = ExperimentConfig(
        kind=args.kind,
        d=args.dim,
        scales=_ints(args.scales),
        distribution=args.dist,
        replicas=args.replicas,
        master_seed=args.seed,
        buffer_factor=args.buffer,
        p=args.p,
        tolerance=args.tol,
        direction=args.direction,
    )
    kind, threads, fmt = args.kind, args.threads, args.format
    if kind in ("p2p", "leftright", "pscaling"):
        runner = {"p2p": run_point_to_point, "leftright": run_left_right, "pscaling": run_p_scaling}[kind]
        rows = runner(cfg, threads=threads)
        return (rows_to_json(rows, cfg) + "\n" if fmt == "json" else rows_to_csv(rows)), EXIT_OK
    if kind == "tail":
        rows = run_tail(cfg, args.v, _floats(args.thresholds), threads=threads)
        if fmt == "json":
            return json.dumps({"config": cfg.to_json(), "rows": [r.__dict__ for r in rows]}, indent=2) + "\n", EXIT_OK
        return tail_to_csv(rows), EXIT_OK
    if kind == "shape":
        res = run_shape(cfg, _floats(args.levels), threads=threads)
        if fmt == "json":
            payload = {"config": cfg.to_json(), "levels": res.levels,
                       "touches_boundary": res.touches_boundary.tolist(),
                       "sandwich_ok": res.sandwich_ok.tolist()}
            return json.dumps(payload, indent=2) + "\n", EXIT_OK
        return res.to_csv(), EXIT_OK
    if kind == "boxenergy":
        reps = [run_box_energy(cfg, args.v, m, side=args.side, pairs=args.pairs).to_json() for m in _ints(args.m)]
        return json.dumps({"config": cfg.to_json(), "results": reps}, indent=2) + "\n", EXIT_OK
    edges = _ints(args.edges) if args.edges else args.n_edges
    reps = [run_averaged_influence(cfg, args.v, m, edges, threads=threads).to_json() for m in _ints(args.m)]
    return json.dumps({"config": cfg.to_json(), "results": reps}, indent=2) + "\n", EXIT_OK


def cmd_verify(args) -> tuple[str, int]:
    report = run_verify(seed=args.seed, fault=args.inject_fault)
    return json.dumps(report, indent=2) + "\n", EXIT_OK if report["passed"] else EXIT_PRECONDITION


# --- parser -------------------------------------------------------------------------

def make_parser() -> Parser:
    parser = Parser(prog="ohmlab", description="Effective resistance of random electric networks")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("resist", help="linear effective resistance")
    _add_network_args(p)
    _add_env_args(p)
    _add_output_args(p)
    p.set_defaults(func=cmd_resist)

    p = sub.add_parser("pres", help="p-resistance")
    _add_network_args(p)
    _add_env_args(p)
    _add_output_args(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--ptol", type=float, default=1e-8, help="relative energy-change tolerance")
    p.add_argument("--max-iter", type=int, default=500)
    p.set_defaults(func=cmd_pres)

    p = sub.add_parser("enumerate", help="exact influence analysis over {a,b}^E")
    _add_network_args(p)
    _add_output_args(p, formats=("json", "csv"), default="json")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=2.0)
    p.add_argument("--p", type=float, default=None, help="analyse p-resistance instead")
    p.add_argument("--max-edges", type=int, default=20)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("psnet", help="parallel-series network moments")
    _add_output_args(p, formats=("text", "json"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--b", type=float, default=1.0)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", default=True)
    mode.add_argument("--mc", action="store_true")
    p.add_argument("--replicas", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_psnet)

    p = sub.add_parser("exp", help="Monte Carlo experiment campaigns")
    p.add_argument("kind", choices=["p2p", "leftright", "tail", "shape", "pscaling", "boxenergy", "avginfluence"])
    _add_output_args(p, formats=("csv", "json"), default="csv")
    p.add_argument("--dist", default="bernoulli:1,2")
    p.add_argument("--replicas", type=int, default=500)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--buffer", type=float, default=1.0)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--scales", default="8,16,32,64", help="|v| values or box sides")
    p.add_argument("--direction", choices=["axis", "diagonal"], default="axis")
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--v", type=int, default=16, help="|v| for tail, boxenergy, avginfluence")
    p.add_argument("--m", default="2,4,8", help="box sides for boxenergy / avginfluence")
    p.add_argument("--side", type=int, default=32, help="lattice box side for boxenergy")
    p.add_argument("--pairs", type=int, default=None, help="(environment, box) pairs for boxenergy")
    p.add_argument("--thresholds", default="0,0.5,1,1.5,2,3")
    p.add_argument("--levels", default="0.5,1,1.5,2")
    p.add_argument("--edges", default=None, help="edge ids for avginfluence")
    p.add_argument("--n-edges", type=int, default=8, help="number of random edges for avginfluence")
    p.set_defaults(func=cmd_exp)

    p = sub.add_parser("verify", help="run the reduced-scale self-test")
    _add_output_args(p, formats=("json",), default="json")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--inject-fault", choices=["flow-bound"], default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def _load_config(path: str) -> dict:
    with open(path, "rb") as fh:
        raw = fh.read()
    if path.endswith(".json"):
        return json.loads(raw)
    try:
        import tomllib
    except ImportError:  # Python < 3.11
        import tomli as tomllib
    return tomllib.loads(raw.decode())


def parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = make_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = _load_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            raise PreconditionError(f"unknown config keys: {', '.join(sorted(unknown))}")
        # config values become defaults, so explicit flags still win
        sub.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        args = parser.parse_args(argv)
    if getattr(args, "seed", "absent") is None:
        args.seed = _default_seed()
    return args


def _resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
    except (OSError, ValueError) as exc:
        if isinstance(exc, PreconditionError):
            print(f"ohmlab: {exc}", file=sys.stderr)
            return EXIT_PRECONDITION
        print(f"ohmlab: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    print("# config: " + json.dumps(_resolved(args), default=str), file=sys.stderr)
    try:
        text, code = args.func(args)
    except UsageError as exc:
        print(f"ohmlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, RowAborted) as exc:
        print(f"ohmlab: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (PreconditionError, OhmlabError) as exc:
        print(f"ohmlab: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"ohmlab: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"ohmlab: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
