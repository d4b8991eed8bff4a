"""Seeded Monte Carlo campaigns on lattice boxes.

Every replica draws its environment from its own stream
``SeedSpec(master_seed, stream).child(replica)``, so replicas can run in any
order on any number of threads; statistics are folded in replica order, which
makes the output independent of the thread count.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from ohmlab.errors import OhmlabError, PreconditionError
from ohmlab.linres import DEFAULT_TOL, ResistanceSolver, pairwise_resistances
from ohmlab.netgraph import Network, TerminalPair, build_box_lattice, build_rect_lattice, left_right_terminals
from ohmlab.pres import p_resistance, p_scaling_reference
from ohmlab.randomenv import Bernoulli, Constant, Distribution, SeedSpec, parse_distribution

log = logging.getLogger(__name__)

Z95 = 1.959963984540054
MAX_FAILURE_RATE = 0.01
SENSITIVITY_LIMIT = 0.01
CSV_HEADER = ["scale", "mean", "mean_lo", "mean_hi", "var", "var_lo", "var_hi", "replicas", "reference", "sensitivity_flag"]
KINDS = ("p2p", "leftright", "tail", "shape", "pscaling", "boxenergy", "avginfluence")


class RowAborted(OhmlabError):
    """More than 1% of a row's replicas failed."""


@dataclass
class ExperimentConfig:
    kind: str
    d: int = 2
    scales: list = field(default_factory=lambda: [8, 16, 32, 64])
    distribution: str = "bernoulli:1,2"
    replicas: int = 500
    master_seed: int = 0
    buffer_factor: float = 1.0
    p: float | None = None
    tolerance: float = DEFAULT_TOL
    direction: str = "axis"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown experiment kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.replicas < 2:
            raise PreconditionError("replicas must be >= 2")
        if self.buffer_factor < 0.5:
            raise PreconditionError("buffer_factor must be >= 0.5")
        if self.direction not in ("axis", "diagonal"):
            raise PreconditionError("direction must be 'axis' or 'diagonal'")
        self.scales = [int(s) for s in self.scales]
        if not self.scales or min(self.scales) < 1:
            raise PreconditionError("scales must be positive integers")
        self.dist  # validates the distribution string

    @property
    def dist(self) -> Distribution:
        return parse_distribution(self.distribution)

    def to_json(self) -> dict:
        return asdict(self)


# --- streaming statistics -------------------------------------------------------

@dataclass
class ReplicaStats:
    """Mergeable streaming moments (count, mean, central sums m2..m4, min, max)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m4: float = 0.0
    min: float = math.inf
    max: float = -math.inf

    def push(self, x: float) -> None:
        self.merge(ReplicaStats(1, float(x), 0.0, 0.0, 0.0, float(x), float(x)))

    def merge(self, other: "ReplicaStats") -> "ReplicaStats":
        """Fold ``other`` into ``self`` (pairwise update of central moments)."""
        if other.count == 0:
            return self
        if self.count == 0:
            self.__dict__.update(other.__dict__)
            return self
        na, nb = self.count, other.count
        n = na + nb
        delta = other.mean - self.mean
        d_n = delta / n
        m2 = self.m2 + other.m2 + delta * d_n * na * nb
        m3 = (self.m3 + other.m3 + delta * d_n * d_n * na * nb * (na - nb)
              + 3.0 * d_n * (na * other.m2 - nb * self.m2))
        m4 = (self.m4 + other.m4
              + delta * d_n ** 3 * na * nb * (na * na - na * nb + nb * nb)
              + 6.0 * d_n * d_n * (na * na * other.m2 + nb * nb * self.m2)
              + 4.0 * d_n * (na * other.m3 - nb * self.m3))
        self.count, self.mean = n, self.mean + d_n * nb
        self.m2, self.m3, self.m4 = m2, m3, m4
        self.min, self.max = min(self.min, other.min), max(self.max, other.max)
        return self

    @classmethod
    def from_values(cls, xs) -> "ReplicaStats":
        st = cls()
        for x in xs:
            st.push(x)
        return st

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    def mean_ci(self) -> tuple[float, float]:
        hw = Z95 * math.sqrt(self.variance / self.count) if self.count > 1 else 0.0
        return self.mean - hw, self.mean + hw

    def variance_ci(self) -> tuple[float, float]:
        """Normal approximation using the fourth central moment."""
        n, s2 = self.count, self.variance
        if n < 4:
            return 0.0, math.inf
        mu4 = self.m4 / n
        var_s2 = max(mu4 - s2 * s2 * (n - 3) / (n - 1), 0.0) / n
        hw = Z95 * math.sqrt(var_s2)
        return max(s2 - hw, 0.0), s2 + hw


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    ph = k / n
    den = 1 + z * z / n
    centre = (ph + z * z / (2 * n)) / den
    hw = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    # the endpoints are exact at k = 0 and k = n; rounding would otherwise miss them
    lo = 0.0 if k == 0 else max(0.0, centre - hw)
    hi = 1.0 if k == n else min(1.0, centre + hw)
    return lo, hi


# --- rows and output ----------------------------------------------------------------

@dataclass
class ScalingRow:
    scale: int
    mean: float
    mean_lo: float
    mean_hi: float
    var: float
    var_lo: float
    var_hi: float
    replicas: int
    reference: float
    sensitivity_flag: bool = False
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_stats(cls, scale: int, st: ReplicaStats, reference: float, **kw) -> "ScalingRow":
        mlo, mhi = st.mean_ci()
        vlo, vhi = st.variance_ci()
        return cls(scale, st.mean, mlo, mhi, st.variance, vlo, vhi, st.count, reference, **kw)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def rows_to_csv(rows: Sequence[ScalingRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])
    return buf.getvalue()


def rows_to_json(rows: Sequence[ScalingRow], cfg: ExperimentConfig) -> str:
    payload = {"config": cfg.to_json(), "rows": [asdict(r) for r in rows]}
    return json.dumps(payload, indent=2, sort_keys=True, default=float)


# --- replica execution -----------------------------------------------------------------

def map_replicas(fn: Callable[[int], float], n: int, threads: int = 1) -> list:
    """``[fn(0), ..., fn(n-1)]``; a failing replica yields its exception instead of a value."""

    def safe(k):
        try:
            return fn(k)
        except (OhmlabError, ArithmeticError, np.linalg.LinAlgError) as exc:
            return exc

    if threads <= 1:
        return [safe(k) for k in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(safe, range(n)))


def _collect(results: list, label: str) -> tuple[list[float], int]:
    failures = [r for r in results if isinstance(r, Exception)]
    if len(failures) > MAX_FAILURE_RATE * len(results):
        raise RowAborted(f"{label}: {len(failures)} of {len(results)} replicas failed ({failures[0]})")
    for exc in failures:
        log.warning("%s: replica failed: %s", label, exc)
    return [r for r in results if not isinstance(r, Exception)], len(failures)


# --- geometry ------------------------------------------------------------------------------

def target_offset(d: int, norm: int, direction: str = "axis") -> tuple[int, ...]:
    """Lattice vector of l1-norm ``norm`` along the first axis or the main diagonal."""
    if direction == "axis":
        return (norm,) + (0,) * (d - 1)
    base, rest = divmod(norm, d)
    return tuple(base + (1 if k < rest else 0) for k in range(d))


def point_box(d: int, v: Sequence[int], buffer: int, extra: Sequence[Sequence[int]] = ()) -> Network:
    """Smallest box containing 0, ``v`` and ``extra`` points, grown by ``buffer`` on every side."""
    pts = np.array([[0] * d, list(v), *[list(e) for e in extra]])
    return build_rect_lattice(pts.min(axis=0) - buffer, pts.max(axis=0) + buffer)


def _buffer(cfg: ExperimentConfig, norm: int) -> int:
    return max(1, math.ceil(cfg.buffer_factor * norm))


def unit_sensitivity(d: int, v: Sequence[int], buffer: int) -> tuple[float, float, float]:
    """Unit-environment ``R(0, v)`` on the buffered box and on the box with doubled buffer."""
    vals = []
    for buf in (buffer, 2 * buffer):
        net = point_box(d, v, buf)
        t = TerminalPair(net.index_of([0] * d), net.index_of(v))
        vals.append(ResistanceSolver(net, t).value(np.ones(net.edge_count)))
    return vals[0], vals[1], abs(vals[0] - vals[1]) / vals[1]


def _comparison_ok(value: float, unit: float, lo: float, hi: float) -> bool:
    slack = 1e-8 * unit
    return lo * unit - slack <= value <= hi * unit + slack


# --- campaigns ------------------------------------------------------------------------------

def _p2p_samples(cfg: ExperimentConfig, norm: int, threads: int):
    d = cfg.d
    v = target_offset(d, norm, cfg.direction)
    buffer = _buffer(cfg, norm)
    net = point_box(d, v, buffer)
    t = TerminalPair(net.index_of([0] * d), net.index_of(v))
    solver = ResistanceSolver(net, t)
    dist = cfg.dist
    stream = SeedSpec(cfg.master_seed, norm)
    unit = solver.value(np.ones(net.edge_count), cfg.tolerance)

    def one(k):
        r = dist.sample(stream.child(k).rng(), net.edge_count)
        return solver.value(r, cfg.tolerance)

    values, failures = _collect(map_replicas(one, cfg.replicas, threads), f"|v|={norm}")
    lo, hi = dist.bounds
    violations = sum(not _comparison_ok(x, unit, lo, hi) for x in values)
    return values, failures, violations, unit, buffer, v


def run_point_to_point(cfg: ExperimentConfig, threads: int = 1) -> list[ScalingRow]:
    """Mean and variance of ``R(0 <-> v)`` for each ``|v|`` in ``cfg.scales``."""
    if cfg.d < 1:
        raise PreconditionError("dimension must be positive")
    rows = []
    for norm in cfg.scales:
        values, failures, violations, unit, buffer, v = _p2p_samples(cfg, norm, threads)
        _, _, sens = unit_sensitivity(cfg.d, v, buffer)
        st = ReplicaStats.from_values(values)
        logv = math.log(norm)
        rows.append(ScalingRow.from_stats(
            norm, st, logv, sensitivity_flag=sens > SENSITIVITY_LIMIT,
            extra={
                "log_v_two_thirds": logv ** (2 / 3),
                "var_over_mean": st.variance / st.mean,
                "unit_resistance": unit,
                "sensitivity": sens,
                "comparison_violations": violations,
                "failures": failures,
                "box_buffer": buffer,
            }))
    return rows


def run_left_right(cfg: ExperimentConfig, threads: int = 1) -> list[ScalingRow]:
    """Left-right resistance of the ``n x n`` box for each side ``n`` in ``cfg.scales``."""
    dist = cfg.dist
    rows = []
    for n in cfg.scales:
        net = build_box_lattice(2, n)
        solver = ResistanceSolver(net, left_right_terminals(net))
        stream = SeedSpec(cfg.master_seed, n)

        def one(k, solver=solver, net=net, stream=stream):
            return solver.value(dist.sample(stream.child(k).rng(), net.edge_count), cfg.tolerance)

        values, failures = _collect(map_replicas(one, cfg.replicas, threads), f"side={n}")
        lo, hi = dist.bounds
        unit = n / (n + 1)
        violations = sum(not _comparison_ok(x, unit, lo, hi) for x in values)
        st = ReplicaStats.from_values(values)
        rows.append(ScalingRow.from_stats(
            n, st, 1.0 / n**2,
            extra={
                "hammersley_lo": 1.0 / dist.mean_inverse(),
                "hammersley_hi": dist.mean(),
                "unit_resistance": unit,
                "comparison_violations": violations,
                "failures": failures,
            }))
    by_side = {r.scale: r for r in rows}
    for r in rows:
        half = by_side.get(r.scale // 2) if r.scale % 2 == 0 else None
        if half is not None and half.var > 0:
            r.extra["variance_trend"] = r.var * r.scale**2 / (half.var * half.scale**2)
    return rows


@dataclass
class TailRow:
    t: float
    threshold: float
    probability: float
    lo: float
    hi: float
    exceedances: int
    replicas: int


def run_tail(cfg: ExperimentConfig, v: int, thresholds: Sequence[float], threads: int = 1) -> list[TailRow]:
    """Empirical ``P(|R - mean| > t (log|v|)^(1/3))`` with Wilson intervals."""
    if cfg.replicas < 1000:
        raise PreconditionError("tail estimation needs at least 1000 replicas")
    values, *_ = _p2p_samples(cfg, v, threads)
    x = np.asarray(values)
    dev = np.abs(x - math.fsum(values) / len(values))
    scale = math.log(v) ** (1 / 3)
    out = []
    for t in thresholds:
        k = int((dev > t * scale).sum())
        lo, hi = wilson_interval(k, len(x))
        out.append(TailRow(float(t), t * scale, k / len(x), lo, hi, k, len(x)))
    return out


def tail_to_csv(rows: Sequence[TailRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = ["t", "threshold", "probability", "lo", "hi", "exceedances", "replicas"]
    w.writerow(keys)
    for r in rows:
        w.writerow([_fmt(getattr(r, k)) for k in keys])
    return buf.getvalue()


@dataclass
class ShapeResult:
    levels: list
    coords: np.ndarray
    inclusion: np.ndarray  # (levels, vertices) fraction of replicas with v in B_t
    balls: list  # balls[replica][level] -> array of vertex indices
    touches_boundary: np.ndarray  # (replicas, levels)
    sandwich_ok: np.ndarray  # (replicas, levels)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", *[f"x{k}" for k in range(self.coords.shape[1])], "frequency"])
        for li, t in enumerate(self.levels):
            for idx in np.flatnonzero(self.inclusion[li] > 0):
                w.writerow([_fmt(t), *[int(c) for c in self.coords[idx]], _fmt(self.inclusion[li, idx])])
        return buf.getvalue()


def run_shape(cfg: ExperimentConfig, t_levels: Sequence[float], threads: int = 1) -> ShapeResult:
    """Resistance balls ``B_t = {v : R(0 <-> v) <= t}`` on the box ``[-L, L]^d``, ``L = cfg.scales[0]``."""
    d, half = cfg.d, cfg.scales[0]
    net = build_rect_lattice([-half] * d, [half] * d)
    origin = net.index_of([0] * d)
    targets = np.array([i for i in range(net.vertex_count) if i != origin])
    boundary = np.abs(net.coords).max(axis=1) == half
    dist = cfg.dist
    lo, hi = dist.bounds
    unit = np.zeros(net.vertex_count)
    unit[targets] = pairwise_resistances(net, np.ones(net.edge_count), origin, targets, cfg.tolerance)
    stream = SeedSpec(cfg.master_seed, half)

    def one(k):
        r = dist.sample(stream.child(k).rng(), net.edge_count)
        out = np.zeros(net.vertex_count)
        out[targets] = pairwise_resistances(net, r, origin, targets, cfg.tolerance)
        return out

    res, _ = _collect(map_replicas(one, cfg.replicas, threads), "shape")
    levels = [float(t) for t in t_levels]
    inclusion = np.zeros((len(levels), net.vertex_count))
    balls, touches, sandwich = [], [], []
    eps = 1e-9
    for R in res:
        row_b, row_t, row_s = [], [], []
        for li, t in enumerate(levels):
            inside = R <= t
            inclusion[li] += inside
            row_b.append(np.flatnonzero(inside))
            row_t.append(bool((inside & boundary).any()))
            inner = unit <= t / hi - eps
            outer = unit <= t / lo + eps
            row_s.append(bool(np.all(inside[inner]) and np.all(outer[inside])))
        balls.append(row_b)
        touches.append(row_t)
        sandwich.append(row_s)
    inclusion /= max(len(res), 1)
    return ShapeResult(levels, net.coords, inclusion, balls, np.array(touches), np.array(sandwich))


def run_p_scaling(cfg: ExperimentConfig, threads: int = 1) -> list[ScalingRow]:
    """Mean p-resistance ``R^p(0 <-> v)`` against the growth scale ``a_d(|v|, p)``."""
    if cfg.p is None:
        raise PreconditionError("p-scaling needs p")
    if cfg.d < 2:
        raise PreconditionError("p-scaling needs d >= 2")
    dist = cfg.dist
    rows = []
    for norm in cfg.scales:
        v = target_offset(cfg.d, norm, cfg.direction)
        net = point_box(cfg.d, v, _buffer(cfg, norm))
        t = TerminalPair(net.index_of([0] * cfg.d), net.index_of(v))
        solver = ResistanceSolver(net, t)
        stream = SeedSpec(cfg.master_seed, norm)

        def one(k, net=net, t=t, solver=solver, stream=stream):
            r = dist.sample(stream.child(k).rng(), net.edge_count)
            return p_resistance(net, r, t, cfg.p, solver=solver).value

        values, failures = _collect(map_replicas(one, cfg.replicas, threads), f"|v|={norm}")
        st = ReplicaStats.from_values(values)
        ref = p_scaling_reference(cfg.d, max(norm, 2), cfg.p)
        rows.append(ScalingRow.from_stats(norm, st, ref, extra={"ratio": st.mean / ref, "failures": failures}))
    return rows


# --- proof diagnostics ----------------------------------------------------------------------

@dataclass
class BoxEnergyReport:
    m: int
    pairs: int
    violations: int
    bound: float
    max_energy: float
    averaged_bound: float
    averaged_means: list
    averaged_se: list
    averaged_violations: int

    def to_json(self) -> dict:
        return asdict(self)


def _edge_lookup(net: Network) -> dict:
    return {(int(a), int(b)): k for k, (a, b) in enumerate(zip(net.u, net.v))}


def run_box_energy(cfg: ExperimentConfig, v: int, m: int, side: int = 32, pairs: int | None = None,
                   probe_edges: int = 4) -> BoxEnergyReport:
    """Energy inside boxes of side ``m`` avoiding both terminals, and averaged flow squares.

    Terminals sit at ``((side - v)//2, side//2)`` and ``v`` to its right on the
    2-d box ``[0, side]^2``. For each sampled environment a box ``c + [0, m]^2``
    that contains neither terminal is drawn; its internal energy must stay below
    ``4 b (m + 1)``. Separately, for ``probe_edges`` fixed edges ``e``, the sum of
    ``theta(e - z)^2`` over ``z in [0, m-1]^2`` is averaged over environments
    and compared with ``5 b (m + 1) / a``.
    """
    if m < 1:
        raise PreconditionError("m must be >= 1")
    if cfg.d != 2:
        raise PreconditionError("box-energy diagnostic is 2-d")
    if not 1 <= v <= side - 2:
        raise PreconditionError("terminals do not fit in the box")
    pairs = pairs or cfg.replicas
    net = build_box_lattice(2, side)
    x0 = np.array([(side - v) // 2, side // 2])
    x1 = x0 + np.array([v, 0])
    t = TerminalPair(net.index_of(x0), net.index_of(x1))
    solver = ResistanceSolver(net, t)
    dist = cfg.dist
    lo, hi = dist.bounds
    rng = SeedSpec(cfg.master_seed, 10_000 + m).rng()
    coords = net.coords
    edge_lo = np.minimum(coords[net.u], coords[net.v])
    edge_hi = np.maximum(coords[net.u], coords[net.v])
    bound = 4 * hi * (m + 1)
    lookup = _edge_lookup(net)

    # probe edges with all translates e - z, z in [0, m-1]^2, inside the box
    candidates = [k for k in range(net.edge_count) if edge_lo[k].min() >= m - 1]
    probe = rng.choice(candidates, size=min(probe_edges, len(candidates)), replace=False)
    translates = []
    for k in probe:
        a_, b_ = coords[net.u[k]], coords[net.v[k]]
        ids = []
        for zx in range(m):
            for zy in range(m):
                z = np.array([zx, zy])
                ids.append(lookup[(net.index_of(a_ - z), net.index_of(b_ - z))])
        translates.append(np.array(ids))

    violations, max_energy = 0, 0.0
    sums = np.zeros((pairs, len(probe)))
    stream = SeedSpec(cfg.master_seed, 20_000 + m)
    for k in range(pairs):
        r = dist.sample(stream.child(k).rng(), net.edge_count)
        theta = solver.solve(r, cfg.tolerance).flow.theta
        while True:
            c = rng.integers(0, side - m + 1, size=2)
            if not (np.all((x0 >= c) & (x0 <= c + m)) or np.all((x1 >= c) & (x1 <= c + m))):
                break
        inside = np.all(edge_lo >= c, axis=1) & np.all(edge_hi <= c + m, axis=1)
        energy = float(np.dot(r[inside], theta[inside] ** 2))
        max_energy = max(max_energy, energy)
        if energy > bound + 1e-9 * bound:
            violations += 1
        for j, ids in enumerate(translates):
            sums[k, j] = float(np.sum(theta[ids] ** 2))
    means = sums.mean(axis=0)
    se = sums.std(axis=0, ddof=1) / math.sqrt(pairs)
    avg_bound = 5 * hi * (m + 1) / lo
    avg_viol = int(np.sum(means - 3 * se > avg_bound))
    return BoxEnergyReport(m, pairs, violations, bound, max_energy, avg_bound,
                           means.tolist(), se.tolist(), avg_viol)


@dataclass
class AveragedInfluence:
    m: int
    edges: list
    l1: list
    l1_se: list
    max_l1: float
    max_l1_se: float
    envelope: float
    replicas: int

    def to_json(self) -> dict:
        return asdict(self)


def run_averaged_influence(cfg: ExperimentConfig, v: int, m: int, sample_edges: Sequence[int] | int = 8,
                           threads: int = 1) -> AveragedInfluence:
    """Estimate ``E_{z,r} |Delta_e f~|`` where ``f~(z, r) = R_r(z, z + v)`` and ``z`` is uniform on ``[0, m-1]^2``.

    ``sample_edges`` is a list of edge ids or a count of edges to draw from the
    box spanned by the translated terminals.
    """
    if m < 2:
        raise PreconditionError("m must be >= 2")
    if cfg.d != 2:
        raise PreconditionError("averaged influence is 2-d")
    dist = cfg.dist
    if not isinstance(dist, (Bernoulli, Constant)):
        raise PreconditionError("edge flips need a Bernoulli distribution")
    a, b = dist.bounds
    vec = target_offset(2, v, cfg.direction)
    net = point_box(2, vec, _buffer(cfg, v), extra=[(m - 1, m - 1), (vec[0] + m - 1, vec[1] + m - 1)])
    rng = SeedSpec(cfg.master_seed, 30_000 + m).rng()
    if isinstance(sample_edges, (int, np.integer)):
        lo_c = np.minimum(net.coords[net.u], net.coords[net.v])
        region = np.all(lo_c >= 0, axis=1) & np.all(lo_c <= np.array(vec) + m - 1, axis=1)
        edges = sorted(rng.choice(np.flatnonzero(region), size=int(sample_edges), replace=False).tolist())
    else:
        edges = [int(e) for e in sample_edges]
    solvers: dict = {}

    def solver_for(z):
        if z not in solvers:
            src = net.index_of(z)
            dst = net.index_of((z[0] + vec[0], z[1] + vec[1]))
            solvers[z] = ResistanceSolver(net, TerminalPair(src, dst))
        return solvers[z]

    # build solvers up front so worker threads only read the cache
    for zx in range(m):
        for zy in range(m):
            solver_for((zx, zy))
    stream = SeedSpec(cfg.master_seed, 40_000 + m)

    def one(k):
        g = stream.child(k).rng()
        z = (int(g.integers(0, m)), int(g.integers(0, m)))
        r = dist.sample(g, net.edge_count)
        s = solvers[z]
        f0 = s.value(r, cfg.tolerance)
        out = np.empty(len(edges))
        for j, e in enumerate(edges):
            flipped = r.copy()
            flipped[e] = b if r[e] == a else a
            out[j] = 0.5 * abs(f0 - s.value(flipped, cfg.tolerance))
        return out

    res, _ = _collect(map_replicas(one, cfg.replicas, threads), f"m={m}")
    arr = np.array(res).reshape(len(res), len(edges))
    l1 = arr.mean(axis=0)
    se = arr.std(axis=0, ddof=1) / math.sqrt(len(arr))
    j = int(np.argmax(l1)) if len(edges) else 0
    envelope = (b - a) * 5 * b * (m + 1) / (a * (m + 1) ** 2)
    return AveragedInfluence(m, edges, l1.tolist(), se.tolist(), float(l1[j]) if len(edges) else 0.0,
                             float(se[j]) if len(edges) else 0.0, envelope, len(arr))
