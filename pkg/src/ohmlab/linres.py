"""Linear effective resistance: unit current, potentials, primal and dual energies.

The solve contracts the terminal sets, grounds the sink and solves the weighted
graph Laplacian for a unit current injected at the source. Small systems use a
dense Cholesky factorization; larger ones use Jacobi-preconditioned CG.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.sparse import csc_matrix, csr_matrix
from scipy.sparse.linalg import splu

from ohmlab import kernels
from ohmlab.errors import ConvergenceError, DisconnectedError, PreconditionError
from ohmlab.netgraph import Network, TerminalPair, component_labels, contract_terminals
from ohmlab.randomenv import Environment

DEFAULT_TOL = 1e-10
MAX_TOL = 1e-4
DENSE_MAX = 64  # reduced systems up to this size are always factorized directly
DENSE_FALLBACK_MAX = 2000  # CG failures up to this size retry with a dense solve


@dataclass(frozen=True, eq=False)
class UnitFlow:
    theta: np.ndarray
    strength: float
    node_law_residual: float


@dataclass(frozen=True, eq=False)
class PotentialField:
    """Vertex potentials, sink grounded at 0."""

    phi: np.ndarray


@dataclass(frozen=True, eq=False)
class ResistanceResult:
    value: float
    flow: UnitFlow
    potentials: PotentialField
    iterations: int
    residual: float
    method: str = "dense"

    def to_json(self) -> dict:
        return {"value": self.value, "iterations": self.iterations, "residual": self.residual}


@dataclass(frozen=True)
class FlowDiagnostics:
    strength: float
    node_law_residual: float
    max_edge_flow: float


def _resistances(env) -> np.ndarray:
    return env.resistances if isinstance(env, Environment) else np.asarray(env, dtype=float)


class LaplacianPattern:
    """Sparsity pattern of a weighted Laplacian with one vertex removed (grounded).

    ``assemble(conductances)`` returns CSR arrays for any edge weights without
    rebuilding the pattern, which is what makes repeated solves cheap.
    """

    def __init__(self, n_vertices: int, u: np.ndarray, v: np.ndarray, ground: int):
        keep = np.arange(n_vertices) != ground
        red = np.cumsum(keep) - 1
        red[ground] = -1
        self.n = n_vertices - 1
        self.reduced = red
        ru, rv = red[u], red[v]
        m = len(u)
        edge = np.arange(m)
        rows, cols, owner, sign = [], [], [], []
        for a_, b_ in ((ru, rv), (rv, ru)):
            ok = a_ >= 0
            rows.append(a_[ok])
            cols.append(a_[ok])
            owner.append(edge[ok])
            sign.append(np.ones(ok.sum()))
            ok = (a_ >= 0) & (b_ >= 0)
            rows.append(a_[ok])
            cols.append(b_[ok])
            owner.append(edge[ok])
            sign.append(-np.ones(ok.sum()))
        # every reduced vertex gets a diagonal slot even if isolated
        diag_idx = np.arange(self.n)
        rows.append(diag_idx)
        cols.append(diag_idx)
        rows, cols = np.concatenate(rows), np.concatenate(cols)
        n_contrib = len(rows) - self.n
        owner, sign = np.concatenate(owner), np.concatenate(sign)
        keys = rows.astype(np.int64) * max(self.n, 1) + cols
        uniq, inv = np.unique(keys, return_inverse=True)
        self.nnz = len(uniq)
        self.indices = np.ascontiguousarray(uniq % max(self.n, 1), dtype=np.int64)
        urow = uniq // max(self.n, 1)
        self.indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(urow, minlength=self.n), out=self.indptr[1:])
        self.diag_pos = inv[n_contrib:]
        self._pos = inv[:n_contrib]
        self._owner = owner
        self._sign = sign

    def assemble(self, conductances: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        data = np.bincount(self._pos, weights=self._sign * conductances[self._owner], minlength=self.nnz)
        return data, data[self.diag_pos]

    def csr(self, conductances: np.ndarray) -> csr_matrix:
        data, _ = self.assemble(conductances)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def dense(self, conductances: np.ndarray) -> np.ndarray:
        return self.csr(conductances).toarray()


def divergence(net: Network, theta: np.ndarray) -> np.ndarray:
    """Net outflow at each vertex for a flow given along stored edge orientations."""
    n = net.vertex_count
    return np.bincount(net.u, weights=theta, minlength=n) - np.bincount(net.v, weights=theta, minlength=n)


def check_flow(net: Network, flow, t: TerminalPair) -> FlowDiagnostics:
    """Recompute strength, node-law residual and max |theta| directly from the flow."""
    theta = flow.theta if isinstance(flow, UnitFlow) else np.asarray(flow, dtype=float)
    if theta.shape != (net.edge_count,):
        raise PreconditionError("flow length must equal the edge count")
    div = divergence(net, theta)
    interior = np.ones(net.vertex_count, dtype=bool)
    interior[list(t.sources | t.sinks)] = False
    residual = float(np.abs(div[interior]).max()) if interior.any() else 0.0
    strength = float(div[list(t.sources)].sum())
    max_flow = float(np.abs(theta).max()) if len(theta) else 0.0
    return FlowDiagnostics(strength, residual, max_flow)


class ResistanceSolver:
    """Effective resistance between fixed terminals, reusable across environments.

    Contraction, connectivity analysis and the Laplacian pattern are computed
    once; :meth:`solve` only assembles weights and solves.
    """

    def __init__(self, net: Network, t: TerminalPair, method: str = "auto"):
        if method not in ("auto", "dense", "cg"):
            raise PreconditionError(f"unknown method {method!r}")
        t.validate(net)
        self.net, self.terminals, self.method = net, t, method
        con = contract_terminals(net, t)
        self.contraction = con
        cnet = con.network
        labels = component_labels(cnet)
        if labels[con.source] != labels[con.sink]:
            raise DisconnectedError("source and sink are not connected; resistance is infinite")
        active = labels == labels[con.source]
        # restrict to the terminals' component so the grounded Laplacian is nonsingular
        self._active_index = np.full(cnet.vertex_count, -1, dtype=np.int64)
        self._active_index[active] = np.arange(active.sum())
        edge_active = active[cnet.u]
        self._edge_orig = con.edge_map[edge_active]
        au = self._active_index[cnet.u[edge_active]]
        av = self._active_index[cnet.v[edge_active]]
        n_active = int(active.sum())
        self._sink = int(self._active_index[con.sink])
        self.pattern = LaplacianPattern(n_active, au, av, self._sink)
        self._src_red = int(self.pattern.reduced[self._active_index[con.source]])
        self._vertex_active = self._active_index[con.vertex_map]  # original -> active index or -1
        self._vertex_red = np.where(
            self._vertex_active >= 0, self.pattern.reduced[np.maximum(self._vertex_active, 0)], -1
        )
        self._interior = np.ones(net.vertex_count, dtype=bool)
        self._interior[list(t.sources | t.sinks)] = False

    @property
    def size(self) -> int:
        """Order of the reduced linear system."""
        return self.pattern.n

    def _rhs(self) -> np.ndarray:
        b = np.zeros(self.pattern.n)
        b[self._src_red] = 1.0
        return b

    def solve_potentials(self, r: np.ndarray, tol: float = DEFAULT_TOL):
        """Reduced potentials ``x`` with ``L x = e_s``; returns ``(x, iterations, residual, method)``."""
        if not 0 < tol <= MAX_TOL:
            raise PreconditionError(f"tol must lie in (0, {MAX_TOL}]")
        if r.shape != (self.net.edge_count,):
            raise PreconditionError("environment length must equal the edge count")
        cond = 1.0 / r[self._edge_orig]
        n = self.pattern.n
        b = self._rhs()
        use_dense = self.method == "dense" or (self.method == "auto" and n <= DENSE_MAX)
        if not use_dense:
            data, diag = self.pattern.assemble(cond)
            x = np.zeros(n)
            it, res = kernels.pcg(self.pattern.indptr, self.pattern.indices, data, diag, b, x, tol, 10 * (n + 1))
            if res <= tol:
                return x, int(it), float(res), "cg"
            if n > DENSE_FALLBACK_MAX:
                raise ConvergenceError(f"CG stopped after {it} iterations with relative residual {res:.3e}")
        lap = self.pattern.dense(cond)
        x = scipy.linalg.solve(lap, b, assume_a="pos", check_finite=False)
        res = float(np.linalg.norm(lap @ x - b))
        return x, 0, res, "dense"

    def solve(self, env, tol: float = DEFAULT_TOL) -> ResistanceResult:
        r = _resistances(env)
        x, it, res, method = self.solve_potentials(r, tol)
        xs = np.concatenate([x, [0.0]])  # index -1 -> grounded / inactive
        phi = xs[self._vertex_red]
        net = self.net
        theta = (phi[net.u] - phi[net.v]) / r
        div = divergence(net, theta)
        residual = float(np.abs(div[self._interior]).max()) if self._interior.any() else 0.0
        strength = float(div[list(self.terminals.sources)].sum())
        flow = UnitFlow(theta, strength, residual)
        return ResistanceResult(float(x[self._src_red]), flow, PotentialField(phi), it, res, method)

    def value(self, env, tol: float = DEFAULT_TOL) -> float:
        x, *_ = self.solve_potentials(_resistances(env), tol)
        return float(x[self._src_red])


def effective_resistance(net: Network, env, t: TerminalPair, tol: float = DEFAULT_TOL) -> ResistanceResult:
    """Effective resistance ``R(A <-> Z)`` with its unit current and potentials."""
    return ResistanceSolver(net, t).solve(env, tol)


def pairwise_resistances(
    net: Network, env, base: int, targets: Sequence[int], tol: float = DEFAULT_TOL, chunk: int = 256
) -> np.ndarray:
    """``R(base <-> targets[k])`` for every k from a single sparse LU factorization.

    With ``base`` grounded, ``R(base, w)`` is the ``(w, w)`` entry of the inverse
    reduced Laplacian.
    """
    targets = np.asarray(targets, dtype=np.int64)
    if np.any(targets == base):
        raise PreconditionError("targets must differ from base")
    if len(np.unique(targets)) != len(targets):
        raise PreconditionError("targets must be distinct")
    labels = component_labels(net)
    if np.any(labels[targets] != labels[base]):
        raise DisconnectedError("some target is not connected to base")
    if not 0 < tol <= MAX_TOL:
        raise PreconditionError(f"tol must lie in (0, {MAX_TOL}]")
    r = _resistances(env)
    active = labels == labels[base]
    idx = np.full(net.vertex_count, -1, dtype=np.int64)
    idx[active] = np.arange(active.sum())
    ea = active[net.u]
    pat = LaplacianPattern(int(active.sum()), idx[net.u[ea]], idx[net.v[ea]], int(idx[base]))
    lu = splu(csc_matrix(pat.csr(1.0 / r[ea])))
    red = pat.reduced[idx[targets]]
    out = np.empty(len(targets))
    for start in range(0, len(targets), chunk):
        sel = red[start : start + chunk]
        rhs = np.zeros((pat.n, len(sel)))
        rhs[sel, np.arange(len(sel))] = 1.0
        x = lu.solve(rhs)
        out[start : start + chunk] = x[sel, np.arange(len(sel))]
    return out


def flow_energy(env, flow) -> float:
    """``sum_e r_e theta_e^2``."""
    r = _resistances(env)
    theta = flow.theta if isinstance(flow, UnitFlow) else np.asarray(flow, dtype=float)
    if theta.shape != r.shape:
        raise PreconditionError("flow and environment lengths differ")
    return float(np.dot(r, theta * theta))


def dual_energy(net: Network, env, phi, t: TerminalPair, atol: float = 1e-8) -> float:
    """Conductance energy ``sum_e (phi_u - phi_v)^2 / r_e`` of a potential equal to 1 on A, 0 on Z.

    The minimum over such potentials is ``1 / R(A <-> Z)``.
    """
    r = _resistances(env)
    phi = phi.phi if isinstance(phi, PotentialField) else np.asarray(phi, dtype=float)
    if phi.shape != (net.vertex_count,):
        raise PreconditionError("potential length must equal the vertex count")
    src, snk = list(t.sources), list(t.sinks)
    if np.abs(phi[src] - 1.0).max() > atol or np.abs(phi[snk]).max() > atol:
        raise PreconditionError("potential must equal 1 on the sources and 0 on the sinks")
    grad = phi[net.u] - phi[net.v]
    return float(np.dot(grad * grad, 1.0 / r))


def normalized_potential(result: ResistanceResult) -> PotentialField:
    """Harmonic potential rescaled to 1 on the sources (sink stays 0)."""
    return PotentialField(result.potentials.phi / result.value)
