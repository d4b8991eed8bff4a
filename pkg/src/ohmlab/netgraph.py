"""Finite multigraphs: lattice boxes, the parallel-series graph, terminal contraction.

A :class:`Network` stores its edges as two integer arrays ``u`` and ``v``; the
position in those arrays is the edge id. The stored direction ``u -> v`` is only
a sign convention for flows.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ohmlab.errors import PreconditionError

MAX_DIM = 4


def _frozen(a, dtype=np.int64) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Network:
    """Finite unoriented multigraph with stable edge ids.

    Attributes
    ----------
    vertex_count : int
    u, v : ndarray of int
        Endpoints of edge ``k`` are ``u[k]`` and ``v[k]``.
    coords : ndarray of int, shape (vertex_count, d), optional
        Lattice coordinates. When present every edge joins l1-neighbours.
    """

    vertex_count: int
    u: np.ndarray
    v: np.ndarray
    coords: np.ndarray | None = None
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen(self.u))
        object.__setattr__(self, "v", _frozen(self.v))
        if self.coords is not None:
            object.__setattr__(self, "coords", _frozen(self.coords))
        self.validate()

    def validate(self) -> None:
        n = self.vertex_count
        if n < 0:
            raise PreconditionError("vertex_count must be non-negative")
        if self.u.shape != self.v.shape or self.u.ndim != 1:
            raise PreconditionError("edge endpoint arrays must be 1-d and equally long")
        if self.edge_count:
            if min(self.u.min(), self.v.min()) < 0 or max(self.u.max(), self.v.max()) >= n:
                raise PreconditionError("edge endpoint outside the vertex range")
            if np.any(self.u == self.v):
                raise PreconditionError("self-loops are not allowed")
        if self.coords is not None:
            if self.coords.ndim != 2 or self.coords.shape[0] != n:
                raise PreconditionError("coords must have one row per vertex")
            if self.edge_count:
                dist = np.abs(self.coords[self.u] - self.coords[self.v]).sum(axis=1)
                if np.any(dist != 1):
                    raise PreconditionError("lattice edges must join l1-neighbours")

    @property
    def edge_count(self) -> int:
        return int(self.u.shape[0])

    @property
    def dim(self) -> int | None:
        return None if self.coords is None else int(self.coords.shape[1])

    @property
    def edges(self) -> list[tuple[int, int, int]]:
        """Edge records ``(edge_id, u, v)``."""
        return [(k, int(a), int(b)) for k, (a, b) in enumerate(zip(self.u, self.v))]

    def index_of(self, coord: Sequence[int]) -> int:
        """Vertex index of a lattice coordinate."""
        if self.coords is None:
            raise PreconditionError("network has no coordinates")
        if self._index is None:
            object.__setattr__(
                self, "_index", {tuple(int(x) for x in c): i for i, c in enumerate(self.coords)}
            )
        try:
            return self._index[tuple(int(x) for x in coord)]
        except KeyError:
            raise PreconditionError(f"no vertex at coordinate {tuple(coord)}") from None

    def degree(self) -> np.ndarray:
        return np.bincount(np.concatenate([self.u, self.v]), minlength=self.vertex_count)

    # --- JSON -------------------------------------------------------------
    def to_json(self) -> dict:
        out = {"vertices": self.vertex_count, "edges": [[int(a), int(b)] for a, b in zip(self.u, self.v)]}
        if self.coords is not None:
            out["coords"] = self.coords.tolist()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Network":
        try:
            n = int(data["vertices"])
            edges = np.asarray(data["edges"], dtype=np.int64).reshape(-1, 2)
        except (KeyError, TypeError, ValueError) as exc:
            raise PreconditionError(f"malformed network JSON: {exc}") from exc
        coords = data.get("coords")
        return cls(n, edges[:, 0], edges[:, 1], None if coords is None else np.asarray(coords))

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path) -> "Network":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class TerminalPair:
    """Source set ``sources`` (A) and sink set ``sinks`` (Z)."""

    sources: frozenset
    sinks: frozenset

    def __init__(self, sources: Iterable[int] | int, sinks: Iterable[int] | int):
        object.__setattr__(self, "sources", frozenset(_as_set(sources)))
        object.__setattr__(self, "sinks", frozenset(_as_set(sinks)))

    def validate(self, net: Network) -> None:
        if not self.sources or not self.sinks:
            raise PreconditionError("terminal sets must be non-empty")
        if self.sources & self.sinks:
            raise PreconditionError("sources and sinks must be disjoint")
        for x in self.sources | self.sinks:
            if not 0 <= x < net.vertex_count:
                raise PreconditionError(f"terminal {x} outside the vertex range")


def _as_set(x) -> set[int]:
    if isinstance(x, (int, np.integer)):
        return {int(x)}
    return {int(y) for y in x}


def build_rect_lattice(lower: Sequence[int], upper: Sequence[int]) -> Network:
    """Closed box ``prod [lower_k, upper_k]`` of Z^d with nearest-neighbour edges.

    Vertices are numbered in C order of their coordinates, so ``u < v`` for
    every edge. Edges are grouped by axis.
    """
    lower = [int(x) for x in lower]
    upper = [int(x) for x in upper]
    d = len(lower)
    if not 1 <= d <= MAX_DIM or len(upper) != d:
        raise PreconditionError(f"dimension must be in 1..{MAX_DIM}")
    shape = tuple(hi - lo + 1 for lo, hi in zip(lower, upper))
    if any(s < 1 for s in shape):
        raise PreconditionError("empty box")
    n = int(np.prod(shape))
    grid = np.indices(shape).reshape(d, -1).T
    idx = np.arange(n).reshape(shape)
    us, vs = [], []
    for k in range(d):
        lo = [slice(None)] * d
        hi = [slice(None)] * d
        lo[k] = slice(0, -1)
        hi[k] = slice(1, None)
        us.append(idx[tuple(lo)].ravel())
        vs.append(idx[tuple(hi)].ravel())
    return Network(n, np.concatenate(us), np.concatenate(vs), grid + np.asarray(lower))


def build_box_lattice(d: int, side: int) -> Network:
    """Box ``[0, side]^d`` of Z^d: ``(side+1)^d`` vertices, ``d side (side+1)^(d-1)`` edges."""
    if not 1 <= d <= MAX_DIM:
        raise PreconditionError(f"dimension must be in 1..{MAX_DIM}, got {d}")
    if side < 1:
        raise PreconditionError(f"side must be positive, got {side}")
    if (side + 1) ** d * d > 2**31:
        raise PreconditionError("box too large")
    return build_rect_lattice([0] * d, [side] * d)


def build_parallel_series(n: int) -> Network:
    """Vertices ``0..n``; stage ``i`` joins ``i`` and ``i+1`` by ``2i+1`` parallel edges.

    Edges are laid out stage by stage, so stage ``i`` occupies ids ``i^2 .. (i+1)^2 - 1``.
    """
    if n < 1:
        raise PreconditionError("parallel-series network needs n >= 1")
    stage = np.repeat(np.arange(n), 2 * np.arange(n) + 1)
    return Network(n + 1, stage, stage + 1)


def build_path(n: int) -> Network:
    """Path ``0 - 1 - ... - n`` (the d=1 box, without coordinates)."""
    if n < 1:
        raise PreconditionError("path needs at least one edge")
    return Network(n + 1, np.arange(n), np.arange(1, n + 1))


def build_parallel(k: int) -> Network:
    """Two vertices joined by ``k`` parallel edges."""
    if k < 1:
        raise PreconditionError("need at least one edge")
    return Network(2, np.zeros(k, dtype=np.int64), np.ones(k, dtype=np.int64))


def build_cycle(n: int) -> Network:
    if n < 3:
        raise PreconditionError("cycle needs at least 3 vertices")
    u = np.arange(n)
    v = (u + 1) % n
    return Network(n, np.minimum(u, v), np.maximum(u, v))


class Contraction(NamedTuple):
    network: Network
    source: int
    sink: int
    edge_map: np.ndarray  # contracted edge k  <-  original edge edge_map[k]
    vertex_map: np.ndarray  # original vertex x ->  contracted vertex vertex_map[x]


def contract_terminals(net: Network, t: TerminalPair) -> Contraction:
    """Merge all sources into one vertex and all sinks into another.

    The merged vertex takes the slot of the smallest member; other vertices keep
    their relative order, so singleton terminals leave the network unchanged.
    Edges internal to either terminal set are dropped.
    """
    t.validate(net)
    src_rep, snk_rep = min(t.sources), min(t.sinks)
    removed = np.zeros(net.vertex_count, dtype=bool)
    removed[list(t.sources - {src_rep})] = True
    removed[list(t.sinks - {snk_rep})] = True
    new_index = np.cumsum(~removed) - 1
    vmap = new_index.copy()
    vmap[list(t.sources)] = new_index[src_rep]
    vmap[list(t.sinks)] = new_index[snk_rep]
    cu, cv = vmap[net.u], vmap[net.v]
    keep = cu != cv
    edge_map = np.flatnonzero(keep)
    merged = removed.any()
    coords = net.coords if (net.coords is not None and not merged) else None
    out = Network(int((~removed).sum()), cu[keep], cv[keep], coords)
    vmap.setflags(write=False)
    edge_map.setflags(write=False)
    return Contraction(out, int(new_index[src_rep]), int(new_index[snk_rep]), edge_map, vmap)


def left_right_terminals(net: Network) -> TerminalPair:
    """Left column ``{0} x [0, n]`` as sources, right column ``{n} x [0, n]`` as sinks."""
    if net.coords is None or net.coords.shape[1] != 2:
        raise PreconditionError("left-right terminals need a 2-d lattice network")
    x = net.coords[:, 0]
    lo, hi = int(x.min()), int(x.max())
    if lo == hi:
        raise PreconditionError("degenerate box: side 0")
    return TerminalPair(np.flatnonzero(x == lo), np.flatnonzero(x == hi))


def component_labels(net: Network) -> np.ndarray:
    adj = coo_matrix(
        (np.ones(net.edge_count), (net.u, net.v)), shape=(net.vertex_count, net.vertex_count)
    )
    return connected_components(adj, directed=False)[1]


def connectivity_check(net: Network, t: TerminalPair) -> bool:
    """True iff some path joins a source to a sink."""
    labels = component_labels(net)
    return bool(set(labels[list(t.sources)]) & set(labels[list(t.sinks)]))


def lattice_neighbours(d: int) -> list[tuple[int, ...]]:
    """Unit vectors ``+-e_k`` of Z^d."""
    out = []
    for k, s in itertools.product(range(d), (1, -1)):
        e = [0] * d
        e[k] = s
        out.append(tuple(e))
    return out
