"""Effective resistance of random electric networks on lattices and small graphs."""
from ohmlab.errors import ConvergenceError, DisconnectedError, OhmlabError, PreconditionError
from ohmlab.kernels import COMPILED
from ohmlab.linres import ResistanceSolver, effective_resistance, pairwise_resistances
from ohmlab.netgraph import (
    Network,
    TerminalPair,
    build_box_lattice,
    build_cycle,
    build_parallel,
    build_parallel_series,
    build_path,
    build_rect_lattice,
    left_right_terminals,
)
from ohmlab.pres import p_resistance
from ohmlab.randomenv import Bernoulli, Constant, Environment, SeedSpec, Uniform, parse_distribution

__all__ = [
    "COMPILED",
    "Bernoulli",
    "Constant",
    "ConvergenceError",
    "DisconnectedError",
    "Environment",
    "Network",
    "OhmlabError",
    "PreconditionError",
    "ResistanceSolver",
    "SeedSpec",
    "TerminalPair",
    "Uniform",
    "build_box_lattice",
    "build_cycle",
    "build_parallel",
    "build_parallel_series",
    "build_path",
    "build_rect_lattice",
    "effective_resistance",
    "left_right_terminals",
    "p_resistance",
    "pairwise_resistances",
    "parse_distribution",
]
