"""I.i.d. resistance environments: distributions, seeded sampling, flips, enumeration."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from ohmlab.errors import PreconditionError
from ohmlab.netgraph import Network

MASK64 = (1 << 64) - 1
MAX_ENUM_EDGES = 24


@dataclass(frozen=True)
class Bernoulli:
    """Resistance ``a`` or ``b`` with probability 1/2 each."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise PreconditionError("Bernoulli values must be strictly positive")
        if self.a > self.b:
            raise PreconditionError("Bernoulli requires a <= b")

    @property
    def bounds(self) -> tuple[float, float]:
        return self.a, self.b

    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    def mean_inverse(self) -> float:
        return 0.5 * (1 / self.a + 1 / self.b)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        # stored exactly as a or b: the flip precondition relies on it
        return np.where(rng.integers(0, 2, size=size) == 1, float(self.b), float(self.a))

    def __str__(self) -> str:
        return f"bernoulli:{self.a:g},{self.b:g}"


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo > 0:
            raise PreconditionError("Uniform support must be bounded away from 0")
        if self.lo > self.hi:
            raise PreconditionError("Uniform requires lo <= hi")

    @property
    def bounds(self) -> tuple[float, float]:
        return self.lo, self.hi

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def mean_inverse(self) -> float:
        if self.lo == self.hi:
            return 1 / self.lo
        return float(np.log(self.hi / self.lo) / (self.hi - self.lo))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=size)

    def __str__(self) -> str:
        return f"uniform:{self.lo:g},{self.hi:g}"


@dataclass(frozen=True)
class Constant:
    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise PreconditionError("constant resistance must be positive")

    @property
    def bounds(self) -> tuple[float, float]:
        return self.c, self.c

    def mean(self) -> float:
        return float(self.c)

    def mean_inverse(self) -> float:
        return 1 / self.c

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, float(self.c))

    def __str__(self) -> str:
        return f"const:{self.c:g}"


Distribution = Union[Bernoulli, Uniform, Constant]


def parse_distribution(text: str) -> Distribution:
    """Parse ``bernoulli:a,b``, ``uniform:lo,hi`` or ``const:c``."""
    kind, _, args = text.strip().partition(":")
    try:
        vals = [float(x) for x in args.split(",")] if args else []
    except ValueError:
        raise PreconditionError(f"bad distribution parameters in {text!r}") from None
    kind = kind.lower()
    if kind == "bernoulli" and len(vals) == 2:
        return Bernoulli(*vals)
    if kind == "uniform" and len(vals) == 2:
        return Uniform(*vals)
    if kind in ("const", "constant") and len(vals) == 1:
        return Constant(vals[0])
    raise PreconditionError(f"unknown distribution {text!r}; use bernoulli:a,b | uniform:lo,hi | const:c")


def splitmix64(x: int) -> int:
    """SplitMix64 output function (one step from state ``x``)."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SeedSpec:
    """A reproducible random stream: ``(master_seed, stream_index)``."""

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if self.stream_index < 0:
            raise PreconditionError("stream_index must be non-negative")

    def derived_seed(self) -> int:
        return splitmix64((self.master_seed & MASK64) ^ splitmix64(self.stream_index))

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.derived_seed()))

    def child(self, index: int) -> "SeedSpec":
        """Independent sub-stream, e.g. one per replica of a row."""
        return SeedSpec(self.derived_seed(), index)


@dataclass(frozen=True, eq=False)
class Environment:
    """Positive resistances indexed by edge id, plus optional provenance."""

    resistances: np.ndarray
    distribution: Distribution | None = None
    seed: SeedSpec | None = None

    def __post_init__(self):
        r = np.array(self.resistances, dtype=float, copy=True)
        if r.ndim != 1:
            raise PreconditionError("resistances must be 1-d")
        if not np.all(r > 0) or not np.all(np.isfinite(r)):
            raise PreconditionError("resistances must be finite and strictly positive")
        r.setflags(write=False)
        object.__setattr__(self, "resistances", r)

    def __len__(self) -> int:
        return self.resistances.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, Environment) and np.array_equal(self.resistances, other.resistances)

    __hash__ = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["edge_id", "resistance"])
        for k, x in enumerate(self.resistances):
            w.writerow([k, repr(float(x))])
        return buf.getvalue()


def constant_environment(net: Network, c: float = 1.0) -> Environment:
    return Environment(np.full(net.edge_count, float(c)), Constant(c))


def sample_environment(net: Network, dist: Distribution, seed: SeedSpec) -> Environment:
    """Draw one i.i.d. resistance per edge, deterministically from ``seed``."""
    return Environment(dist.sample(seed.rng(), net.edge_count), dist, seed)


def flip_edge(env: Environment, e: int, a: float, b: float) -> Environment:
    """Replace ``r_e`` by ``a + b - r_e``; all other edges unchanged."""
    r = env.resistances
    if not 0 <= e < len(r):
        raise PreconditionError(f"edge {e} out of range")
    if r[e] != a and r[e] != b:
        raise PreconditionError(f"r[{e}] = {r[e]!r} is not in {{{a}, {b}}}")
    out = r.copy()
    # exact swap instead of a+b-r, which could round
    out[e] = b if r[e] == a else a
    return Environment(out, env.distribution, env.seed)


def mask_environment(mask: int, n_edges: int, a: float, b: float) -> np.ndarray:
    bits = (mask >> np.arange(n_edges)) & 1
    return np.where(bits == 1, float(b), float(a))


def enumerate_environments(
    net: Network, a: float, b: float, max_edges: int = MAX_ENUM_EDGES
) -> Iterator[Environment]:
    """All ``2^|E|`` environments of ``{a, b}^E``; bit ``e`` of the index set means ``r_e = b``."""
    m = net.edge_count
    if m > max_edges:
        raise PreconditionError(f"{m} edges is too many to enumerate (limit {max_edges})")
    dist = Bernoulli(a, b)
    for mask in range(1 << m):
        yield Environment(mask_environment(mask, m, a, b), dist)
