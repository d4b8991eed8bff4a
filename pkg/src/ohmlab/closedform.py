"""Exact formulas: parallel-series network resistance and moments, d=1 moments."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ohmlab.errors import PreconditionError


@dataclass(frozen=True)
class StageMoments:
    stage: int
    mean: float
    variance: float


def ps_resistance(env) -> float:
    """Resistance of G_n: sum over stages of the parallel combination of ``2i+1`` edges.

    ``env`` must follow the stage-by-stage edge layout of ``build_parallel_series``.
    """
    r = np.asarray(getattr(env, "resistances", env), dtype=float)
    n = math.isqrt(len(r))
    if n < 1 or n * n != len(r):
        raise PreconditionError(f"{len(r)} edges is not a parallel-series layout (need n^2)")
    total = []
    for i in range(n):
        stage = r[i * i : (i + 1) * (i + 1)]
        total.append(1.0 / math.fsum(1.0 / stage))
    return math.fsum(total)


def _binomial_half_weights(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Binomial(k, 1/2) support and weights, dropping weights below 1e-25 of the mode."""
    j = np.arange(k + 1)
    logw = gammaln(k + 1) - gammaln(j + 1) - gammaln(k - j + 1) - k * math.log(2.0)
    keep = logw > logw.max() - 57.5
    return j[keep], np.exp(logw[keep])


def ps_stage_moments(i: int, a: float, b: float) -> StageMoments:
    """Exact mean and variance of stage ``i``'s resistance ``Y_i``.

    With ``j`` of the ``2i+1`` edges at ``b`` the stage conductance is
    ``(2i+1-j)/a + j/b`` and ``j`` is Binomial(2i+1, 1/2).
    """
    if i < 0:
        raise PreconditionError("stage index must be non-negative")
    if not 0 < a <= b:
        raise PreconditionError("need 0 < a <= b")
    k = 2 * i + 1
    j, w = _binomial_half_weights(k)
    y = 1.0 / ((k - j) / a + j / b)
    mean = math.fsum((w * y).tolist())
    dev = y - mean
    var = math.fsum((w * dev * dev).tolist())  # two-pass: E[Y^2] - mean^2 cancels badly for large i
    return StageMoments(i, mean, var)


def ps_exact_moments(n: int, a: float, b: float) -> dict:
    """Mean and variance of ``R(0 <-> n)`` on G_n; stages are independent."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    stages = [ps_stage_moments(i, a, b) for i in range(n)]
    return {
        "mean": math.fsum(s.mean for s in stages),
        "variance": math.fsum(s.variance for s in stages),
    }


def ps_variance_constant(i: int, a: float = 0.5, b: float = 1.0) -> float:
    """``(i + 1/2)^3 Var(Y_i)``, whose large-i limit is the stage-variance constant."""
    return (i + 0.5) ** 3 * ps_stage_moments(i, a, b).variance


def ps_variance_limit(a: float, b: float) -> float:
    """Delta-method limit of ``(i + 1/2)^3 Var(Y_i)`` as ``i -> infinity``.

    The stage conductance has mean ``(2i+1) c`` and variance ``(2i+1) s^2`` with
    ``c = (1/a + 1/b)/2`` and ``s = (1/a - 1/b)/2``; so
    ``Var(Y_i) ~ (2i+1) s^2 / ((2i+1) c)^4 = s^2 / (8 c^4 (i+1/2)^3)``.
    """
    c = 0.5 * (1 / a + 1 / b)
    s = 0.5 * (1 / a - 1 / b)
    return s * s / (8.0 * c**4)


def d1_moments(n: int, a: float, b: float) -> dict:
    """Series path of ``n`` i.i.d. Bernoulli{a,b} edges: ``R = n a + (b - a) Binomial(n, 1/2)``."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    return {"mean": n * (a + b) / 2.0, "variance": n * (b - a) ** 2 / 4.0}
