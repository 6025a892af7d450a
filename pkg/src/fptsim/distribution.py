"""Analytic law of the first passage time to ``+-(a + b t)``.

The distribution is defective: the boundary is hit with probability
``C = 2 sum_{k>=1} (-1)^(k+1) exp(-2 k^2 a b) < 1`` and never otherwise.
All evaluators truncate alternating sums with a certified remainder bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from . import _terms
from .series import Boundary, PartialSumSeries

DEFAULT_TOL = 1e-12
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ToleranceSpec:
    abs_tol: float = DEFAULT_TOL

    def __post_init__(self):
        if not 0.0 < self.abs_tol < 1.0:
            raise ValueError(f"abs_tol must lie in (0, 1), got {self.abs_tol}")


@dataclass(frozen=True)
class EvalBracket:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"empty bracket [{self.lower}, {self.upper}]")

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _tol(tol) -> float:
    if tol is None:
        return DEFAULT_TOL
    if isinstance(tol, ToleranceSpec):
        return tol.abs_tol
    return ToleranceSpec(float(tol)).abs_tol


def _n_pairs(ab: float, tol: float) -> int:
    # alternating terms with decreasing magnitude: remainder <= first omitted
    k = 0
    while 2.0 * math.exp(-2.0 * (k + 1) ** 2 * ab) >= tol:
        k += 1
    return k


def prob_finite(boundary: Boundary, tol=None) -> float:
    """Probability that the boundary is ever hit."""
    ab = boundary.ab
    K = max(_n_pairs(ab, _tol(tol)), 1)
    c = math.fsum(_terms.c_term(ab, k) for k in range(1, K + 1))
    # C < 1; a truncated sum may overshoot when C is within tol of 1
    return min(c, 1.0 - 2.0 ** -53)


def _upper_tail(x):
    return 0.5 * erfc(x / _SQRT2)


def std_normal_integral(lo, hi):
    """``Phi(hi) - Phi(lo)`` without cancellation in either tail."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if np.any(lo > hi):
        raise ValueError("std_normal_integral needs lo <= hi")
    out = np.where(
        lo >= 0.0,
        _upper_tail(lo) - _upper_tail(hi),
        np.where(hi <= 0.0, _upper_tail(-hi) - _upper_tail(-lo), 1.0 - _upper_tail(-lo) - _upper_tail(hi)),
    )
    return out[()] if out.ndim == 0 else out


def cdf(boundary: Boundary, t, tol=None):
    """``P[tau <= t]`` (defective). Accepts a scalar or an array of times."""
    tol = _tol(tol)
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0.0) or np.any(np.isnan(t)):
        raise ValueError("cdf needs t >= 0")
    a, b, ab = boundary.a, boundary.b, boundary.ab
    pos = t > 0.0
    tp = np.where(pos, t, 1.0)
    x = a + b * tp
    rt = np.sqrt(tp)
    # 1 - (k = 0 integral) is an upper-tail mass, computed directly
    acc = erfc(x / (_SQRT2 * rt))
    comp = np.zeros_like(acc)
    for k in range(1, _n_pairs(ab, tol) + 1):
        w = 2.0 * math.exp(-2.0 * k * k * ab)
        inner = std_normal_integral((-x + 2 * a * k) / rt, (x + 2 * a * k) / rt)
        term = -w * inner if k % 2 == 0 else w * inner
        # Kahan-compensated accumulation across k
        y = term - comp
        s = acc + y
        comp = (s - acc) - y
        acc = s
    out = np.where(pos, np.clip(acc, 0.0, 1.0), 0.0)
    return out[()] if out.ndim == 0 else out


def conditional_cdf(boundary: Boundary, t, tol=None):
    """``P[tau <= t | tau < inf]``; ``t = inf`` gives 1."""
    tol = _tol(tol)
    t = np.asarray(t, dtype=np.float64)
    inf = np.isinf(t) & (t > 0)
    c = prob_finite(boundary, min(tol, 1e-16))
    out = np.where(inf, 1.0, np.clip(cdf(boundary, np.where(inf, 0.0, t), tol) / c, 0.0, 1.0))
    return out[()] if out.ndim == 0 else out


def q_bracket(boundary: Boundary, t: float, tol=None) -> EvalBracket:
    """Bracket the unnormalized density ``Q(t) = C f(t)`` to width ``<= 2 tol``.

    Consecutive partial sums past the tail index bracket the limit; the
    walk also stops once the bracket stops shrinking (terms underflowed).
    """
    tol = _tol(tol)
    if not t > 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    series = PartialSumSeries.density(boundary, t)
    n0 = series.tail_index
    it = series.partials()
    for _ in range(n0):
        next(it)
    prev = next(it)
    last_width = math.inf
    for cur in it:
        lo, hi = min(prev, cur), max(prev, cur)
        width = hi - lo
        if width <= 2.0 * tol or width == 0.0 or width >= last_width:
            return EvalBracket(lo, hi)
        last_width = width
        prev = cur
    raise AssertionError("unreachable")


def density(boundary: Boundary, t: float, tol=None) -> float:
    """Conditional density of the passage time given that it is finite."""
    tol = _tol(tol)
    c = prob_finite(boundary, min(tol, 1e-16) * 1e-2)
    br = q_bracket(boundary, t, 0.5 * tol * c)
    f = br.mid / c
    if -tol <= f < 0.0:
        return 0.0
    return f


def log_q(boundary: Boundary, t, return_scale: bool = False):
    """``log Q(t)`` summed in log space, usable where ``Q`` underflows.

    Returns ``-inf`` where the summed value is not positive. With
    ``return_scale`` also returns the log of the largest term magnitude;
    where ``log Q`` is within ~23 of it (relative 1e-10) the value is
    resolved, below that it is dominated by cancellation error.
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    a, b = boundary.a, boundary.b
    out = np.empty(t.shape)
    scale = np.empty(t.shape)
    for i, ti in enumerate(t):
        n0 = _terms.tail_index_q(a, b, ti)
        signs, logs = [], []
        s, l = _terms.q_log_lead(a, b, ti)
        signs.append(s)
        logs.append(l)
        k = 1
        while True:
            s, l = _terms.q_log_term(a, b, ti, k)
            signs.append(s)
            logs.append(l)
            if k > n0 and l < max(logs) - 80.0:
                break
            k += 1
        m = max(logs)
        scale[i] = m
        if m == -math.inf:
            out[i] = -math.inf
            continue
        total = math.fsum(s * math.exp(l - m) for s, l in zip(signs, logs) if s != 0.0)
        out[i] = m + math.log(total) if total > 0.0 else -math.inf
    if return_scale:
        return out, scale
    return out
