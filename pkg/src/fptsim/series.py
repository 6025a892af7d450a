"""The normalizer and density series, their tail indices, and exact comparison.

Both series have partial sums that eventually oscillate: past a known index
consecutive partial sums bracket the limit, so ``limit > s`` can be decided
after finitely many terms for any threshold ``s`` not equal to the limit.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator

from . import _terms
from .errors import DegenerateDifference, UnresolvedComparison


@dataclass(frozen=True)
class Boundary:
    """Symmetric linear boundary ``+-(a + b t)``."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError(f"boundary parameters must be finite, got a={a}, b={b}")
        if a <= 0.0 or b <= 0.0:
            raise ValueError(f"Boundary needs a > 0 and b > 0, got a={a}, b={b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def ab(self) -> float:
        return self.a * self.b


class SeriesKind(enum.Enum):
    NORMALIZER = "normalizer"
    DENSITY = "density"


class CompareOutcome(enum.Enum):
    GREATER = "greater"
    LESS = "less"


class _Neumaier:
    __slots__ = ("s", "c")

    def __init__(self, start=0.0):
        self.s, self.c = float(start), 0.0

    def add(self, x):
        self.s, self.c = _terms.neumaier_add(self.s, self.c, x)

    @property
    def value(self):
        return self.s + self.c


@dataclass(frozen=True)
class PartialSumSeries:
    """One of the two oscillating series, evaluated by partial sums.

    ``NORMALIZER`` sums to the probability that the boundary is ever hit;
    ``DENSITY`` at time ``t`` sums to the unnormalized density ``Q(t)``.
    """

    kind: SeriesKind
    boundary: Boundary
    t: float | None = None

    def __post_init__(self):
        if self.kind is SeriesKind.DENSITY:
            if self.t is None or not self.t > 0.0:
                raise ValueError(f"density series needs t > 0, got t={self.t}")
            object.__setattr__(self, "t", float(self.t))

    @classmethod
    def normalizer(cls, boundary: Boundary) -> PartialSumSeries:
        return cls(SeriesKind.NORMALIZER, boundary)

    @classmethod
    def density(cls, boundary: Boundary, t: float) -> PartialSumSeries:
        return cls(SeriesKind.DENSITY, boundary, t)

    @property
    def tail_index(self) -> int:
        if self.kind is SeriesKind.NORMALIZER:
            return tail_index_c()
        return tail_index_q(self.boundary, self.t)

    def initial(self) -> float:
        """Value of the empty partial sum (index 0)."""
        if self.kind is SeriesKind.NORMALIZER:
            return 0.0
        return _terms.q_lead(self.boundary.a, self.boundary.b, self.t)

    def term(self, k: int) -> float:
        """``partial(k) - partial(k - 1)`` for ``k >= 1``."""
        if k < 1:
            raise ValueError("terms are indexed from 1")
        bd = self.boundary
        if self.kind is SeriesKind.NORMALIZER:
            return _terms.c_term(bd.ab, k)
        return _terms.q_term(bd.a, bd.b, self.t, k)

    def log_term(self, k: int) -> tuple[float, float]:
        """``(sign, log|term(k)|)``; finite long after ``term(k)`` underflows."""
        if k < 1:
            raise ValueError("terms are indexed from 1")
        bd = self.boundary
        if self.kind is SeriesKind.NORMALIZER:
            return (1.0 if k % 2 == 1 else -1.0), math.log(2.0) - 2.0 * k * k * bd.ab
        return _terms.q_log_term(bd.a, bd.b, self.t, k)

    def partials(self) -> Iterator[float]:
        """Yield ``partial(0), partial(1), ...`` with compensated summation."""
        acc = _Neumaier(self.initial())
        yield acc.value
        k = 1
        while True:
            acc.add(self.term(k))
            yield acc.value
            k += 1

    def partial(self, n: int) -> float:
        if n < 0:
            raise ValueError("n must be >= 0")
        for i, v in enumerate(self.partials()):
            if i == n:
                return v
        raise AssertionError("unreachable")


def c_partial(boundary: Boundary, n: int) -> float:
    """n-term partial sum of the normalizer series."""
    return PartialSumSeries.normalizer(boundary).partial(n)


def q_partial(boundary: Boundary, t: float, n: int) -> float:
    """Leading density term plus the first ``n`` corrections."""
    if not t > 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    return PartialSumSeries.density(boundary, t).partial(n)


def tail_index_c() -> int:
    # consecutive-term ratio is exp(-2(2n+1)ab) in (0, 1) for every n >= 1
    return 1


def tail_index_q(boundary: Boundary, t: float) -> int:
    if not t > 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    return _terms.tail_index_q(boundary.a, boundary.b, float(t))


def decide_compare(series: PartialSumSeries, s: float, on_unresolved: str = "raise") -> CompareOutcome:
    """Decide whether the series limit is above or below ``s``.

    Walks consecutive partial sums from the tail index on. Past the tail
    index they bracket the limit, so the answer is final as soon as both
    lie on the same side of ``s`` with room to spare for rounding: the
    clearance must exceed ``2**-44`` times the running sum of term
    magnitudes. Without that margin a heavily cancelling sum could "decide"
    on its own rounding noise.

    ``on_unresolved`` controls what happens if the bracket narrows below
    ``2**-40 * max(1, |s|)`` first: ``"raise"`` (default) raises
    :class:`UnresolvedComparison`; ``"less"`` answers ``LESS``, which in
    acceptance-rejection only causes a fresh proposal.
    """
    if on_unresolved not in ("raise", "less"):
        raise ValueError(f"unknown on_unresolved policy {on_unresolved!r}")
    s = float(s)
    n0 = series.tail_index
    acc = _Neumaier(series.initial())
    absum = abs(series.initial())
    for k in range(1, n0 + 1):
        x = series.term(k)
        acc.add(x)
        absum += abs(x)
    prev = acc.value
    k = n0
    while True:
        x = series.term(k + 1)
        acc.add(x)
        absum += abs(x)
        cur = acc.value
        lo, hi = min(prev, cur), max(prev, cur)
        margin = _terms.ROUND_GAMMA * absum
        if lo - margin > s:
            return CompareOutcome.GREATER
        if hi + margin < s:
            return CompareOutcome.LESS
        if hi - lo < _terms.RESOLVE_EPS * max(1.0, abs(s)):
            if on_unresolved == "less":
                return CompareOutcome.LESS
            raise UnresolvedComparison(
                f"{series.kind.value} series unresolved against s={s!r} at k={k}: bracket [{lo!r}, {hi!r}]"
            )
        prev = cur
        k += 1


def oscillation_ratio_log(series: PartialSumSeries, n: int) -> tuple[float, float]:
    """``(sign, log|r|)`` of :func:`oscillation_ratio`.

    Far into the tail the ratio itself underflows to ``-0.0``; the log form
    keeps its sign and size.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    s1, l1 = series.log_term(n + 1)
    s0, l0 = series.log_term(n)
    if s0 == 0.0 or l0 == -math.inf:
        raise DegenerateDifference(f"S_{n} - S_{n - 1} vanished for {series}")
    if s1 == 0.0:
        return 0.0, -math.inf
    return s1 * s0, l1 - l0


def oscillation_ratio(series: PartialSumSeries, n: int) -> float:
    """``(S_{n+1} - S_n) / (S_n - S_{n-1})`` for ``n >= 1``.

    Differences of partial sums are exactly the series terms, so the ratio
    is taken from the log-magnitudes of terms ``n + 1`` and ``n`` rather
    than from rounded partial sums, which stop changing once terms drop
    below an ulp.
    """
    sign, log_r = oscillation_ratio_log(series, n)
    return sign * math.exp(log_r)
