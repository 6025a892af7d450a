"""Exact sampler for the first passage time to ``+-(a + b t)``.

Sampling runs in two phases. A uniform is compared with the hitting
probability ``C`` to decide whether the time is finite; finite times are
then drawn by acceptance-rejection from a Gamma(alpha, b^2/2) proposal. Every
comparison against an infinite series is decided exactly from bracketing
partial sums, so no truncation error enters the samples.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import _terms
from .distribution import prob_finite
from .errors import CalibrationFailure, ProposalExhaustion, UnresolvedComparison, UnsupportedBoundary
from .kernels import get_kernels
from .rng import RandomSource
from .series import Boundary

DEFAULT_ALPHA = 0.5
SAFETY = 2.0
PROPOSAL_CAP = 10**6
_MAX_BATCH = 1 << 16


@dataclass(frozen=True)
class EnvelopeConfig:
    """Gamma proposal plus the constant ``M'`` with ``Q <= M' g`` everywhere.

    ``t_lo``/``t_hi`` record the calibration grid span.
    """

    alpha: float
    rate: float
    log_m_prime: float
    t_lo: float = math.nan
    t_hi: float = math.nan

    def __post_init__(self):
        if not self.alpha >= 0.5:
            raise ValueError(f"alpha must be >= 1/2, got {self.alpha}")
        if not self.rate > 0.0:
            raise ValueError(f"rate must be > 0, got {self.rate}")
        if not math.isfinite(self.log_m_prime):
            raise CalibrationFailure(f"log_m_prime is not finite: {self.log_m_prime}")

    @property
    def m_prime(self) -> float:
        return math.exp(self.log_m_prime)

    def log_envelope(self, t):
        """``log(M' g(t))``."""
        return self.log_m_prime + log_gamma_pdf(t, self.alpha, self.rate)

    def check_boundary(self, boundary: Boundary):
        if self.rate != boundary.b * boundary.b / 2.0:
            raise ValueError(f"envelope rate {self.rate} does not match b^2/2 for b={boundary.b}")


@dataclass(frozen=True)
class FptOutcome:
    """A passage time; ``math.inf`` encodes "boundary never hit"."""

    time: float

    @classmethod
    def finite(cls, t: float) -> FptOutcome:
        if not (0.0 <= t < math.inf):
            raise ValueError(f"finite outcome needs 0 <= t < inf, got {t}")
        return cls(float(t))

    @classmethod
    def infinite(cls) -> FptOutcome:
        return cls(math.inf)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.time)


@dataclass
class SamplerStats:
    proposals: int = 0
    accepted: int = 0
    max_terms_used: int = 0
    unresolved_events: int = 0
    finiteness_trials: int = 0
    finite: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else math.nan

    def merge(self, other: SamplerStats) -> SamplerStats:
        self.proposals += other.proposals
        self.accepted += other.accepted
        self.max_terms_used = max(self.max_terms_used, other.max_terms_used)
        self.unresolved_events += other.unresolved_events
        self.finiteness_trials += other.finiteness_trials
        self.finite += other.finite
        return self


def log_gamma_pdf(t, alpha: float, rate: float):
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(divide="ignore"):
        out = alpha * math.log(rate) + (alpha - 1.0) * np.log(t) - rate * t - gammaln(alpha)
    return out[()] if out.ndim == 0 else out


def right_tail_constant(boundary: Boundary, t0: float) -> float:
    """``B`` with ``Q(t) sqrt(t) exp(b^2 t / 2) <= B`` for all ``t >= t0``.

    The leading term plus the first half of the k = 1 correction is exactly
    ``2a exp(-(a + bt)^2 / 2t) / sqrt(2 pi t^3)``; the second half of k = 1
    is at most ``bt exp(-4ab)`` times the same factor and each ``k >= 2``
    correction at most ``2(a + bt + 2ak) exp(-2ab(k^2 - k))`` times it.
    Every piece of the resulting bound is nonincreasing in ``t``.
    """
    a, b, ab = boundary.a, boundary.b, boundary.ab
    terms = [2.0 * a / t0, b * math.exp(-4.0 * ab)]
    k = 2
    while True:
        w = math.exp(-2.0 * ab * (k * k - k))
        terms.append(2.0 * (b + (a + 2.0 * a * k) / t0) * w)
        if w < 1e-20:
            break
        k += 1
    return math.exp(-ab) / math.sqrt(2.0 * math.pi) * math.fsum(terms)


def _choose_t_hi(boundary: Boundary, c: float) -> float:
    # smallest doubling with certified conditional tail mass < 1e-10
    lam = boundary.b * boundary.b / 2.0
    t = 1.0 / lam
    while True:
        log_tail = math.log(right_tail_constant(boundary, t)) - 0.5 * math.log(t) - math.log(lam) - lam * t
        if log_tail - math.log(c) < math.log(1e-10):
            return t
        t *= 2.0


def calibrate_envelope(boundary: Boundary, alpha: float = DEFAULT_ALPHA, grid_size: int = 4096,
                       backend: str | None = None) -> EnvelopeConfig:
    """Compute ``M'`` for a Gamma(alpha, b^2/2) proposal.

    ``M' = 2 * max(grid sup of Q/g, analytic bound on Q/g beyond the grid)``.
    The grid is log-uniform on ``[a^2/1500, t_hi]``; below it ``Q`` is under
    ``exp(-750)`` and ``Q/g`` vanishes, above it the right-tail constant
    takes over.
    """
    if not alpha >= 0.5:
        raise ValueError(f"alpha must be >= 1/2, got {alpha}")
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    kern = get_kernels(backend)
    a, b = boundary.a, boundary.b
    rate = b * b / 2.0
    c = prob_finite(boundary, 1e-16)
    t_hi = _choose_t_hi(boundary, c)
    t_lo = min(a * a / 1500.0, t_hi * 1e-6)
    grid = np.geomspace(t_lo, t_hi, grid_size)
    _, hi = kern.q_bracket(a, b, grid, 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.where(hi > 0.0, np.log(np.where(hi > 0.0, hi, 1.0)), -np.inf) - log_gamma_pdf(grid, alpha, rate)
    if np.isnan(log_ratio).any() or np.isposinf(log_ratio).any():
        raise CalibrationFailure(f"non-finite Q/g on the calibration grid for {boundary}, alpha={alpha}")
    log_grid_sup = float(log_ratio.max())
    log_tail = (math.log(right_tail_constant(boundary, t_hi)) + gammaln(alpha) - alpha * math.log(rate)
                + (0.5 - alpha) * math.log(t_hi))
    log_m_prime = math.log(SAFETY) + max(log_grid_sup, log_tail)
    if not math.isfinite(log_m_prime):
        raise CalibrationFailure(f"envelope constant not finite for {boundary}, alpha={alpha}")
    return EnvelopeConfig(alpha=float(alpha), rate=rate, log_m_prime=float(log_m_prime), t_lo=t_lo, t_hi=t_hi)


def predicted_acceptance(boundary: Boundary, env: EnvelopeConfig) -> float:
    """Acceptance probability ``C / M'`` of one proposal."""
    return math.exp(math.log(prob_finite(boundary, 1e-16)) - env.log_m_prime)


def _handle_unresolved(codes, stats, policy, what):
    bad = int(np.count_nonzero(codes == -1))
    if bad:
        stats.unresolved_events += bad
        if policy == "raise":
            raise UnresolvedComparison(f"{bad} {what} comparison(s) hit the resolution floor")
        codes[codes == -1] = 0
    return codes


def resolve_finiteness(boundary: Boundary, u: float) -> tuple[bool, int]:
    """Exact ``u < C`` decision. Returns (finite, partial sums used)."""
    codes, terms = get_kernels("numpy").decide_normalizer(boundary.ab, np.array([float(u)]), _terms.RESOLVE_EPS)
    if codes[0] == -1:
        raise UnresolvedComparison(f"u={u!r} indistinguishable from C at the resolution floor")
    return bool(codes[0] == 1), int(terms[0])


def finiteness_trials(boundary: Boundary, rng: RandomSource, n: int, stats: SamplerStats | None = None,
                      on_unresolved: str = "raise", backend: str | None = None) -> np.ndarray:
    """``n`` independent Bernoulli(C) draws, decided exactly."""
    stats = stats if stats is not None else SamplerStats()
    u = rng.uniforms(n)
    codes, terms = get_kernels(backend).decide_normalizer(boundary.ab, u, _terms.RESOLVE_EPS)
    codes = _handle_unresolved(codes, stats, on_unresolved, "finiteness")
    if n:
        stats.max_terms_used = max(stats.max_terms_used, int(terms.max()))
    out = codes == 1
    stats.finiteness_trials += n
    stats.finite += int(out.sum())
    return out


def finiteness_trial(boundary: Boundary, rng: RandomSource, stats: SamplerStats | None = None) -> bool:
    return bool(finiteness_trials(boundary, rng, 1, stats)[0])


def conditional_samples(boundary: Boundary, env: EnvelopeConfig, rng: RandomSource, n: int,
                        stats: SamplerStats | None = None, *, proposal_cap: int = PROPOSAL_CAP,
                        on_unresolved: str = "raise", backend: str | None = None) -> np.ndarray:
    """Draw ``n`` passage times conditioned on being finite.

    Proposals are drawn in batches (uniforms, then gammas); the batch size
    depends only on ``n`` and the predicted acceptance rate, so the stream
    consumed for a given seed is fixed. Proposals after the ``n``-th
    acceptance are discarded and not counted.
    """
    env.check_boundary(boundary)
    stats = stats if stats is not None else SamplerStats()
    kern = get_kernels(backend)
    a, b = boundary.a, boundary.b
    p = max(predicted_acceptance(boundary, env), 1e-6)
    out = np.empty(n)
    filled = 0
    since_last = 0
    while filled < n:
        remaining = n - filled
        size = int(min(max(64, math.ceil(1.2 * remaining / p) + 32), _MAX_BATCH))
        u = rng.uniforms(size)
        v = rng.gamma(env.alpha, env.rate, size)
        with np.errstate(over="ignore", divide="ignore"):
            s = np.exp(env.log_envelope(np.where(v > 0.0, v, 1.0)) + np.log(u))
        ok = v > 0.0
        codes = np.zeros(size, dtype=np.int8)
        terms = np.zeros(size, dtype=np.int64)
        if ok.any():
            codes[ok], terms[ok] = kern.decide_density(a, b, v[ok], s[ok], _terms.RESOLVE_EPS)
        hits = np.flatnonzero(codes == 1)
        cut = size if hits.size < remaining else int(hits[remaining - 1]) + 1
        codes, terms = codes[:cut], terms[:cut]
        codes = _handle_unresolved(codes, stats, on_unresolved, "acceptance")
        hits = np.flatnonzero(codes == 1)
        if hits.size == 0:
            since_last += cut
            longest = since_last
        else:
            longest = max(since_last + int(hits[0]) + 1, int(np.diff(hits).max(initial=0)))
            since_last = cut - 1 - int(hits[-1])
        if longest > proposal_cap:
            raise ProposalExhaustion(f"no acceptance within {proposal_cap} proposals for {boundary}")
        out[filled:filled + hits.size] = v[hits]
        filled += hits.size
        stats.proposals += cut
        stats.accepted += int(hits.size)
        if cut:
            stats.max_terms_used = max(stats.max_terms_used, int(terms.max()))
    return out


def conditional_sample(boundary: Boundary, env: EnvelopeConfig, rng: RandomSource,
                       stats: SamplerStats | None = None, **kwargs) -> float:
    return float(conditional_samples(boundary, env, rng, 1, stats, **kwargs)[0])


def _check_ab(a: float, b: float):
    a, b = float(a), float(b)
    if not (math.isfinite(a) and math.isfinite(b)) or a < 0.0 or b < 0.0:
        raise ValueError(f"need finite a >= 0 and b >= 0, got a={a}, b={b}")
    if a > 0.0 and b == 0.0:
        raise UnsupportedBoundary(
            "b = 0 makes the gamma proposal rate b^2/2 vanish; for a constant boundary "
            "use the dedicated b = 0 method of Burq and Jones instead"
        )
    return a, b


def sample_many(a: float, b: float, n: int, rng: RandomSource, env: EnvelopeConfig | None = None,
                stats: SamplerStats | None = None, *, alpha: float = DEFAULT_ALPHA,
                on_unresolved: str = "raise", backend: str | None = None) -> np.ndarray:
    """``n`` draws of the passage time; ``inf`` marks paths that never hit.

    ``a = 0`` gives zeros (the path starts on the boundary).
    """
    a, b = _check_ab(a, b)
    stats = stats if stats is not None else SamplerStats()
    if a == 0.0:
        stats.finiteness_trials += n
        stats.finite += n
        return np.zeros(n)
    boundary = Boundary(a, b)
    if env is None:
        env = calibrate_envelope(boundary, alpha, backend=backend)
    env.check_boundary(boundary)
    finite = finiteness_trials(boundary, rng, n, stats, on_unresolved, backend)
    out = np.full(n, math.inf)
    out[finite] = conditional_samples(boundary, env, rng, int(finite.sum()), stats,
                                      on_unresolved=on_unresolved, backend=backend)
    return out


def sample(a: float, b: float, env: EnvelopeConfig | None, rng: RandomSource,
           stats: SamplerStats | None = None, **kwargs) -> FptOutcome:
    t = sample_many(a, b, 1, rng, env, stats, **kwargs)[0]
    return FptOutcome.finite(t) if math.isfinite(t) else FptOutcome.infinite()


def shard_sizes(n: int, workers: int) -> list[int]:
    q, r = divmod(n, workers)
    return [q + (1 if w < r else 0) for w in range(workers)]


def sample_sharded(a: float, b: float, n: int, seed: int, workers: int = 1, env: EnvelopeConfig | None = None,
                   stats: SamplerStats | None = None, **kwargs) -> np.ndarray:
    """Split ``n`` draws over independent per-worker streams.

    Output is ordered by worker index, then draw index, so it depends on
    ``(seed, workers)`` but not on thread scheduling. With one worker the
    stream is ``RandomSource(seed)`` itself.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    stats = stats if stats is not None else SamplerStats()
    a, b = _check_ab(a, b)
    if env is None and a > 0.0:
        env = calibrate_envelope(Boundary(a, b), kwargs.get("alpha", DEFAULT_ALPHA), backend=kwargs.get("backend"))
    if workers == 1:
        return sample_many(a, b, n, RandomSource(seed), env, stats, **kwargs)
    sizes = shard_sizes(n, workers)
    shard_stats = [SamplerStats() for _ in sizes]

    def run(w):
        return sample_many(a, b, sizes[w], RandomSource.for_worker(seed, w), env, shard_stats[w], **kwargs)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(run, range(workers)))
    for s in shard_stats:
        stats.merge(s)
    return np.concatenate(parts) if parts else np.empty(0)
