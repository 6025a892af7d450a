"""Scalar term evaluators for the normalizer and density series.

Everything here is a plain scalar function of floats so it compiles under
``numba.njit`` and runs unchanged as Python when numba is disabled.

Density series, for fixed ``t > 0``::

    Q(t) = L(t) + sum_{k>=1} (-1)^(k+1) h_k(t) / sqrt(2 pi t^3)

    L(t)   = (a - b t) exp(-(a + b t)^2 / (2t)) / sqrt(2 pi t^3)
    h_k(t) = exp(-2 k^2 a b) * [ (-a + b t + 2ak) exp(-(a + b t - 2ak)^2 / (2t))
                                - (a - b t + 2ak) exp(-(a + b t + 2ak)^2 / (2t)) ]

``Q`` is the derivative of the defective CDF, i.e. ``C * f`` with ``f`` the
conditional density.
"""
import math

from ._accel import njit

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
LOG6 = math.log(6.0)
# bracket width below which a comparison is declared unresolvable
RESOLVE_EPS = 2.0 ** -40
# rounding margin per unit of sum |term|: a bracket must clear the threshold
# by ROUND_GAMMA * sum |term| before a comparison counts as decided
ROUND_GAMMA = 2.0 ** -44


@njit
def c_term(ab, k):
    """k-th term (k >= 1) of ``2 sum (-1)^(k+1) exp(-2 k^2 ab)``."""
    v = 2.0 * math.exp(-2.0 * k * k * ab)
    if k % 2 == 1:
        return v
    return -v


@njit
def q_lead(a, b, t):
    x = a + b * t
    return (a - b * t) * math.exp(-x * x / (2.0 * t) - 1.5 * math.log(t) - LOG_SQRT_2PI)


@njit
def q_log_lead(a, b, t):
    """(sign, log|L(t)|) of the leading density term."""
    c = a - b * t
    if c == 0.0:
        return 0.0, -math.inf
    x = a + b * t
    e = -x * x / (2.0 * t) - 1.5 * math.log(t) - LOG_SQRT_2PI + math.log(abs(c))
    return (1.0 if c > 0.0 else -1.0), e


@njit
def q_log_term(a, b, t, k):
    """(sign, log|term|) of the k-th density correction, k >= 1.

    Exponents are combined before exponentiating so the term stays
    representable in log form long after its value underflows.
    """
    x = a + b * t
    y = 2.0 * a * k
    inner = (-a + b * t + y) - (a - b * t + y) * math.exp(-2.0 * x * y / t)
    if inner == 0.0:
        return 0.0, -math.inf
    d = x - y
    e = -2.0 * k * k * a * b - d * d / (2.0 * t) - 1.5 * math.log(t) - LOG_SQRT_2PI
    s = 1.0 if inner > 0.0 else -1.0
    if k % 2 == 0:
        s = -s
    return s, e + math.log(abs(inner))


@njit
def q_term(a, b, t, k):
    s, l = q_log_term(a, b, t, k)
    if s == 0.0:
        return 0.0
    return s * math.exp(l)


@njit
def tail_index_q(a, b, t):
    """First index past which density partial sums oscillate."""
    m = max(LOG6 / (4.0 * a * b), b * t / (2.0 * a), 1.0)
    return int(math.ceil(m + 1.0))


@njit
def neumaier_add(s, c, x):
    """One step of Neumaier summation; the running value is ``s + c``."""
    t = s + x
    if abs(s) >= abs(x):
        c += (s - t) + x
    else:
        c += (x - t) + s
    return t, c
