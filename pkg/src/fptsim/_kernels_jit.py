"""numba kernels: one scalar loop per element.

Only imported when numba is usable; the numpy twins live in
``_kernels_np`` and must consume inputs in exactly the same order.
"""
import math

import numpy as np
from numba import njit

from ._terms import ROUND_GAMMA, c_term, neumaier_add, q_lead, q_term, tail_index_q


@njit(cache=True)
def _decide_normalizer_one(ab, u, eps):
    x = c_term(ab, 1)
    s, c = neumaier_add(0.0, 0.0, x)
    absum = abs(x)
    prev = s + c
    k = 1
    while True:
        x = c_term(ab, k + 1)
        s, c = neumaier_add(s, c, x)
        absum += abs(x)
        cur = s + c
        lo = min(prev, cur)
        hi = max(prev, cur)
        margin = ROUND_GAMMA * absum
        if lo - margin > u:
            return 1, k + 1
        if hi + margin < u:
            return 0, k + 1
        if hi - lo < eps * max(1.0, abs(u)):
            return -1, k + 1
        prev = cur
        k += 1


@njit(cache=True)
def decide_normalizer(ab, u, eps):
    n = u.shape[0]
    codes = np.empty(n, dtype=np.int8)
    terms = np.empty(n, dtype=np.int64)
    for i in range(n):
        r, m = _decide_normalizer_one(ab, u[i], eps)
        codes[i] = r
        terms[i] = m
    return codes, terms


@njit(cache=True)
def _decide_density_one(a, b, t, thr, eps):
    n0 = tail_index_q(a, b, t)
    s = q_lead(a, b, t)
    c = 0.0
    absum = abs(s)
    for k in range(1, n0 + 1):
        x = q_term(a, b, t, k)
        s, c = neumaier_add(s, c, x)
        absum += abs(x)
    prev = s + c
    k = n0
    while True:
        x = q_term(a, b, t, k + 1)
        s, c = neumaier_add(s, c, x)
        absum += abs(x)
        cur = s + c
        lo = min(prev, cur)
        hi = max(prev, cur)
        margin = ROUND_GAMMA * absum
        if lo - margin > thr:
            return 1, k + 1
        if hi + margin < thr:
            return 0, k + 1
        if hi - lo < eps * max(1.0, abs(thr)):
            return -1, k + 1
        prev = cur
        k += 1


@njit(cache=True)
def decide_density(a, b, t, thr, eps):
    n = t.shape[0]
    codes = np.empty(n, dtype=np.int8)
    terms = np.empty(n, dtype=np.int64)
    for i in range(n):
        r, m = _decide_density_one(a, b, t[i], thr[i], eps)
        codes[i] = r
        terms[i] = m
    return codes, terms


@njit(cache=True)
def q_bracket(a, b, t, extra):
    n = t.shape[0]
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        stop = tail_index_q(a, b, t[i]) + extra
        s = q_lead(a, b, t[i])
        c = 0.0
        for k in range(1, stop + 1):
            s, c = neumaier_add(s, c, q_term(a, b, t[i], k))
        prev = s + c
        s, c = neumaier_add(s, c, q_term(a, b, t[i], stop + 1))
        cur = s + c
        lo[i] = min(prev, cur)
        hi[i] = max(prev, cur)
    return lo, hi


@njit(cache=True)
def euler_block(w, z, sdt, a, b, dt, step0):
    """Advance paths through one block of Gaussian increments.

    Returns the updated positions and, per path, the global step index of
    the first grid crossing inside the block (-1 if none). A crossed path's
    position is frozen at its crossing value.
    """
    n, m = z.shape
    out = w.copy()
    hit = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        x = out[i]
        for j in range(m):
            x = x + sdt * z[i, j]
            step = step0 + j + 1
            if abs(x) >= a + b * (step * dt):
                hit[i] = step
                break
        out[i] = x
    return out, hit
