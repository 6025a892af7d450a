"""Pure-numpy kernels, vectorized across elements.

Each function mirrors its twin in ``_kernels_jit``: per element, the same
terms are accumulated in the same order with the same Neumaier update, so
both backends make identical decisions up to last-ulp ``exp`` differences.
"""
import numpy as np

from ._terms import LOG_SQRT_2PI, LOG6, ROUND_GAMMA


def _c_terms(ab, k):
    v = 2.0 * np.exp(-2.0 * k * k * ab)
    return np.where(k % 2 == 1, v, -v)


def _q_lead(a, b, t):
    x = a + b * t
    return (a - b * t) * np.exp(-x * x / (2.0 * t) - 1.5 * np.log(t) - LOG_SQRT_2PI)


def _q_terms(a, b, t, k):
    x = a + b * t
    y = 2.0 * a * k
    inner = (-a + b * t + y) - (a - b * t + y) * np.exp(-2.0 * x * y / t)
    d = x - y
    e = -2.0 * k * k * a * b - d * d / (2.0 * t) - 1.5 * np.log(t) - LOG_SQRT_2PI
    with np.errstate(divide="ignore"):
        mag = np.exp(e + np.log(np.abs(inner)))
    sign = np.sign(inner) * np.where(k % 2 == 0, -1.0, 1.0)
    return sign * mag


def _tail_index_q(a, b, t):
    m = np.maximum(np.maximum(LOG6 / (4.0 * a * b), b * t / (2.0 * a)), 1.0)
    return np.ceil(m + 1.0).astype(np.int64)


def _neumaier_add(s, c, x):
    t = s + x
    big = np.abs(s) >= np.abs(x)
    c = c + np.where(big, (s - t) + x, (x - t) + s)
    return t, c


def _resolve(prev, cur, thr, eps, absum, ready, codes, terms, k):
    lo = np.minimum(prev, cur)
    hi = np.maximum(prev, cur)
    margin = ROUND_GAMMA * absum
    up = ready & (lo - margin > thr)
    down = ready & ~up & (hi + margin < thr)
    stuck = ready & ~up & ~down & (hi - lo < eps * np.maximum(1.0, np.abs(thr)))
    codes[up] = 1
    codes[down] = 0
    codes[stuck] = -1
    done = up | down | stuck
    terms[done] = k
    return done


def decide_normalizer(ab, u, eps):
    u = np.asarray(u, dtype=np.float64)
    n = u.shape[0]
    codes = np.full(n, -2, dtype=np.int8)
    terms = np.zeros(n, dtype=np.int64)
    idx = np.arange(n)
    x = np.full(n, _c_terms(ab, 1))
    s, c = _neumaier_add(np.zeros(n), np.zeros(n), x)
    absum = np.abs(x)
    k = 1
    while idx.size:
        prev = s + c
        x = np.full(idx.size, _c_terms(ab, k + 1))
        s, c = _neumaier_add(s, c, x)
        absum = absum + np.abs(x)
        sub_codes = np.full(idx.size, -2, dtype=np.int8)
        sub_terms = np.zeros(idx.size, dtype=np.int64)
        done = _resolve(prev, s + c, u[idx], eps, absum, np.ones(idx.size, dtype=bool),
                        sub_codes, sub_terms, k + 1)
        codes[idx[done]] = sub_codes[done]
        terms[idx[done]] = sub_terms[done]
        keep = ~done
        idx, s, c, absum = idx[keep], s[keep], c[keep], absum[keep]
        k += 1
    return codes, terms


def decide_density(a, b, t, thr, eps):
    t = np.asarray(t, dtype=np.float64)
    thr = np.asarray(thr, dtype=np.float64)
    n = t.shape[0]
    codes = np.full(n, -2, dtype=np.int8)
    terms = np.zeros(n, dtype=np.int64)
    idx = np.arange(n)
    n0 = _tail_index_q(a, b, t)
    s = _q_lead(a, b, t)
    c = np.zeros(n)
    absum = np.abs(s)
    k = 1
    while idx.size:
        tt = t[idx]
        prev = s + c
        x = _q_terms(a, b, tt, k)
        s, c = _neumaier_add(s, c, x)
        absum = absum + np.abs(x)
        # element has S_{k-1}, S_k with k - 1 >= its tail index
        ready = (k - 1) >= n0[idx]
        sub_codes = np.full(idx.size, -2, dtype=np.int8)
        sub_terms = np.zeros(idx.size, dtype=np.int64)
        done = _resolve(prev, s + c, thr[idx], eps, absum, ready, sub_codes, sub_terms, k)
        codes[idx[done]] = sub_codes[done]
        terms[idx[done]] = sub_terms[done]
        keep = ~done
        idx, s, c, absum = idx[keep], s[keep], c[keep], absum[keep]
        k += 1
    return codes, terms


def q_bracket(a, b, t, extra):
    t = np.asarray(t, dtype=np.float64)
    n = t.shape[0]
    stop = _tail_index_q(a, b, t) + extra
    s = _q_lead(a, b, t)
    c = np.zeros(n)
    lo = np.empty(n)
    hi = np.empty(n)
    idx = np.arange(n)
    k = 1
    while idx.size:
        tt = t[idx]
        prev = s + c
        s, c = _neumaier_add(s, c, _q_terms(a, b, tt, k))
        done = k == stop[idx] + 1
        cur = s + c
        lo[idx[done]] = np.minimum(prev, cur)[done]
        hi[idx[done]] = np.maximum(prev, cur)[done]
        keep = ~done
        idx, s, c = idx[keep], s[keep], c[keep]
        k += 1
    return lo, hi


def euler_block(w, z, sdt, a, b, dt, step0):
    n, m = z.shape
    path = np.empty((n, m + 1))
    path[:, 0] = w
    path[:, 1:] = sdt * z
    np.cumsum(path, axis=1, out=path)
    steps = step0 + np.arange(1, m + 1)
    crossed = np.abs(path[:, 1:]) >= a + b * (steps * dt)
    any_hit = crossed.any(axis=1)
    first = np.argmax(crossed, axis=1)
    hit = np.where(any_hit, steps[first], -1).astype(np.int64)
    col = np.where(any_hit, first + 1, m)
    out = path[np.arange(n), col]
    return out, hit
