"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_backends.py [--repeat 5]

Each kernel runs on identical inputs under both backends; outputs must
agree (exactly for decisions, to 1e-9 relative for floats) before
timings are reported.
"""
import argparse
import time

import numpy as np

from fptsim import _terms
from fptsim.kernels import available_backends, get_kernels
from fptsim.rng import RandomSource
from fptsim.sampler import calibrate_envelope
from fptsim.series import Boundary


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(n):
    rng = RandomSource(2024)
    bd = Boundary(1.0, 1.0)
    env = calibrate_envelope(bd)
    v = rng.gamma(env.alpha, env.rate, n)
    s = np.exp(env.log_envelope(v) + np.log(rng.uniforms(n)))
    u = rng.uniforms(n)
    small = Boundary(0.1, 0.1)
    grid = np.geomspace(1e-4, 5e3, n // 10)
    z = rng.normals((4096, 512))
    return {
        "decide_normalizer a=b=1": lambda k: k.decide_normalizer(bd.ab, u, _terms.RESOLVE_EPS),
        "decide_density a=b=1": lambda k: k.decide_density(bd.a, bd.b, v, s, _terms.RESOLVE_EPS),
        "q_bracket a=b=0.1 (log grid)": lambda k: k.q_bracket(small.a, small.b, grid, 30),
        "euler_block 4096x512": lambda k: k.euler_block(np.zeros(4096), z, 0.01, 1.0, 1.0, 1e-4, 0),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = available_backends()
    print(f"backends: {', '.join(backends)}; n = {args.n}")
    print(f"{'kernel':32s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, fn in cases(args.n).items():
        times, outs = [], []
        for b in backends:
            k = get_kernels(b)
            fn(k)  # warm-up / compile
            t, out = best_of(lambda: fn(k), args.repeat)
            times.append(t)
            outs.append(out)
        if len(outs) == 2:
            for x, y in zip(outs[0], outs[1]):
                if np.issubdtype(np.asarray(x).dtype, np.integer):
                    np.testing.assert_array_equal(x, y)
                else:
                    # vectorized exp may differ by an ulp; cancellation amplifies it
                    np.testing.assert_allclose(x, y, rtol=1e-9, atol=1e-12)
        row = f"{name:32s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
