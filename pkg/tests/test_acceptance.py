"""Acceptance checks, one PASS/FAIL line per criterion.

Run alone with ``pytest tests/test_acceptance.py -v``; the verdict lines
appear in the terminal summary. With numba the module takes under a
minute, most of it in the Euler oracle at dt = 1e-4.
"""
import math
import subprocess
import sys

import numpy as np
import pytest

from fptsim.distribution import cdf, conditional_cdf, prob_finite, std_normal_integral
from fptsim.errors import UnresolvedComparison
from fptsim.rng import RandomSource
from fptsim.sampler import SamplerStats, calibrate_envelope, conditional_samples, predicted_acceptance, sample_many
from fptsim.series import Boundary, CompareOutcome, PartialSumSeries, decide_compare, oscillation_ratio_log
from fptsim.validation import (OracleConfig, euler_fpt_oracle, ks_statistic, ks_threshold_99, verify_envelope,
                               verify_left_tail, verify_right_tail)

B11 = Boundary(1.0, 1.0)


@pytest.fixture(scope="module")
def env11():
    return calibrate_envelope(B11, 0.5)


def test_finite_fraction(verdict, env11):
    n = 200_000
    x = sample_many(1.0, 1.0, n, RandomSource(20240601), env11)
    ff = np.isfinite(x).mean()
    c = prob_finite(B11)
    ok = abs(ff - c) <= 0.003
    assert verdict("1 finite fraction", ok, f"empirical {ff:.5f} vs C {c:.7f}, tol 0.003")


def test_conditional_law(verdict, env11):
    n = 50_000
    thr = ks_threshold_99(n)
    stats = []
    for seed in range(5):
        x = np.sort(conditional_samples(B11, env11, RandomSource(1000 + seed), n))
        stats.append(ks_statistic(x, lambda t: conditional_cdf(B11, t)))
    fails = sum(d >= thr for d in stats)
    ok = fails <= 1
    assert verdict("2 conditional law KS", ok,
                   f"{fails}/5 above {thr:.5f}; max D {max(stats):.5f}")


def _cdf_seven_terms(a, b, t):
    # independent route: the image sum over k in [-3, 3] via normal integrals
    x, rt = a + b * t, math.sqrt(t)
    s = math.fsum((-1) ** k * math.exp(-2 * k * k * a * b)
                  * std_normal_integral((-x + 2 * a * k) / rt, (x + 2 * a * k) / rt) for k in range(-3, 4))
    return 1.0 - s


def test_cdf_spot_value(verdict):
    v = cdf(B11, 1.0)
    rederived = _cdf_seven_terms(1.0, 1.0, 1.0)
    # the horizon does not affect P[tau <= 1]; a horizon of 1 keeps the run short
    emp = euler_fpt_oracle(B11, OracleConfig(1e-4, 1.0, 200_000), RandomSource(77)).cdf(1.0)
    ok = abs(v - 0.1808) <= 5e-4 and abs(rederived - 0.1808) <= 5e-4 and 0.1808 - 0.012 <= emp <= 0.1808 + 0.004
    assert verdict("3 cdf spot value", ok, f"cdf {v:.6f}, re-derived {rederived:.6f}, euler {emp:.5f}")


def test_envelope_domination(verdict):
    bad = []
    for a in (0.1, 1.0, 5.0):
        for b in (0.1, 1.0, 5.0):
            bd = Boundary(a, b)
            for alpha in (0.5, 1.0):
                v = verify_envelope(bd, calibrate_envelope(bd, alpha), grid_size=10_000)
                if v:
                    bad.append((a, b, alpha, v))
    assert verdict("4 envelope domination", not bad, f"{len(bad)} of 18 configurations with violations {bad}")


def test_oscillation(verdict):
    rng = np.random.default_rng(5)
    failures = checked = 0
    for _ in range(200):
        a, b = rng.uniform(0.05, 5.0, 2)
        bd = Boundary(a, b)
        t = float(np.exp(rng.uniform(math.log(1e-2), math.log(50.0))))
        for series in (PartialSumSeries.normalizer(bd), PartialSumSeries.density(bd, t)):
            n0 = series.tail_index
            for n in range(n0, n0 + 51):
                sign, log_r = oscillation_ratio_log(series, n)
                checked += 1
                failures += not (sign < 0 and log_r < 0)
    assert verdict("5 oscillation", failures == 0, f"{failures} failures in {checked} ratios")


def test_comparison_soundness(verdict):
    rng = np.random.default_rng(6)
    disagree = unresolved = count = 0
    while count < 10_000:
        a, b = rng.uniform(0.05, 5.0, 2)
        bd = Boundary(a, b)
        if rng.random() < 0.2:
            series = PartialSumSeries.normalizer(bd)
        else:
            series = PartialSumSeries.density(bd, float(np.exp(rng.uniform(math.log(1e-2), math.log(50.0)))))
        ref = series.partial(500)
        for _ in range(20):
            gap = 10.0 ** rng.uniform(-9, 0) * max(1.0, abs(ref))
            s = ref + gap if rng.random() < 0.5 else ref - gap
            if abs(ref - s) <= 1e-9:
                continue
            count += 1
            try:
                got = decide_compare(series, s)
            except UnresolvedComparison:
                unresolved += 1
                continue
            disagree += got is not (CompareOutcome.GREATER if ref > s else CompareOutcome.LESS)
    ok = disagree == 0 and unresolved == 0
    assert verdict("6 comparison soundness", ok, f"{disagree} disagreements, {unresolved} unresolved in {count}")


def test_tail_decay(verdict):
    rng = np.random.default_rng(7)
    failures = []
    for _ in range(100):
        a, b = rng.uniform(0.05, 5.0, 2)
        bd = Boundary(a, b)
        if not verify_right_tail(bd):
            failures.append((a, b, "right"))
        failures += [(a, b, n) for n in range(1, 11) if not verify_left_tail(bd, n)]
    assert verdict("7 tail decay", not failures, f"{len(failures)} failures over 100 boundaries {failures[:3]}")


def test_ar_identity(verdict, env11):
    p = predicted_acceptance(B11, env11)
    stats = SamplerStats()
    conditional_samples(B11, env11, RandomSource(8), int(100_000 * p), stats)
    n = stats.proposals
    sigma = math.sqrt(p * (1 - p) / n)
    ok = n >= 90_000 and abs(stats.acceptance_rate - p) <= 3 * sigma
    assert verdict("8 AR identity", ok, f"rate {stats.acceptance_rate:.5f} vs C/M' {p:.5f} over {n} proposals")


def _cli(*args):
    r = subprocess.run([sys.executable, "-m", "fptsim", *args], capture_output=True, check=True)
    return r.stdout


def test_cli_determinism(verdict):
    cases = {
        "sample": ("sample", "--a", "1", "--b", "1", "--n", "2000", "--seed", "11"),
        "validate": ("validate", "--a", "1", "--b", "1", "--n", "5000", "--seed", "11"),
        "oracle": ("oracle", "--a", "1", "--b", "1", "--dt", "1e-3", "--horizon", "1", "--n", "2000",
                   "--seed", "11"),
    }
    differ = [k for k, argv in cases.items() if _cli(*argv) != _cli(*argv)]
    assert verdict("9 CLI determinism", not differ, f"non-identical: {differ}" if differ else "sample, validate, oracle")
