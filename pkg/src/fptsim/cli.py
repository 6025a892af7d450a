"""Command-line interface.

Exit codes: 0 success, 2 invalid arguments, 3 unsupported boundary,
4 numerical failure (unresolved comparison, calibration failure, proposal
cap exceeded). Errors print a single ``error=<Kind> message=<text>`` line to
stderr.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys

import numpy as np

from .distribution import cdf, conditional_cdf, prob_finite
from .errors import CalibrationFailure, ProposalExhaustion, UnresolvedComparison, UnsupportedBoundary
from .rng import RandomSource
from .sampler import (DEFAULT_ALPHA, SamplerStats, calibrate_envelope, predicted_acceptance, sample_sharded,
                      _check_ab)
from .series import Boundary
from .validation import OracleConfig, euler_fpt_oracle, goodness_of_fit, verify_envelope

EXIT_OK, EXIT_ARGS, EXIT_BOUNDARY, EXIT_NUMERIC = 0, 2, 3, 4


class ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return "null"
        return format(x, ".17g")
    raise TypeError(type(x))


def _json(obj) -> str:
    """JSON text with every float at 17 significant digits."""
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json(v) for v in obj) + "]"
    return _fmt(obj)


def _csv_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    s = _fmt(x)
    return "" if s == "null" else s


def _write_table(out, fmt, header, rows, summary=None, meta=None):
    if fmt == "json":
        doc = dict(meta or {})
        doc["records"] = [dict(zip(header, r)) for r in rows]
        if summary is not None:
            doc["summary"] = summary
        out.write(_json(doc) + "\n")
        return
    out.write(",".join(header) + "\n")
    for r in rows:
        out.write(",".join(_csv_cell(v) for v in r) + "\n")
    if summary:
        out.write("# " + ",".join(f"{k}={_csv_cell(v)}" for k, v in summary.items()) + "\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fptsim", description="Exact first passage times of Brownian motion to +-(a + b t).")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt=True):
        sp.add_argument("--a", type=float, required=True)
        sp.add_argument("--b", type=float, required=True)
        if fmt:
            sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", default="-", help="output path, '-' for stdout")

    sp = sub.add_parser("sample", help="draw passage times")
    common(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=_seed, default=None)
    sp.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    sp.add_argument("--workers", type=int, default=1, help="independent per-worker streams, merged in order")

    sp = sub.add_parser("cdf", help="evaluate P[tau <= t] and P[tau <= t | tau < inf]")
    common(sp)
    sp.add_argument("--t", type=_float_list, required=True)
    sp.add_argument("--tol", type=float, default=1e-12)

    sp = sub.add_parser("prob-finite", help="probability the boundary is ever hit")
    common(sp)
    sp.add_argument("--tol", type=float, default=1e-12)

    sp = sub.add_parser("envelope", help="calibrate and check the gamma envelope")
    common(sp)
    sp.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    sp.add_argument("--grid", type=int, default=4096)
    sp.add_argument("--verify-grid", type=int, default=10_000)

    sp = sub.add_parser("validate", help="goodness of fit of sampled draws (JSON)")
    common(sp, fmt=False)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=_seed, default=None)
    sp.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)

    sp = sub.add_parser("oracle", help="Euler grid-crossing reference simulation")
    common(sp)
    sp.add_argument("--dt", type=float, required=True)
    sp.add_argument("--horizon", type=float, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=_seed, default=None)
    sp.add_argument("--t", type=_float_list, default=None, help="evaluation times (default: 10 up to horizon)")
    return p


def _validate(args):
    if getattr(args, "n", 1) < 1:
        raise ArgumentError("--n must be >= 1")
    if hasattr(args, "tol") and not 0.0 < args.tol < 1.0:
        raise ArgumentError("--tol must lie in (0, 1)")
    if hasattr(args, "alpha") and not args.alpha >= 0.5:
        raise ArgumentError("--alpha must be >= 0.5")
    if getattr(args, "workers", 1) < 1:
        raise ArgumentError("--workers must be >= 1")
    for name in ("grid", "verify_grid"):
        if getattr(args, name, 2) < 2:
            raise ArgumentError(f"--{name.replace('_', '-')} must be >= 2")
    if not (math.isfinite(args.a) and math.isfinite(args.b)) or args.a < 0 or args.b < 0:
        raise ArgumentError("--a and --b must be finite and >= 0")
    if args.command == "oracle":
        # the oracle simulates any boundary, b = 0 included
        if args.seed is None:
            raise ArgumentError("oracle requires --seed")
        try:
            OracleConfig(args.dt, args.horizon, args.n)
        except ValueError as e:
            raise ArgumentError(str(e))
        return
    _check_ab(args.a, args.b)
    if args.command in ("sample", "validate", "oracle") and args.seed is None:
        raise ArgumentError(f"{args.command} requires --seed")
    if args.command in ("cdf", "prob-finite", "envelope", "validate"):
        if args.a == 0.0:
            raise ArgumentError(f"{args.command} needs a > 0")
    if args.command == "cdf" and any(not t >= 0 for t in args.t):
        raise ArgumentError("--t values must be >= 0")


def _cmd_sample(args, out):
    stats = SamplerStats()
    x = sample_sharded(args.a, args.b, args.n, args.seed, args.workers, stats=stats, alpha=args.alpha)
    rows = [(i, "finite" if math.isfinite(t) else "infinite", float(t) if math.isfinite(t) else None)
            for i, t in enumerate(x)]
    summary = {"finite_fraction": float(np.isfinite(x).mean()), "acceptance_rate": stats.acceptance_rate,
               "max_terms_used": stats.max_terms_used}
    meta = {"command": "sample", "a": args.a, "b": args.b, "n": args.n, "seed": args.seed, "alpha": args.alpha}
    _write_table(out, args.format, ["index", "outcome", "time"], rows, summary, meta)


def _cmd_cdf(args, out):
    bd = Boundary(args.a, args.b)
    t = np.array(args.t, dtype=np.float64)
    rows = list(zip(t.tolist(), np.atleast_1d(cdf(bd, t, args.tol)).tolist(),
                    np.atleast_1d(conditional_cdf(bd, t, args.tol)).tolist()))
    _write_table(out, args.format, ["t", "cdf", "conditional_cdf"], rows,
                 meta={"command": "cdf", "a": args.a, "b": args.b, "tol": args.tol})


def _cmd_prob_finite(args, out):
    c = prob_finite(Boundary(args.a, args.b), args.tol)
    if args.format == "json":
        out.write(_json({"command": "prob-finite", "a": args.a, "b": args.b, "tol": args.tol, "prob_finite": c}) + "\n")
    else:
        out.write("prob_finite\n" + _fmt(c) + "\n")


def _cmd_envelope(args, out):
    bd = Boundary(args.a, args.b)
    env = calibrate_envelope(bd, args.alpha, args.grid)
    row = {"alpha": env.alpha, "rate": env.rate, "log_m_prime": env.log_m_prime,
           "predicted_acceptance": predicted_acceptance(bd, env),
           "violations": verify_envelope(bd, env, args.verify_grid)}
    if args.format == "json":
        out.write(_json({"command": "envelope", "a": args.a, "b": args.b, **row}) + "\n")
    else:
        _write_table(out, "csv", list(row), [tuple(row.values())])


def _cmd_validate(args, out):
    rep = goodness_of_fit(args.a, args.b, args.n, args.seed, alpha=args.alpha)
    doc = {"command": "validate", "a": args.a, "b": args.b, "n": rep.n, "seed": args.seed,
           "ks_statistic": rep.ks_statistic, "ks_threshold_99": rep.ks_threshold_99,
           "finite_fraction": rep.finite_fraction, "expected_C": rep.expected_c,
           "band_violations": rep.band_violations, "pass": rep.passed}
    out.write(_json(doc) + "\n")


def _cmd_oracle(args, out):
    cfg = OracleConfig(args.dt, args.horizon, args.n)
    emp = euler_fpt_oracle((args.a, args.b), cfg, RandomSource(args.seed))
    ts = np.array(args.t if args.t else np.linspace(args.horizon / 10, args.horizon, 10), dtype=np.float64)
    if args.a > 0 and args.b > 0:
        exact = np.atleast_1d(cdf(Boundary(args.a, args.b), ts)).tolist()
    else:
        exact = [None] * ts.size
    rows = list(zip(ts.tolist(), np.atleast_1d(emp.cdf(ts)).tolist(), exact))
    summary = {"censored_fraction": emp.censored_fraction, "n_paths": emp.n_paths}
    meta = {"command": "oracle", "a": args.a, "b": args.b, "dt": args.dt, "horizon": args.horizon,
            "seed": args.seed}
    _write_table(out, args.format, ["t", "empirical_cdf", "analytic_cdf"], rows, summary, meta)


_COMMANDS = {"sample": _cmd_sample, "cdf": _cmd_cdf, "prob-finite": _cmd_prob_finite,
             "envelope": _cmd_envelope, "validate": _cmd_validate, "oracle": _cmd_oracle}


def _fail(kind, message, code):
    print(f"error={kind} message={' '.join(str(message).split())}", file=sys.stderr)
    return code


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
    except ArgumentError as e:
        return _fail("InvalidArgument", e, EXIT_ARGS)
    except UnsupportedBoundary as e:
        return _fail("UnsupportedBoundary", e, EXIT_BOUNDARY)
    except ValueError as e:
        return _fail("InvalidArgument", e, EXIT_ARGS)
    buf = io.StringIO()
    try:
        _COMMANDS[args.command](args, buf)
    except UnsupportedBoundary as e:
        return _fail("UnsupportedBoundary", e, EXIT_BOUNDARY)
    except (UnresolvedComparison, CalibrationFailure, ProposalExhaustion) as e:
        return _fail(type(e).__name__, e, EXIT_NUMERIC)
    except ValueError as e:
        return _fail("InvalidArgument", e, EXIT_ARGS)
    if args.out == "-":
        sys.stdout.write(buf.getvalue())
    else:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(buf.getvalue())
    return EXIT_OK


def main():
    sys.exit(run())
