"""``fracprop`` command line."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .experiments import PRESETS, RunConfig, run
from .frac_calculus import TimeGrid, caputo_derivative, rl_integral
from .mittag_leffler import MittagLefflerError, ml_branch, ml_eval

_FN_NAMES = {k: getattr(np, k) for k in ("sin", "cos", "exp", "log", "sqrt", "abs", "sinh", "cosh", "tanh")}
_FN_NAMES["pi"] = math.pi


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _strs(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_run(sub):
    p = sub.add_parser("run", help="run a preset or a JSON config")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS))
    src.add_argument("--config", help="JSON config (a diagnostics.json also works)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--alphas", type=_floats, help="comma-separated sweep over alpha")
    p.add_argument("--amplitudes", type=_strs, help="comma-separated sweep over initial data")
    p.add_argument("--eps", dest="eps_list", type=_floats)
    p.add_argument("--horizons", type=_floats)
    p.add_argument("--N", type=int)
    p.add_argument("--L", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--potential", help="CSV with columns x, q, V")
    p.add_argument("--p", type=float)
    p.add_argument("--lambda", dest="lam", help="nonlinearity coefficient, complex allowed (e.g. -1j)")
    p.add_argument("--kappa")
    p.add_argument("--m", type=int)
    p.add_argument("--x0", help="small, large, random or a number")
    p.add_argument("--horizon", type=float)
    p.add_argument("--Nt", type=int)
    p.add_argument("--picard-tol", dest="picard_tol", type=float)
    p.add_argument("--blowup-threshold", dest="blowup_threshold", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="output")


def _run(args):
    overrides = {k: getattr(args, k) for k in (
        "alpha", "alphas", "amplitudes", "eps_list", "horizons", "N", "L", "beta", "potential", "p", "lam",
        "kappa", "m", "x0", "horizon", "Nt", "picard_tol", "blowup_threshold", "seed", "output")}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        cfg = RunConfig.from_dict(data)
        for k, v in overrides.items():
            if v is not None:
                setattr(cfg, k, v)
        cfg.validated()
    else:
        cfg = RunConfig.from_preset(args.preset, **overrides)
    records = run(cfg)
    bad = False
    for i, r in enumerate(records):
        line = f"point {i}: alpha={r['alpha']} x0={r['x0']} status={r['status']}"
        if r.get("T_est") is not None:
            line += f" T_est={r['T_est']:.6g}"
        if "decreasing" in r:
            line += f" decreasing={r['decreasing']}"
        print(line)
        bad |= r["status"] == "tolerance_failure"
    print(f"artifacts in {cfg.output}/{cfg.preset}")
    return 1 if bad else 0


def _verify(args):
    from .verification import run_suite

    checks = run_suite(args.suite)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def _ml(args):
    z = complex(args.re, args.im)
    val = ml_eval(args.alpha, args.beta, z)
    print(f"value: {complex(val)!r}")
    print(f"branch: {ml_branch(args.alpha, args.beta, z)}")
    return 0


def _read_samples(path):
    text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or not {"t", "re"} <= set(rows[0]):
        raise ValueError(f"{path}: expected CSV columns t, re, im")
    t = np.array([float(r["t"]) for r in rows])
    u = np.array([complex(float(r["re"]), float(r.get("im") or 0.0)) for r in rows])
    return TimeGrid(t), u


def _frac(args):
    if args.input is not None:
        grid, u = _read_samples(args.input)
        t = grid.nodes
    else:
        grid = TimeGrid.graded(args.T, args.N, args.r)
        t = grid.nodes
        u = np.broadcast_to(eval(args.fn, {"__builtins__": {}}, dict(_FN_NAMES, t=t)), t.shape).astype(complex)
    if args.op == "integral":
        vals, tt = rl_integral(args.alpha, grid, u), t
    else:
        vals, tt = caputo_derivative(args.alpha, grid, u), t[1:]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "re", "im"])
    w.writerows([repr(ti), repr(v.real), repr(v.imag)] for ti, v in zip(tt.tolist(), vals.tolist()))
    if args.output is None:
        sys.stdout.write(buf.getvalue())
    else:
        Path(args.output).write_text(buf.getvalue(), encoding="utf-8", newline="")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="fracprop", description="time-fractional dispersive evolution toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=["ml", "calculus", "operators", "solver", "asymptotics", "all"])
    m = sub.add_parser("ml-eval", help="evaluate E_{alpha,beta}(z)")
    m.add_argument("--alpha", type=float, required=True)
    m.add_argument("--beta", type=float, default=1.0)
    m.add_argument("--re", type=float, default=0.0)
    m.add_argument("--im", type=float, default=0.0)
    f = sub.add_parser("frac", help="fractional integral or Caputo derivative of sampled data")
    f.add_argument("op", choices=["integral", "caputo"])
    f.add_argument("--alpha", type=float, required=True)
    f.add_argument("--input", help="CSV with columns t, re, im ('-' for stdin); t must start at 0")
    f.add_argument("--output", help="output CSV (default stdout)")
    f.add_argument("--fn", default="1", help="expression in t sampled on a graded grid when --input is absent")
    f.add_argument("--T", type=float, default=1.0)
    f.add_argument("--N", type=int, default=64)
    f.add_argument("--r", type=float, default=1.0, help="grading exponent")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {"run": _run, "verify": _verify, "ml-eval": _ml, "frac": _frac}
    try:
        return handlers[args.command](args)
    except (ValueError, MittagLefflerError, OSError, RuntimeError) as exc:
        print(f"fracprop: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
