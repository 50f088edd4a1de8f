"""Numerical checks behind ``fracprop verify`` and the acceptance tests.

Each ``criterion_k`` returns a list of :class:`Check` records with the
measured value and the threshold it is held to.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from . import evolution_solver as es
from .frac_calculus import (
    TimeGrid,
    caputo_derivative,
    gronwall_bound,
    rl_integral,
    volterra_equality,
)
from .mittag_leffler import (
    asymptotic_radius,
    ml_asymptotic,
    ml_derivative_pair,
    ml_eval,
    ml_series,
)
from .spectral_operator import (
    SymbolSpec,
    build_diagonal,
    build_perturbed,
    propagator_S,
    relative_bound_probe,
)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{mark} {self.name}: {self.value:.6g} vs {self.threshold:.6g}{extra}"


def _le(name, value, threshold, detail=""):
    return Check(name, float(value), float(threshold), bool(value <= threshold), detail)


def _ge(name, value, threshold, detail=""):
    return Check(name, float(value), float(threshold), bool(value >= threshold), detail)


def _flag(name, ok, detail=""):
    return Check(name, 1.0 if ok else 0.0, 1.0, bool(ok), detail)


def _gaussian(op, center=None, width=0.5, amp=1.0):
    x = op.points()
    c = op.L / 2 if center is None else center
    return op.to_coefficients(amp * np.exp(-(((x - c) / width) ** 2)))


def schrodinger(N, L=2 * math.pi, V=0.0):
    sym = SymbolSpec("schrodinger")
    if V:
        return build_perturbed(sym, None, np.full(N, float(V)), N, L)
    return build_diagonal(sym, N, L)


# ----------------------------------------------------------- Mittag-Leffler


OVERLAP_ALPHAS = (0.3, 0.5, 0.7, 0.9)


def overlap_points(alpha, beta):
    R = asymptotic_radius(alpha, beta)[0]
    return R, (R / 2, R, 2 * R)


def criterion_1(seed=0):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    r = 20 * np.sqrt(rng.uniform(size=200))
    z = r * np.exp(2j * math.pi * rng.uniform(size=200))
    ez = np.exp(z)
    err = float((np.abs(ml_eval(1.0, 1.0, z) - ez) / np.abs(ez)).max())
    out = [_le("E_{1,1}(z) vs exp(z), 200 random |z|<=20, relative", err, 1e-12)]
    worst = 0.0
    for a in OVERLAP_ALPHAS:
        for b in (1.0, a):
            _, pts = overlap_points(a, b)
            p = asymptotic_radius(a, b)[1]
            for s in pts:
                zs = 1j * s
                vs = ml_series(a, b, zs)
                va = ml_asymptotic(a, b, zs, p, residues=True)
                worst = max(worst, abs(vs - va) / (1 + abs(vs)))
    out.append(_le("series vs expansion on the imaginary axis, annulus [R/2, 2R]", worst, 1e-6))
    worst = 0.0
    h = 1e-5
    for a, lam, t in [(0.7, 3j, 0.5), (0.3, 1j, 1.2), (0.5, -2j, 0.8), (0.9, 5j, 0.3), (0.6, 0.5j, 2.0)]:
        d1, d2 = ml_derivative_pair(a, lam, t)

        def f1(s, a=a, lam=lam):
            return ml_eval(a, 1.0, lam * s**a)

        def f2(s, a=a, lam=lam):
            return s ** (a - 1) * ml_eval(a, a, lam * s**a)

        fd1 = (f1(t + h) - f1(t - h)) / (2 * h)
        fd2 = (f2(t + h) - f2(t - h)) / (2 * h)
        worst = max(worst, abs(d1 - fd1) / abs(d1), abs(d2 - fd2) / abs(d2))
    out.append(_le("derivative identities vs central differences, relative", worst, 1e-6))
    out.append(_le("runtime [s]", time.perf_counter() - t0, 10.0))
    return out


# --------------------------------------------------------------- calculus


def calculus_examples():
    g = TimeGrid.uniform(1.0, 64)
    out = [
        _le("I^0.5 of 1 at t=1", abs(rl_integral(0.5, g, np.ones(65))[-1] - 1 / math.gamma(1.5)), 1e-14),
        _le("I^0.5 of t at t=1", abs(rl_integral(0.5, g, g.nodes)[-1] - 1 / math.gamma(2.5)), 1e-14),
        _le("Caputo^0.5 of t at t=1", abs(caputo_derivative(0.5, g, g.nodes)[-1] - 1 / math.gamma(1.5)), 1e-13),
    ]
    fine = TimeGrid.graded(1.0, 1024, 2 / 0.6)
    u = ml_eval(0.6, 1.0, 2j * fine.nodes**0.6)
    d = caputo_derivative(0.6, fine, u)
    sel = fine.nodes[1:] >= 0.1
    err = float(np.abs(d - 2j * u[1:])[sel].max())
    out.append(_le("Caputo eigenfunction E_{0.6,1}(2i t^0.6) on [0.1, 1]", err, 1e-4))
    return out


def criterion_6():
    out = []
    for b, a in [(1.0, 0.5), (2.0, 0.7)]:
        g = TimeGrid.graded(1.0, 256, 2 / a)
        u = volterra_equality(1.0, b, a, g)
        bound = gronwall_bound(1.0, b, a, g.nodes)
        out.append(_le(f"equality-case solution / Gronwall bound, b={b}, alpha={a}", float((u / bound).max()), 1.01))
    return out


# --------------------------------------------------------------- operators


def criterion_3():
    op = schrodinger(16)
    t = np.linspace(0, 3, 31)
    worst = 0.0
    for k in (1, 3, 5):
        c = np.zeros(16, dtype=complex)
        c[k] = 1.0
        u = propagator_S(op, 1.0, t, c)
        worst = max(worst, float(np.abs(u[:, k] - np.exp(1j * k * k * t)).max()))
    return [_le("alpha=1 single mode vs exp(i k^2 t)", worst, 1e-10)]


def operator_bound_ratios(N, alpha=0.5, n_fields=50, seed=0):
    op = schrodinger(N)
    t = np.logspace(-3, 1, 40)
    rng = np.random.default_rng(seed)
    # envelope fixed in xi, so the field distribution converges as N grows
    env = 1.0 / (1.0 + np.abs(op.xi()))
    phi = (rng.standard_normal((n_fields, N)) + 1j * rng.standard_normal((n_fields, N))) * env
    S = es.S_multiplier(op, alpha, t)
    St = S[:, None, :] * phi[None]
    nphi = op.h_norm(phi)
    r1 = op.h_norm(St) / nphi
    r2 = op.graph_norm(St) / ((1 + t ** (-alpha))[:, None] * nphi)
    return float(r1.max()), float(r2.max())


def criterion_4(N=64, alpha=0.5):
    b1, b2 = operator_bound_ratios(N, alpha)
    c1, c2 = operator_bound_ratios(2 * N, alpha)
    return [
        _le("sup ||S_t phi||/||phi|| change under N doubling", abs(c1 / b1 - 1), 0.05, f"{b1:.4g} -> {c1:.4g}"),
        _le(
            "sup ||S_t phi||_D(A)/((1+t^-alpha)||phi||) change under N doubling",
            abs(c2 / b2 - 1),
            0.05,
            f"{b2:.4g} -> {c2:.4g}",
        ),
    ]


PROBE_L = 16 * math.pi
PROBE_N = 4096
PROBE_AMPLITUDE = 400.0


def probe_potential(N=PROBE_N, L=PROBE_L, amp=PROBE_AMPLITUDE):
    x = L * np.arange(N) / N
    return amp * np.exp(-((x - L / 2) ** 2))


def criterion_10():
    gam = np.logspace(2, 4, 9)
    res = relative_bound_probe(SymbolSpec("schrodinger"), probe_potential(), None, gam, PROBE_L)
    c2 = np.array([r.c2 for r in res.rows])
    return [
        _le("|slope + 1.5| of log integral vs log gamma", abs(res.slope + 1.5), 0.1, f"slope {res.slope:.4f}"),
        _flag("c2 strictly decreasing in gamma", bool(np.all(np.diff(c2) < 0)), f"c2 {c2[0]:.3g} -> {c2[-1]:.3g}"),
        _flag("c2 drops below 1", bool(c2[0] >= 1 and c2[-1] < 1), f"gamma_star {res.gamma_star}"),
        _le("bound violation ratio", max(r.max_violation for r in res.rows), 1.0),
    ]


def dense_fft_agreement(symbol, N, L=2 * math.pi, alpha=0.6, seed=0):
    fft = build_diagonal(symbol, N, L)
    dense = build_perturbed(symbol, None, None, N, L)
    ev = float(np.abs(np.sort(fft.eigenvalues) - np.sort(dense.eigenvalues)).max())
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((4, N)) + 1j * rng.standard_normal((4, N))
    t = np.array([0.1, 0.7, 1.5])
    worst = 0.0
    for tt in t:
        a = fft.to_physical(propagator_S(fft, alpha, tt, fft.to_coefficients(u)))
        b = dense.to_physical(propagator_S(dense, alpha, tt, dense.to_coefficients(u)))
        worst = max(worst, float(np.abs(a - b).max()))
    return ev, worst


def criterion_11():
    out = []
    for sym in (SymbolSpec("schrodinger"), SymbolSpec("airy")):
        for N in (64, 256):
            ev, fld = dense_fft_agreement(sym, N)
            out.append(_le(f"{sym.preset} N={N} eigenvalue multiset gap", ev, 1e-8))
            out.append(_le(f"{sym.preset} N={N} propagated field gap", fld, 1e-8))
    return out


# ------------------------------------------------------------------ solver


def scalar_closed_form(alpha, a, x, F0, t):
    E = ml_eval(alpha, 1.0, 1j * a * t**alpha)
    return E * x - (F0 / a) * (1 - E)


def quadratic_forcing_solution(alpha, a, x, F0, t):
    """Exact ``u`` for forcing ``F0 (1 + t^2)``: the t^2 part integrates to ``2 t^(alpha+2) E_{alpha,alpha+3}``."""
    G2 = 2 * t ** (alpha + 2) * ml_eval(alpha, alpha + 3, 1j * a * t**alpha)
    return scalar_closed_form(alpha, a, x, F0, t) + 1j * F0 * G2


def quadratic_forcing_error(alpha, a, N, x=1.0, F0=0.7, T=1.0):
    g = TimeGrid.graded(T, N, 2 / alpha)
    op = es.scalar_operator(a)
    tr = es.solve_linear(op, alpha, [x], lambda s: F0 * (1 + s * s), g)
    ex = quadratic_forcing_solution(alpha, a, x, F0, g.nodes)
    return float(np.abs(tr.u[:, 0] - ex).max() / np.abs(ex).max())


SCALAR_AS = (1.0, 5.0)
SCALAR_ALPHAS = (0.3, 0.5, 0.8)


def criterion_2(N=512):
    out = []
    worst = 0.0
    for a in SCALAR_AS:
        for al in SCALAR_ALPHAS:
            g = TimeGrid.graded(1.0, N, 2 / al)
            tr = es.solve_linear(es.scalar_operator(a), al, [1.0], [0.7], g)
            ex = scalar_closed_form(al, a, 1.0, 0.7, g.nodes)
            worst = max(worst, float(np.abs(tr.u[:, 0] - ex).max() / np.abs(ex).max()))
    out.append(_le(f"constant forcing, max-node relative error at {N} graded nodes", worst, 1e-4))
    for a in SCALAR_AS:
        for al in SCALAR_ALPHAS:
            e1 = quadratic_forcing_error(al, a, 64)
            e2 = quadratic_forcing_error(al, a, 256)
            order = math.log(e1 / e2) / math.log(4)
            out.append(_ge(f"order in N_t, forcing F0(1+t^2), a={a}, alpha={al}", order, 2 - al - 0.2))
    return out


def holder_setup(alpha, case, N=32, Nt=256, T=1.0):
    op = schrodinger(N)
    g = TimeGrid.graded(T, Nt, 2 / alpha)
    phi = _gaussian(op, width=0.8)
    if case == "linf":
        x = _gaussian(op, width=0.6)

        def forcing(t):
            return phi * np.sign(math.sin(7 * t) + 1e-300)

    else:
        rng = np.random.default_rng(3)
        x = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        x /= np.linalg.norm(x)
        ts = 0.5 + math.pi / 1000

        def forcing(t):
            return phi * abs(t - ts) ** -0.09

    return es.solve_linear(op, alpha, x, forcing, g)


def criterion_5(delta=0.1):
    out = []
    for al in (0.5, 0.8):
        fit = es.holder_slope(holder_setup(al, "linf"), (delta, 1.0))
        out.append(_ge(f"Hoelder slope, x in D(A), bounded forcing, alpha={al}", fit.slope, al - 0.1))
    fit = es.holder_slope(holder_setup(0.8, "lq"), (delta, 1.0))
    out.append(_ge("Hoelder slope, L^q forcing q=10, alpha=0.8", fit.slope, (1 - 0.8) - 0.1))
    return out


def linear_kappa_C(Nt, kappa=-1.5j, alpha=0.9, N=16, T=0.5):
    op = schrodinger(N)
    x = _gaussian(op, width=0.7)
    y = x + 1e-3 * _gaussian(op, width=2.0)
    F = es.linear_nonlinearity(kappa)
    g = TimeGrid.graded(T, Nt, 2 / alpha)
    u = es.solve_local(op, alpha, x, F, grid=g)
    v = es.solve_local(op, alpha, y, F, grid=g)
    return es.perturbed_distance_bound(u, v).C_min


def criterion_7():
    c1 = linear_kappa_C(64)
    c2 = linear_kappa_C(128)
    return [
        _flag("smallest admissible C finite", math.isfinite(c1) and math.isfinite(c2), f"{c1:.5g}, {c2:.5g}"),
        _le("relative change of C under grid doubling", abs(c2 / c1 - 1), 0.10),
    ]


def saturating_run(alpha=0.8, horizon=50.0, N=8, amp=2.0):
    op = schrodinger(N)
    x = _gaussian(op, width=1.0, amp=amp)
    F = es.saturating_nonlinearity(1.0)
    return es.solve_with_continuation(op, alpha, x, F, horizon), es.classify_global(F, alpha)[0]


CUBIC_ALPHA = 0.6
CUBIC_THRESHOLD = 1e3
CUBIC_SIZES = (1.0, 2.0, 4.0)


def cubic_run(amp, alpha=CUBIC_ALPHA, horizon=10.0, threshold=CUBIC_THRESHOLD):
    F = es.power_nonlinearity(-1j, 3)
    return es.solve_with_continuation(es.scalar_operator(0.0), alpha, [amp], F, horizon, blowup_threshold=threshold)


def criterion_8():
    tr, regime = saturating_run()
    out = [
        _flag("bounded-saturating run completes horizon 50", tr.status == "completed" and tr.t[-1] == 50.0, tr.status),
        _flag("bounded-saturating classified global_regime", regime == "global_regime", regime),
    ]
    runs = [cubic_run(a) for a in CUBIC_SIZES]
    T = [r.T_est for r in runs]
    statuses = [r.status for r in runs]
    out.append(_flag("scalar cubic reports blow_up for every size", all(s == "blow_up" for s in statuses), str(statuses)))
    ok = all(a is not None for a in T) and all(b <= a for a, b in itertools.pairwise(T))
    out.append(_flag("T_est nonincreasing in |x|", ok, str(T)))
    return out


# -------------------------------------------------------------- asymptotics

ASYM_ALPHA = 0.7
EPS_LIST = (1e-1, 1e-2, 1e-3, 1e-4)


def steady_state_table(alpha=ASYM_ALPHA):
    return es.asymptotic_experiments(es.scalar_operator(1.0), alpha, "steady_state", x=[0.0], F0=[1.0],
                                     params=(5.0, 10.0, 20.0, 40.0))


def vanishing_table(alpha=ASYM_ALPHA):
    return es.asymptotic_experiments(es.scalar_operator(1.0), alpha, "vanishing_operator", x=[1.0],
                                     F=lambda t: [math.cos(t)], params=EPS_LIST)


def stiff_table(alpha=ASYM_ALPHA):
    return es.asymptotic_experiments(es.scalar_operator(1.0), alpha, "stiff_limit", x=[0.0],
                                     F=lambda t: [math.sin(t)], params=EPS_LIST, delta=0.2, T=2.0)


def criterion_9(alpha=ASYM_ALPHA):
    out = []
    t0 = time.perf_counter()
    rows, dec = steady_state_table(alpha)
    el = time.perf_counter() - t0
    T = np.array([r["T"] for r in rows])
    e = np.array([r["error"] for r in rows])
    slope = float(np.polyfit(np.log(T), np.log(e), 1)[0])
    out.append(_flag("steady-state error decreasing in T", dec, str(np.round(e, 6).tolist())))
    out.append(_le("steady-state log-log slope", slope, -alpha + 0.15))
    out.append(_le("steady-state table runtime [s]", el, 60.0))
    for name, fn in (("vanishing-operator", vanishing_table), ("stiff-limit", stiff_table)):
        t0 = time.perf_counter()
        rows, dec = fn(alpha)
        el = time.perf_counter() - t0
        e = [r["error"] for r in rows]
        out.append(_flag(f"{name} error decreasing in eps", dec, str([f"{v:.3g}" for v in e])))
        out.append(_le(f"{name} table runtime [s]", el, 60.0))
    return out


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
}

SUITES = {
    "ml": [criterion_1],
    "calculus": [calculus_examples, criterion_6],
    "operators": [criterion_3, criterion_4, criterion_10, criterion_11],
    "solver": [criterion_2, criterion_5, criterion_7, criterion_8],
    "asymptotics": [criterion_9],
}


def run_suite(name):
    if name == "all":
        fns = [f for k in ("ml", "calculus", "operators", "solver", "asymptotics") for f in SUITES[k]]
    elif name in SUITES:
        fns = SUITES[name]
    else:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['all']}")
    checks = []
    for fn in fns:
        checks.extend(fn())
    return checks
