import csv
import io
import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from fracprop.evolution_solver import duhamel_G, scalar_operator, solve_linear
from fracprop.frac_calculus import GrowthFunction, TimeGrid, admissibility, rl_integral
from fracprop.mittag_leffler import ml_eval
from fracprop.spectral_operator import SymbolSpec, build_diagonal, build_perturbed

alphas = st.floats(0.15, 0.95)
betas = st.floats(0.2, 2.5)
radii = st.floats(0.0, 60.0)
angles = st.floats(-math.pi, math.pi)
seeds = st.integers(0, 2**32 - 1)

SETTINGS = settings(max_examples=60, deadline=None)


@SETTINGS
@given(alphas, betas, radii, angles)
def test_recurrence_across_routes(a, b, r, th):
    # E_{a,b}(z) = 1/Gamma(b) + z E_{a,a+b}(z), exercising every evaluation route
    z = r * complex(math.cos(th), math.sin(th))
    # growth is about exp(Re z^(1/a)); stay representable
    assume((z ** (1 / a)).real < 600 if z else True)
    lhs = ml_eval(a, b, z)
    rhs = 1 / math.gamma(b) + z * ml_eval(a, a + b, z)
    scale = max(1.0, abs(lhs), abs(z * ml_eval(a, a + b, z)))
    assert abs(lhs - rhs) <= 1e-9 * scale


@SETTINGS
@given(st.floats(0.0, 20.0), angles)
def test_alpha_one_is_exponential(r, th):
    z = r * complex(math.cos(th), math.sin(th))
    assert abs(ml_eval(1.0, 1.0, z) - np.exp(z)) <= 1e-12 * abs(np.exp(z))


@SETTINGS
@given(st.floats(0.05, 1.0), st.floats(-500.0, 500.0))
def test_imaginary_axis_modulus_at_most_one(a, x):
    assert abs(ml_eval(a, 1.0, 1j * x)) <= 1 + 1e-12


@SETTINGS
@given(alphas, st.integers(2, 60), st.floats(1.0, 4.0), st.floats(0.1, 10.0), st.floats(-3, 3), st.floats(-3, 3))
def test_rl_integral_exact_for_linear(a, N, r, T, c0, c1):
    g = TimeGrid.graded(T, N, r)
    t = g.nodes
    got = rl_integral(a, g, c0 + c1 * t)
    exact = c0 * t**a / math.gamma(a + 1) + c1 * t ** (a + 1) / math.gamma(a + 2)
    assert np.allclose(got, exact, rtol=1e-11, atol=1e-12)


@SETTINGS
@given(st.floats(0.05, 1.0), st.integers(2, 80), st.floats(1.0, 4.0))
def test_weight_row_sums(a, N, r):
    g = TimeGrid.graded(1.7, N, r)
    assert np.allclose(g.weights(a).sum(1), g.nodes**a / a, rtol=1e-12, atol=0)


@SETTINGS
@given(seeds, st.sampled_from([4, 8, 16, 32]))
def test_parseval_fft_and_dense(seed, N):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    V = rng.standard_normal(N)
    for op in (build_diagonal(SymbolSpec("schrodinger"), N, 5.0),
               build_perturbed(SymbolSpec("schrodinger"), None, V, N, 5.0)):
        assert abs(np.linalg.norm(op.to_physical(c)) - np.linalg.norm(c)) < 1e-10 * np.linalg.norm(c)


@SETTINGS
@given(alphas, st.floats(-20.0, 20.0), seeds)
def test_duhamel_is_linear(a, lam, seed):
    rng = np.random.default_rng(seed)
    g = TimeGrid.graded(1.0, 24, 2 / a)
    op = scalar_operator(lam)
    v1 = rng.standard_normal((len(g), 1)) + 0j
    v2 = rng.standard_normal((len(g), 1)) * 1j
    c1, c2 = 0.7 - 0.2j, -1.3
    lhs = duhamel_G(op, a, c1 * v1 + c2 * v2, g)
    rhs = c1 * duhamel_G(op, a, v1, g) + c2 * duhamel_G(op, a, v2, g)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-13)


@SETTINGS
@given(alphas, st.floats(-50.0, 50.0).filter(lambda v: abs(v) > 1e-3), st.floats(-2, 2), st.floats(-2, 2))
def test_constant_forcing_closed_form(a, lam, x, F0):
    g = TimeGrid.graded(2.0, 32, 2 / a)
    tr = solve_linear(scalar_operator(lam), a, np.array([x + 0j]), np.array([F0 + 0j]), g)
    e = ml_eval(a, 1.0, 1j * lam * g.nodes**a)
    exact = e * x - F0 / lam * (1 - e)
    assert np.abs(tr.u[:, 0] - exact).max() <= 1e-10 * max(1.0, abs(x) + abs(F0 / lam))


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 0.95), st.floats(0.05, 0.5), st.floats(1.5, 4.0))
def test_power_growth_classification(a, eps, p):
    res = admissibility(GrowthFunction(lambda s: s**p), a, eps)
    assert res.finite
    assert admissibility(GrowthFunction(lambda s: s), a, eps).divergent


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_csv_round_trip_is_exact(seed):
    rng = np.random.default_rng(seed)
    op = build_diagonal(SymbolSpec("schrodinger"), 4, 2 * math.pi)
    x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    tr = solve_linear(op, 0.5, x, None, TimeGrid.graded(1.0, 3, 2.0))
    rows = list(csv.DictReader(io.StringIO(tr.csv_text())))
    vals = np.array([complex(float(r["re"]), float(r["im"])) for r in rows]).reshape(tr.u.shape)
    assert np.array_equal(vals, tr.u)
