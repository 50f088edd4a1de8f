import math

import numpy as np
import pytest

from fracprop.frac_calculus import (
    GrowthFunction,
    TimeGrid,
    admissibility,
    caputo_derivative,
    g_kernel,
    gronwall_bound,
    interval_moments,
    rl_integral,
    volterra_equality,
)
from fracprop.mittag_leffler import ml_eval

# 2 * E_{0.7,1}(0.5 Gamma(0.7)), 30-digit mpmath series
GRONWALL_REF = 4.456778479864968


def test_grid_construction():
    g = TimeGrid.graded(2.0, 4, 2.0)
    assert np.allclose(g.nodes, [0, 0.125, 0.5, 1.125, 2.0])
    assert g.N == 4 and len(g) == 5 and g.T == 2.0
    for bad in ([0.0], [0.1, 0.2], [0.0, 0.5, 0.5]):
        with pytest.raises(ValueError):
            TimeGrid(np.array(bad))
    with pytest.raises(ValueError):
        TimeGrid.graded(1.0, 4, 0.5)


def test_g_kernel_examples():
    assert g_kernel(0.5, 0.0) == 0
    assert g_kernel(1.0, 3.7) == 1
    assert g_kernel(0.5, 4.0) == pytest.approx(0.5 / math.sqrt(math.pi), rel=1e-15)
    assert g_kernel(0.5, -1.0) == 0


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9, 1.0])
def test_weight_rows_sum_exactly(alpha):
    g = TimeGrid.graded(3.0, 40, 2.5)
    W = g.weights(alpha)
    assert np.allclose(W.sum(1), g.nodes**alpha / alpha, rtol=1e-13, atol=0)
    assert np.all(np.triu(W, 1) == 0)


def test_interval_moments_near_and_far_agree():
    # near branch (h/B <= 1/2) and the closed form meet continuously
    a = 0.4
    for A, B in [(1.0, 1.5), (1.0, 1.999999)]:
        c0, c1 = interval_moments(a, A, B)
        h = B - A
        d1 = (B**a - A**a) / a
        d2 = (B ** (a + 1) - A ** (a + 1)) / (a + 1)
        assert c0 == pytest.approx((d2 - A * d1) / h, rel=1e-12)
        assert c1 == pytest.approx((B * d1 - d2) / h, rel=1e-12)


def test_rl_integral_examples():
    g = TimeGrid.uniform(1.0, 8)
    one = rl_integral(0.5, g, np.ones(len(g)))
    assert one[-1] == pytest.approx(1 / math.gamma(1.5), rel=1e-14)
    lin = rl_integral(0.5, g, g.nodes)
    assert lin[-1] == pytest.approx(math.gamma(2) / math.gamma(2.5), rel=1e-14)
    assert lin[-1] == pytest.approx(0.7522527780636751, rel=1e-14)
    # alpha = 1: trapezoid rule, exact for linear data
    u = 3 * g.nodes - 1
    assert np.allclose(rl_integral(1.0, g, u), 1.5 * g.nodes**2 - g.nodes, atol=1e-15)


def test_rl_integral_trailing_axes():
    g = TimeGrid.uniform(1.0, 8)
    u = np.stack([np.ones(len(g)), g.nodes], 1)
    out = rl_integral(0.5, g, u)
    assert out.shape == (len(g), 2)
    assert out[-1, 0] == pytest.approx(1 / math.gamma(1.5))


def test_rl_integral_errors():
    g = TimeGrid.uniform(1.0, 4)
    with pytest.raises(ValueError):
        rl_integral(1.5, g, np.ones(5))
    with pytest.raises(ValueError):
        rl_integral(0.5, g, np.ones(4))


def test_caputo_examples():
    g = TimeGrid.uniform(1.0, 16)
    assert np.all(caputo_derivative(0.5, g, np.full(len(g), 2.5)) == 0)
    d = caputo_derivative(0.5, g, g.nodes)
    assert d[-1] == pytest.approx(1 / math.gamma(1.5), rel=1e-14)
    with pytest.raises(ValueError):
        caputo_derivative(0.5, TimeGrid.uniform(1.0, 1), np.ones(2))


def test_caputo_eigenfunction():
    a, lam = 0.6, 2j
    g = TimeGrid.graded(1.0, 2000, 2 / a)
    u = ml_eval(a, 1.0, lam * g.nodes**a)
    d = caputo_derivative(a, g, u)
    err = np.abs(d - lam * u[1:])[len(g) // 4 :].max()
    assert err < 2e-3


def test_caputo_inverts_rl_integral():
    a = 0.5
    errs = []
    for N in (64, 128, 256):
        g = TimeGrid.uniform(1.0, N)
        u = np.sin(3 * g.nodes) + g.nodes
        back = caputo_derivative(a, g, rl_integral(a, g, u))
        errs.append(np.abs(back - u[1:])[N // 4 :].max())
    assert errs[-1] < errs[0]
    assert errs[-1] < 0.05


def test_graded_mesh_orders():
    a = 0.5

    def err(N, r):
        g = TimeGrid.graded(1.0, N, r)
        # I^a t^a = Gamma(a+1) / Gamma(2a+1) t^(2a)
        exact = math.gamma(a + 1) / math.gamma(2 * a + 1) * g.nodes ** (2 * a)
        return np.abs(rl_integral(a, g, g.nodes**a) - exact).max()

    Ns = np.array([64, 128, 256, 512])
    graded = np.polyfit(np.log(Ns), np.log([err(N, 2 / a) for N in Ns]), 1)[0]
    uniform = np.polyfit(np.log(Ns), np.log([err(N, 1.0) for N in Ns]), 1)[0]
    assert -graded >= 2 - a
    assert -uniform >= a


def test_gronwall_examples():
    assert gronwall_bound(1.0, 1.0, 1.0, 2.0) == pytest.approx(math.exp(2), rel=1e-14)
    assert gronwall_bound(1.0, 1.0, 0.5, 0.0) == 1
    assert gronwall_bound(2.0, 0.5, 0.7, 1.0) == pytest.approx(GRONWALL_REF, rel=1e-14)
    assert gronwall_bound(lambda t: 1 + t, 1.0, 1.0, 1.0) == pytest.approx(2 * math.e)
    with pytest.raises(ValueError):
        gronwall_bound(1.0, 0.0, 0.5, 1.0)


def test_volterra_equality_tracks_bound():
    g = TimeGrid.graded(1.0, 256, 4.0)
    u = volterra_equality(1.0, 1.0, 0.5, g)
    exact = gronwall_bound(1.0, 1.0, 0.5, g.nodes)
    assert np.abs(u / exact - 1).max() < 1e-3


def test_admissibility_examples():
    lin = GrowthFunction(lambda s: s, name="sigma")
    assert admissibility(lin, 0.5, 0.1).divergent
    assert admissibility(lin, 0.9, 0.5).divergent
    sq = admissibility(GrowthFunction(lambda s: s**2), 0.5, 0.1)
    assert sq.finite
    assert sq.value == pytest.approx(1 / 2.1, rel=1e-3)
    slog = GrowthFunction(lambda s: s * np.log1p(s))
    assert admissibility(slog, 0.5, 0.1).finite
    bounded = GrowthFunction(lambda s: s / (1 + s))
    assert admissibility(bounded, 0.5, 0.1).divergent


def test_admissibility_rejects_bad_growth():
    with pytest.raises(ValueError):
        admissibility(GrowthFunction(lambda s: np.where(s > 5, 0.0, s)), 0.5, 0.1)
    with pytest.raises(ValueError):
        admissibility(GrowthFunction(lambda s: s), 0.5, 0.1, sigma_max=5)


def test_growth_function_check():
    GrowthFunction(lambda s: s**2).check()
    with pytest.raises(ValueError):
        GrowthFunction(lambda s: s + 1).check()
    with pytest.raises(ValueError):
        GrowthFunction(lambda s: np.sin(s) ** 2 + s * 0).check()
