import math

import numpy as np
import pytest

from fracprop.mittag_leffler import UnsupportedRegionError
from fracprop.spectral_operator import (
    DiagonalizedOperator,
    P_multiplier,
    S_multiplier,
    StateField,
    SymbolSpec,
    apply_A,
    build_diagonal,
    build_perturbed,
    frequencies,
    from_hermitian_matrix,
    load_potential_csv,
    propagator_P,
    propagator_S,
    relative_bound_probe,
)

E05_1_2I = 0.01831563888873418 + 0.3400262170660662j
E05_05_2I = -0.11586285058437612 + 0.03663127777746836j


def schrodinger(N=8, L=2 * math.pi):
    return build_diagonal(SymbolSpec("schrodinger"), N, L)


def test_schrodinger_eigenvalues():
    op = schrodinger()
    k = np.fft.fftfreq(8, 1 / 8)
    assert np.allclose(op.eigenvalues, k**2, rtol=1e-14, atol=0)
    assert sorted(k) == list(range(-4, 4))


def test_symbol_presets():
    assert SymbolSpec("fractional_laplacian", beta=0.5)(3.0) == 3.0
    assert SymbolSpec("benjamin_ono")(-2.0) == -4.0
    assert SymbolSpec("airy")(-2.0) == -8.0
    assert SymbolSpec("schrodinger", n=2)(np.array([3.0, 4.0])) == 25.0
    custom = SymbolSpec("custom", fn=lambda x: x**4, m=4)
    assert custom.growth == 4 and custom(2.0) == 16.0
    lo, hi = SymbolSpec("benjamin_ono").check_growth(frequencies(64, 2 * math.pi))
    assert lo == hi == 1.0


def test_symbol_validation():
    with pytest.raises(ValueError):
        SymbolSpec("heat")
    with pytest.raises(ValueError):
        SymbolSpec("airy", n=2)
    with pytest.raises(ValueError):
        SymbolSpec("custom")
    with pytest.raises(ValueError):
        SymbolSpec("custom", fn=lambda x: 1j * x, m=1)(np.ones(3))


def test_build_diagonal_errors():
    with pytest.raises(ValueError):
        build_diagonal(SymbolSpec("schrodinger"), 12, 1.0)
    with pytest.raises(ValueError):
        build_diagonal(SymbolSpec("schrodinger"), 8, -1.0)


def test_two_dimensional_operator():
    op = build_diagonal(SymbolSpec("schrodinger", n=2), 8, 2 * math.pi)
    assert op.shape == (8, 8) and op.size == 64
    k = np.fft.fftfreq(8, 1 / 8)
    assert np.allclose(op.eigenvalues.reshape(8, 8), k[:, None] ** 2 + k[None, :] ** 2, rtol=1e-14)
    rng = np.random.default_rng(1)
    u = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    assert np.allclose(op.to_physical(op.to_coefficients(u)), u)


def test_perturbed_reductions():
    sym = SymbolSpec("schrodinger")
    ref = schrodinger(16)
    dense = build_perturbed(sym, None, None, 16, 2 * math.pi)
    assert np.allclose(np.sort(dense.eigenvalues), np.sort(ref.eigenvalues), atol=1e-10)
    assert np.all(np.diff(dense.eigenvalues) >= 0)
    shifted = build_perturbed(sym, np.zeros(16), np.full(16, 2.5), 16, 2 * math.pi)
    assert np.allclose(np.sort(shifted.eigenvalues), np.sort(ref.eigenvalues) + 2.5, atol=1e-10)


def test_toy_hermitian_matrix():
    op = from_hermitian_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(op.eigenvalues, [-1.0, 1.0])
    with pytest.raises(ValueError):
        from_hermitian_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_complex_potential_rejected():
    with pytest.raises(ValueError, match="real-valued"):
        build_perturbed(SymbolSpec("schrodinger"), 1j * np.ones(8), None, 8, 2 * math.pi)


def test_apply_A_examples():
    zero = DiagonalizedOperator(np.zeros(4), (4,), 1.0)
    f = StateField(zero, np.arange(4.0))
    assert np.all(apply_A(zero, f).coefficients == 0)
    op = schrodinger()
    e3 = np.eye(8)[3]
    assert np.array_equal(apply_A(op, e3), op.eigenvalues[3] * e3)
    rng = np.random.default_rng(0)
    c = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    twice = apply_A(op, apply_A(op, c))
    assert np.linalg.norm(twice) == pytest.approx(np.linalg.norm(op.eigenvalues**2 * c))


def test_parseval_both_paths():
    rng = np.random.default_rng(2)
    c = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    for op in (schrodinger(32), build_perturbed(SymbolSpec("schrodinger"), None, np.cos(np.arange(32)), 32, 6.0)):
        assert abs(np.linalg.norm(op.to_physical(c)) - np.linalg.norm(c)) < 1e-10
        assert np.allclose(op.to_coefficients(op.to_physical(c)), c, atol=1e-12)


def test_state_field_norms():
    op = schrodinger()
    c = np.zeros(8, dtype=complex)
    c[1] = 3.0  # eigenvalue 1
    f = StateField(op, c)
    assert f.h_norm() == 3.0
    assert f.graph_norm() == 6.0
    assert np.allclose(StateField.from_physical(op, f.physical()).coefficients, c)
    with pytest.raises(ValueError):
        StateField(op, np.zeros(3))


def test_inverse_needs_injectivity():
    op = schrodinger()
    assert not op.injective
    with pytest.raises(ValueError):
        op.inverse(np.ones(8))
    shifted = DiagonalizedOperator(op.eigenvalues + 1, op.shape, op.L)
    assert np.allclose(shifted.inverse(shifted.eigenvalues), 1)


def test_propagator_S_examples():
    op = schrodinger()
    c = np.arange(8) + 1j
    assert np.array_equal(propagator_S(op, 0.5, 0.0, c), c)
    t = 0.3
    out = propagator_S(op, 1.0, t, c)
    assert np.allclose(out, np.exp(1j * op.eigenvalues * t) * c, rtol=1e-13, atol=0)
    one = DiagonalizedOperator(np.array([1.0]), (1,), 1.0)
    assert abs(S_multiplier(one, 0.5, 4.0)[0] - E05_1_2I) < 1e-14
    f = StateField(op, c)
    assert isinstance(propagator_S(op, 0.5, 1.0, f), StateField)


def test_propagator_P_examples():
    op = schrodinger()
    c = np.ones(8)
    assert np.allclose(propagator_P(op, 1.0, 0.7, c), np.exp(0.7j * op.eigenvalues))
    zero = DiagonalizedOperator(np.zeros(3), (3,), 1.0)
    t = 2.0
    assert np.allclose(P_multiplier(zero, 0.4, t), t ** (-0.6) / math.gamma(0.4))
    two = DiagonalizedOperator(np.array([2.0]), (1,), 1.0)
    assert abs(P_multiplier(two, 0.5, 1.0)[0] - E05_05_2I) < 1e-14
    with pytest.raises(ValueError):
        propagator_P(op, 0.5, 0.0, c)


def test_multiplier_shapes():
    op = schrodinger()
    t = np.linspace(0.1, 1, 5)
    assert S_multiplier(op, 0.5, t).shape == (5, 8)
    assert P_multiplier(op, 0.5, t).shape == (5, 8)
    with pytest.raises(ValueError):
        S_multiplier(op, 0.5, -1.0)


def test_propagator_reports_offending_mode():
    op = DiagonalizedOperator(np.array([0.0, 1.0]), (2,), 1.0)
    with pytest.raises(UnsupportedRegionError, match="mode"):
        S_multiplier(op, 2.5, 10.0)


def test_probe_examples():
    sym = SymbolSpec("schrodinger")
    L = 16 * math.pi
    N = 256
    zero = relative_bound_probe(sym, np.zeros(N), None, [1.0, 10.0], L, n_fields=8)
    assert all(r.c1 == 0 and r.c2 == 0 for r in zero.rows)
    one = relative_bound_probe(sym, np.zeros(N), np.ones(N), [1.0, 10.0], L, n_fields=8)
    assert all(r.c1 == 1 and r.c2 == 0 for r in one.rows)
    assert all(r.max_violation <= 1 + 1e-12 for r in one.rows)


def test_probe_slope():
    res = relative_bound_probe(SymbolSpec("schrodinger"), np.zeros(4096), None,
                               np.geomspace(1e2, 1e4, 9), 16 * math.pi, n_fields=4)
    assert abs(res.slope + 1.5) <= 0.1


def test_probe_rejects_low_order_symbols():
    sym = SymbolSpec("fractional_laplacian", beta=0.2)
    with pytest.raises(ValueError, match="m > n/2"):
        relative_bound_probe(sym, np.zeros(16), None, [1.0, 2.0], 1.0)
    with pytest.raises(ValueError):
        relative_bound_probe(SymbolSpec("schrodinger"), np.zeros(16), None, [2.0, 1.0], 1.0)


def test_operator_json(tmp_path):
    import json

    op = schrodinger()
    path = tmp_path / "op.json"
    op.to_json(path)
    d = json.loads(path.read_text())
    assert d["kind"] == "fft" and d["eigenvalues"] == op.eigenvalues.tolist()


def test_load_potential_csv(tmp_path):
    p = tmp_path / "pot.csv"
    p.write_text("x,q,V\n0,1,2\n0.5,3,4\n")
    x, q, V = load_potential_csv(p)
    assert x.tolist() == [0, 0.5] and q.tolist() == [1, 3] and V.tolist() == [2, 4]
    bad = tmp_path / "bad.csv"
    bad.write_text("x,q\n0,1\n")
    with pytest.raises(ValueError):
        load_potential_csv(bad)
