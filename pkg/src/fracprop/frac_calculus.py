"""Fractional kernels, product-integration quadrature and growth-function tests."""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import gamma, poch

from .mittag_leffler import MLConfig, ml_eval

__all__ = [
    "AdmissibilityResult",
    "GrowthFunction",
    "TimeGrid",
    "admissibility",
    "caputo_derivative",
    "g_kernel",
    "gronwall_bound",
    "interval_moments",
    "rl_integral",
    "volterra_equality",
]

_SERIES_TERMS = 64


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Time mesh ``0 = t_0 < t_1 < ... < t_N = T``.

    Use :meth:`graded` for ``t_j = T (j/N)^r``. Product-integration weight
    matrices are cached per ``alpha``.
    """

    nodes: np.ndarray
    r: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.nodes, dtype=float).copy()
        if t.ndim != 1 or t.size < 2:
            raise ValueError("a time grid needs at least 2 nodes")
        if t[0] != 0.0:
            raise ValueError("the first node must be 0")
        if not np.all(np.diff(t) > 0):
            raise ValueError("nodes must be strictly increasing")
        t.flags.writeable = False
        object.__setattr__(self, "nodes", t)

    @classmethod
    def graded(cls, T, N, r=1.0):
        if not T > 0:
            raise ValueError("T must be positive")
        if N < 1:
            raise ValueError("N must be at least 1")
        if r < 1:
            raise ValueError("grading exponent must be >= 1")
        t = T * (np.arange(N + 1) / N) ** r
        t[-1] = T
        return cls(t, float(r))

    @classmethod
    def uniform(cls, T, N):
        return cls.graded(T, N, 1.0)

    @property
    def T(self):
        return float(self.nodes[-1])

    @property
    def N(self):
        """Number of intervals."""
        return self.nodes.size - 1

    def __len__(self):
        return self.nodes.size

    def weights(self, alpha):
        """Lower-triangular matrix ``W`` with ``(W u)_n`` equal to the integral
        of ``(t_n - tau)^(alpha-1) u(tau)`` over ``[0, t_n]`` for the
        piecewise-linear interpolant of ``u``. Row ``n`` sums to ``t_n^alpha / alpha``.
        """
        key = float(alpha)
        W = self._cache.get(key)
        if W is None:
            W = _weight_matrix(self.nodes, key)
            W.flags.writeable = False
            self._cache[key] = W
        return W


def interval_moments(alpha, A, B):
    """Integrals of ``s^(alpha-1) (s-A)/h`` and ``s^(alpha-1) (B-s)/h`` over ``[A, B]``.

    ``h = B - A``. In the time variable ``tau = t - s`` these are the weights
    of the left and right endpoint values of a linear function on an
    interval at distances ``A < B`` from ``t``.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    h = B - A
    x = np.divide(h, B, out=np.ones_like(B), where=B > 0)
    c0 = np.empty(np.broadcast(A, B).shape)
    c1 = np.empty_like(c0)
    near = x <= 0.5
    if near.any():
        # expand (1 - y)^(alpha-1) around y = 0 with y = (B - s) / B
        m = np.arange(_SERIES_TERMS)
        cm = poch(1 - alpha, m) / gamma(m + 1)
        xp = x[near][:, None] ** m
        j0 = (cm * xp / ((m + 1) * (m + 2))).sum(-1)
        j1 = (cm * xp / (m + 2)).sum(-1)
        scale = B[near] ** alpha * x[near]
        c0[near] = scale * j0
        c1[near] = scale * j1
    far = ~near
    if far.any():
        a, b, hh = A[far], B[far], h[far]
        d1 = (b**alpha - a**alpha) / alpha
        d2 = (b ** (alpha + 1) - a ** (alpha + 1)) / (alpha + 1)
        c0[far] = (d2 - a * d1) / hh
        c1[far] = (b * d1 - d2) / hh
    return c0, c1


def _weight_matrix(t, alpha):
    n1 = t.size
    n, j = np.tril_indices(n1, -1)
    B = t[n] - t[j]
    A = t[n] - t[j + 1]
    c0, c1 = interval_moments(alpha, A, B)
    W = np.zeros((n1, n1))
    np.add.at(W, (n, j), c0)
    np.add.at(W, (n, j + 1), c1)
    return W


def g_kernel(alpha, t):
    """``t^(alpha-1) / Gamma(alpha)`` for ``t > 0`` and 0 otherwise."""
    t = np.asarray(t, dtype=float)
    pos = t > 0
    out = np.zeros_like(t)
    out[pos] = t[pos] ** (alpha - 1) / math.gamma(alpha)
    return out.item() if out.ndim == 0 else out


def _samples(grid, u):
    u = np.asarray(u)
    if u.shape[0] != len(grid):
        raise ValueError(f"expected {len(grid)} samples, got {u.shape[0]}")
    return u


def rl_integral(alpha, grid, u):
    """Riemann-Liouville integral ``I^alpha u`` at every node of ``grid``.

    ``u`` has the node axis first; any trailing axes are carried along.
    Exact when ``u`` is piecewise linear on the grid.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    u = _samples(grid, u)
    W = grid.weights(alpha)
    return np.tensordot(W, u, axes=(1, 0)) / math.gamma(alpha)


def caputo_derivative(alpha, grid, u):
    """Caputo derivative at ``t_1, ..., t_N`` (L1 scheme).

    The value at ``t_n`` is the exact fractional derivative of the
    piecewise-linear interpolant of ``u``. No value is returned for ``t_0``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if len(grid) < 3:
        raise ValueError("the Caputo derivative needs at least 3 nodes")
    u = _samples(grid, u)
    t = grid.nodes
    slope = np.diff(u, axis=0) / np.diff(t).reshape((-1,) + (1,) * (u.ndim - 1))
    n, j = np.tril_indices(t.size, -1)
    e = 1 - alpha
    K = np.zeros((t.size, t.size - 1))
    K[n, j] = ((t[n] - t[j]) ** e - (t[n] - t[j + 1]) ** e) / math.gamma(2 - alpha)
    return np.tensordot(K[1:], slope, axes=(1, 0))


def gronwall_bound(a_fn, b, alpha, t, cfg: MLConfig | None = None):
    """``a(t) E_{alpha,1}(b Gamma(alpha) t^alpha)``.

    ``a_fn`` may be a callable or a constant.
    """
    if not b > 0:
        raise ValueError("b must be positive")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be nonnegative")
    a = a_fn(t_arr) if callable(a_fn) else np.full(t_arr.shape, float(a_fn))
    e = ml_eval(alpha, 1.0, b * math.gamma(alpha) * t_arr**alpha, cfg).real
    out = np.asarray(a, dtype=float) * e
    return out.item() if out.ndim == 0 else out


def volterra_equality(a, b, alpha, grid):
    """Solve ``u(t) = a(t) + b * int_0^t (t-s)^(alpha-1) u(s) ds`` on ``grid``.

    This is the equality case of the fractional Gronwall inequality; the
    exact solution for constant ``a`` is ``a E_{alpha,1}(b Gamma(alpha) t^alpha)``.
    ``a`` is a constant or an array of node values. Product trapezoid, implicit
    in the diagonal weight.
    """
    t = grid.nodes
    a = np.broadcast_to(np.asarray(a, dtype=float), t.shape)
    W = b * grid.weights(alpha)
    u = np.empty_like(t)
    u[0] = a[0]
    for n in range(1, t.size):
        u[n] = (a[n] + W[n, :n] @ u[:n]) / (1 - W[n, n])
    return u


@dataclass(frozen=True)
class GrowthFunction:
    """Nonnegative nondecreasing ``w`` with ``w(0) = 0`` and ``w > 0`` on ``(0, inf)``."""

    fn: Callable[[np.ndarray], np.ndarray]
    monotone: bool = True
    name: str = "w"

    def __call__(self, sigma):
        return np.asarray(self.fn(np.asarray(sigma, dtype=float)), dtype=float)

    def check(self, sigma_max=1e8, samples=2001):
        s = np.concatenate([[0.0], np.geomspace(1e-6, sigma_max, samples)])
        w = self(s)
        if w[0] != 0:
            raise ValueError(f"{self.name}(0) must be 0")
        if np.any(w[1:] <= 0):
            raise ValueError(f"{self.name} must be positive away from 0")
        if self.monotone and np.any(np.diff(w) < -1e-12 * np.abs(w[1:])):
            raise ValueError(f"{self.name} is not nondecreasing on the sample points")


@dataclass(frozen=True)
class AdmissibilityResult:
    divergent: bool
    value: float
    growth_ratio: float
    sigma_max: float

    @property
    def finite(self):
        return not self.divergent


def _log_integral(w, p, lo, hi):
    # integrand sigma^(p-1) / w^p in s = log(sigma): exp(p (s - log w))
    def f(s):
        ws = float(w(math.exp(s)))
        return math.exp(p * (s - math.log(ws)))

    val, _ = integrate.quad(f, lo, hi, limit=400, epsrel=1e-10, epsabs=0.0)
    return val


def admissibility(w, alpha, eps, sigma_max=1e8, tol=0.02):
    """Classify the integral of ``sigma^(1/alpha+eps-1) / w(sigma)^(1/alpha+eps)`` on ``[1, inf)``.

    The partial integrals up to ``sigma_max`` and ``4 sigma_max`` are
    compared; a growth ratio of at least ``1 + tol`` counts as divergence.
    The reported value is the partial integral up to ``4 sigma_max``.
    """
    if not sigma_max >= 10:
        raise ValueError("sigma_max must be at least 10")
    if not (alpha > 0 and eps > 0):
        raise ValueError("alpha and eps must be positive")
    probe = np.geomspace(1.0, 4 * sigma_max, 513)
    wv = w(probe)
    if np.any(wv <= 0) or not np.all(np.isfinite(wv)):
        raise ValueError("w must be positive and finite on [1, inf)")
    p = 1.0 / alpha + eps
    hi = math.log(sigma_max)
    # split at decades so quad sees the whole range
    cuts = np.linspace(0.0, hi, max(2, int(hi / math.log(10)) + 2))
    i1 = sum(_log_integral(w, p, a, b) for a, b in itertools.pairwise(cuts))
    i4 = i1 + _log_integral(w, p, hi, hi + math.log(4.0))
    ratio = i4 / i1 if i1 > 0 else math.inf
    return AdmissibilityResult(bool(ratio >= 1 + tol), float(i4), float(ratio), float(sigma_max))
