"""Finite selfadjoint operators in diagonal form and their Mittag-Leffler propagators.

Two realisations share one interface:

* FFT path: a real Fourier symbol ``P(xi)`` on a periodic box of side ``L``,
  diagonalised by the orthonormal DFT;
* dense path: the collocation matrix of ``P(D) + q + V`` diagonalised with
  ``numpy.linalg.eigh``.

Coefficients live in the diagonalising basis; the discrete H-norm is the
Euclidean norm of the coefficient vector.
"""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .mittag_leffler import (
    MittagLefflerError,
    MLConfig,
    UnsupportedRegionError,
    ml_eval,
)

__all__ = [
    "DENSE_CAP",
    "INJECTIVITY_THRESHOLD",
    "DiagonalizedOperator",
    "P_multiplier",
    "ProbeResult",
    "ProbeRow",
    "S_multiplier",
    "StateField",
    "SymbolSpec",
    "apply_A",
    "build_diagonal",
    "build_perturbed",
    "frequencies",
    "from_hermitian_matrix",
    "load_potential_csv",
    "propagator_P",
    "propagator_S",
    "relative_bound_probe",
]

INJECTIVITY_THRESHOLD = 1e-12
DENSE_CAP = 4096
HERMITIAN_TOL = 1e-10

# preset -> (symbol of |xi| or xi, growth exponent); see SymbolSpec
_PRESETS = ("fractional_laplacian", "schrodinger", "airy", "benjamin_ono", "custom")


@dataclass(frozen=True)
class SymbolSpec:
    """Real Fourier symbol entering ``i D_t^alpha u + P(D) u + ... = 0``.

    ==================== ============= ====================================
    preset               P(xi)         source equation
    ==================== ============= ====================================
    fractional_laplacian ``|xi|^(2b)`` ``(-Laplacian)^b``
    schrodinger          ``|xi|^2``    ``-Laplacian``
    airy                 ``xi^3``      ``D_t^alpha u + u_xxx`` times ``i``
    benjamin_ono         ``xi |xi|``   ``D_t^alpha u - H u_xx`` times ``i``
    custom               ``fn(xi)``    user supplied, with ``m`` given
    ==================== ============= ====================================

    ``H`` is the Hilbert transform with symbol ``-i sign(xi)``. Multiplying
    the real-valued dispersive equations by ``i`` puts them in the
    Schrodinger-type form with the real symbols above.
    """

    preset: str
    beta: float = 1.0
    n: int = 1
    m: float | None = None
    fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.preset not in _PRESETS:
            raise ValueError(f"unknown symbol preset {self.preset!r}; choose from {_PRESETS}")
        if self.n not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if self.preset in ("airy", "benjamin_ono") and self.n != 1:
            raise ValueError(f"{self.preset} is one-dimensional")
        if self.preset == "fractional_laplacian" and not self.beta > 0:
            raise ValueError("fractional order must be positive")
        if self.preset == "custom" and (self.fn is None or self.m is None):
            raise ValueError("custom symbols need fn and m")
        if self.growth <= 0:
            raise ValueError("growth exponent must be positive")

    @property
    def growth(self):
        if self.m is not None:
            return float(self.m)
        return {
            "fractional_laplacian": 2 * self.beta,
            "schrodinger": 2.0,
            "airy": 3.0,
            "benjamin_ono": 2.0,
        }[self.preset]

    def __call__(self, xi):
        """Evaluate on frequencies of shape ``(..., n)`` (or ``(...)`` when n == 1)."""
        xi = np.asarray(xi, dtype=float)
        mag = np.sqrt((xi**2).sum(-1)) if self.n == 2 else np.abs(xi)
        p = self.preset
        if p == "fractional_laplacian":
            return mag ** (2 * self.beta)
        if p == "schrodinger":
            return mag**2
        if p == "airy":
            return xi**3
        if p == "benjamin_ono":
            return xi * np.abs(xi)
        vals = np.asarray(self.fn(xi))
        if np.iscomplexobj(vals):
            raise ValueError("custom symbol must be real-valued")
        return vals.astype(float)

    def check_growth(self, xi, xi_large=None):
        """Ratio range of ``|P(xi)| / |xi|^m`` for ``|xi| >= xi_large``."""
        xi = np.asarray(xi, dtype=float)
        mag = np.sqrt((xi**2).sum(-1)) if self.n == 2 else np.abs(xi)
        xi_large = 0.25 * mag.max() if xi_large is None else xi_large
        sel = mag >= xi_large
        ratio = np.abs(self(xi))[sel] / mag[sel] ** self.growth
        return float(ratio.min()), float(ratio.max())

    def to_dict(self):
        d = {"preset": self.preset, "beta": self.beta, "n": self.n}
        if self.m is not None:
            d["m"] = self.m
        return d


def frequencies(N, L, n=1):
    """Torus frequencies ``(2 pi / L) k`` with ``k`` in ``{-N/2, ..., N/2 - 1}``, FFT order."""
    k = np.fft.fftfreq(N, d=1.0 / N)
    xi = 2 * math.pi / L * k
    if n == 1:
        return xi
    kx, ky = np.meshgrid(xi, xi, indexing="ij")
    return np.stack([kx, ky], -1)


def _grid_points(N, L, n):
    x = L * np.arange(N) / N
    if n == 1:
        return x
    return np.stack(np.meshgrid(x, x, indexing="ij"), -1)


@dataclass(frozen=True, eq=False)
class DiagonalizedOperator:
    """Real eigenvalues plus a unitary map between coefficient and physical space.

    ``U is None`` means the map is the orthonormal DFT over ``shape``;
    otherwise physical values are ``U @ coefficients``.
    """

    eigenvalues: np.ndarray
    shape: tuple
    L: float
    U: np.ndarray | None = None
    symbol: SymbolSpec | None = None
    q: np.ndarray | None = None
    V: np.ndarray | None = None

    def __post_init__(self):
        a = np.asarray(self.eigenvalues)
        if np.iscomplexobj(a):
            if np.abs(a.imag).max(initial=0) > HERMITIAN_TOL:
                raise ValueError("eigenvalues must be real")
            a = a.real
        a = np.ascontiguousarray(a, dtype=float).ravel()
        a.flags.writeable = False
        object.__setattr__(self, "eigenvalues", a)
        if a.size != int(np.prod(self.shape)):
            raise ValueError("eigenvalue count does not match the grid shape")
        if self.U is not None:
            U = np.asarray(self.U, dtype=complex)
            if U.shape != (a.size, a.size):
                raise ValueError("U must be square with one column per eigenvalue")
            U.flags.writeable = False
            object.__setattr__(self, "U", U)

    @property
    def size(self):
        return self.eigenvalues.size

    @property
    def is_fft(self):
        return self.U is None

    @property
    def injective(self):
        return bool(np.all(np.abs(self.eigenvalues) > INJECTIVITY_THRESHOLD))

    @property
    def n(self):
        return len(self.shape)

    def xi(self):
        """Mode frequencies (FFT path only), flattened to ``(size, n)`` or ``(size,)``."""
        if not self.is_fft:
            raise ValueError("dense operators have no frequency labels")
        xi = frequencies(self.shape[0], self.L, self.n)
        return xi.reshape(self.size, -1) if self.n > 1 else xi

    def points(self):
        """Physical collocation points, flattened like the physical view."""
        x = _grid_points(self.shape[0], self.L, self.n)
        return x if self.n == 1 else x.reshape(self.size, self.n)

    def to_physical(self, c):
        """Map coefficients (last axis) to physical grid values (flattened last axis)."""
        c = np.asarray(c, dtype=complex)
        if self.U is not None:
            return c @ self.U.T
        lead = c.shape[:-1]
        x = np.fft.ifftn(c.reshape(lead + self.shape), axes=self._axes(), norm="ortho")
        return x.reshape(lead + (self.size,))

    def to_coefficients(self, u):
        u = np.asarray(u, dtype=complex)
        if self.U is not None:
            return u @ self.U.conj()
        lead = u.shape[:-1]
        c = np.fft.fftn(u.reshape(lead + self.shape), axes=self._axes(), norm="ortho")
        return c.reshape(lead + (self.size,))

    def _axes(self):
        return tuple(range(-self.n, 0))

    def h_norm(self, c):
        return np.linalg.norm(np.asarray(c), axis=-1)

    def graph_norm(self, c):
        """``||c|| + ||A c||``, the D(A) norm."""
        c = np.asarray(c)
        return np.linalg.norm(c, axis=-1) + np.linalg.norm(self.eigenvalues * c, axis=-1)

    def inverse(self, c):
        if not self.injective:
            raise ValueError("operator is not injective; A^-1 is unavailable")
        return np.asarray(c) / self.eigenvalues

    def to_dict(self):
        d = {
            "kind": "fft" if self.is_fft else "dense",
            "shape": list(self.shape),
            "L": self.L,
            "symbol": self.symbol.to_dict() if self.symbol else None,
            "eigenvalues": self.eigenvalues.tolist(),
        }
        if self.q is not None:
            d["q"] = np.asarray(self.q).tolist()
        if self.V is not None:
            d["V"] = np.asarray(self.V).tolist()
        return d

    def to_json(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")


@dataclass(frozen=True, eq=False)
class StateField:
    """Coefficient vector tied to an operator's basis."""

    op: DiagonalizedOperator
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape[-1] != self.op.size:
            raise ValueError("coefficient length does not match the operator")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def from_physical(cls, op, u):
        return cls(op, op.to_coefficients(u))

    def physical(self):
        return self.op.to_physical(self.coefficients)

    def h_norm(self):
        return float(self.op.h_norm(self.coefficients))

    def graph_norm(self):
        return float(self.op.graph_norm(self.coefficients))

    def __array__(self, dtype=None, copy=None):
        return self.coefficients if dtype is None else self.coefficients.astype(dtype)


def _coeffs(f):
    return f.coefficients if isinstance(f, StateField) else np.asarray(f)


def _wrap(f, c):
    return StateField(f.op, c) if isinstance(f, StateField) else c


def build_diagonal(symbol: SymbolSpec, N: int, L: float) -> DiagonalizedOperator:
    """FFT-diagonal operator ``P(D)`` with ``N`` modes per axis on ``[0, L)^n``."""
    if N < 2 or N & (N - 1):
        raise ValueError("N must be a power of two")
    if not L > 0:
        raise ValueError("L must be positive")
    xi = frequencies(N, L, symbol.n)
    a = symbol(xi)
    shape = (N,) * symbol.n
    return DiagonalizedOperator(a.reshape(-1), shape, float(L), None, symbol)


def _symbol_matrix(symbol, N, L):
    """Collocation matrix of ``P(D)`` in physical space."""
    xi = frequencies(N, L, symbol.n)
    shape = (N,) * symbol.n
    size = int(np.prod(shape))
    eye = np.eye(size).reshape((size,) + shape)
    axes = tuple(range(1, symbol.n + 1))
    F = np.fft.fftn(eye, axes=axes, norm="ortho").reshape(size, size)
    # rows of F are DFT of unit vectors; F.T maps physical to coefficients
    Fm = F.T
    a = symbol(xi).reshape(-1)
    return Fm.conj().T @ (a[:, None] * Fm)


def from_hermitian_matrix(Hmat, L=1.0, shape=None, symbol=None, q=None, V=None):
    """Diagonalise an explicit Hermitian matrix (dense path)."""
    H = np.asarray(Hmat)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("matrix must be square")
    if H.shape[0] > DENSE_CAP:
        raise ValueError(f"dense path is capped at {DENSE_CAP} unknowns")
    resid = np.abs(H - H.conj().T).max(initial=0.0)
    if resid > HERMITIAN_TOL * max(1.0, np.abs(H).max(initial=0.0)):
        raise ValueError(
            f"matrix is not Hermitian (residue {resid:.2e}); potentials must be real-valued"
        )
    w, U = np.linalg.eigh(0.5 * (H + H.conj().T))
    return DiagonalizedOperator(w, shape or (H.shape[0],), float(L), U, symbol, q, V)


def build_perturbed(symbol: SymbolSpec, q, V, N: int, L: float) -> DiagonalizedOperator:
    """Dense diagonalisation of ``P(D) + q + V`` on the collocation grid."""
    shape = (N,) * symbol.n
    size = int(np.prod(shape))
    if size > DENSE_CAP:
        raise ValueError(f"dense path is capped at {DENSE_CAP} unknowns, got {size}")
    qv = []
    for name, arr in (("q", q), ("V", V)):
        arr = np.zeros(size) if arr is None else np.asarray(arr).reshape(-1)
        if arr.size != size:
            raise ValueError(f"{name} must have {size} collocation values")
        qv.append(arr)
    q, V = qv
    H = _symbol_matrix(symbol, N, L).astype(complex)
    H[np.diag_indices(size)] += q + V
    return from_hermitian_matrix(H, L, shape, symbol, q, V)


def apply_A(op: DiagonalizedOperator, f):
    return _wrap(f, op.eigenvalues * _coeffs(f))


def _unique_eval(alpha, beta, a, zscale, cfg, tag):
    """ml_eval over the distinct eigenvalues, broadcast back; reports the offending mode."""
    ua, inv = np.unique(a, return_inverse=True)
    try:
        vals = ml_eval(alpha, beta, 1j * np.multiply.outer(zscale, ua), cfg)
    except MittagLefflerError as exc:
        for k, ak in enumerate(a):
            try:
                ml_eval(alpha, beta, 1j * ak * np.asarray(zscale), cfg)
            except MittagLefflerError:
                raise UnsupportedRegionError(f"{tag}: mode {k} (a={ak:g}): {exc}") from exc
        raise
    return vals[..., inv]


def S_multiplier(op, alpha, t, cfg: MLConfig | None = None):
    """``E_{alpha,1}(i a_k t^alpha)``; shape ``t.shape + (size,)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    return _unique_eval(alpha, 1.0, op.eigenvalues, t**alpha, cfg, "S_t")


def P_multiplier(op, alpha, t, cfg: MLConfig | None = None):
    """``t^(alpha-1) E_{alpha,alpha}(i a_k t^alpha)``; requires ``t > 0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("P_t needs t > 0")
    e = _unique_eval(alpha, alpha, op.eigenvalues, t**alpha, cfg, "P_t")
    return (t ** (alpha - 1))[..., None] * e


def propagator_S(op, alpha, t, f, cfg: MLConfig | None = None):
    return _wrap(f, S_multiplier(op, alpha, t, cfg) * _coeffs(f))


def propagator_P(op, alpha, t, f, cfg: MLConfig | None = None):
    return _wrap(f, P_multiplier(op, alpha, t, cfg) * _coeffs(f))


@dataclass(frozen=True)
class ProbeRow:
    gamma: float
    integral: float
    kappa: float
    c1: float
    c2: float
    max_violation: float


@dataclass(frozen=True)
class ProbeResult:
    rows: list
    slope: float
    gamma_star: float | None

    def table(self):
        return [r.__dict__.copy() for r in self.rows]


def relative_bound_probe(symbol, q, V, gamma_list, L, n_fields=64, seed=0):
    """Relative-bound constants of the multiplication operator ``q + V`` with respect to ``P(D)``.

    For each ``gamma`` this reports

    * ``integral``: Riemann sum of ``1 / (P(xi)^2 + gamma^2)`` over the modes,
    * ``kappa``: the largest ratio ``||u||_inf / ||(P(D) + i gamma) u||`` seen
      over random fields and the extremal resolvent-of-a-point-mass field,
    * ``c2 = ||q||_2 kappa`` and ``c1 = ||V||_inf + gamma c2``, so that
      ``||(q+V) u|| <= c1 ||u|| + c2 ||P(D) u||``,
    * ``max_violation``: the largest ratio of the left side to the right
      side over the test fields (at most 1 when the bound holds).

    Norms are continuum L2 norms on the box, approximated on the grid.
    ``slope`` fits ``log integral`` against ``log gamma``; ``gamma_star`` is
    the first gamma with ``c2 < 1``.
    """
    n, m = symbol.n, symbol.growth
    if not m > n / 2:
        raise ValueError(f"the relative-bound argument needs m > n/2 (got m={m}, n={n})")
    gam = np.asarray(gamma_list, dtype=float)
    if gam.size < 2 or np.any(gam <= 0) or np.any(np.diff(gam) <= 0):
        raise ValueError("gammas must be positive and increasing")
    q = np.asarray(q, dtype=float)
    V = np.zeros_like(q) if V is None else np.asarray(V, dtype=float)
    N = q.shape[0]
    shape = (N,) * n
    q = q.reshape(shape)
    V = V.reshape(shape)
    dx = (L / N) ** n
    dxi = (2 * math.pi / L) ** n
    P = symbol(frequencies(N, L, n)).reshape(shape)
    axes = tuple(range(-n, 0))

    def l2(u):
        return np.sqrt((np.abs(u) ** 2).sum(axis=axes) * dx)

    def pdo(u, mult):
        return np.fft.ifftn(mult * np.fft.fftn(u, axes=axes), axes=axes)

    rng = np.random.default_rng(seed)
    fields = rng.standard_normal((n_fields,) + shape) + 1j * rng.standard_normal((n_fields,) + shape)
    # smooth half of them so both rough and smooth fields are probed
    damp = 1.0 / (1.0 + np.abs(P)) ** 0.5
    fields[n_fields // 2 :] = pdo(fields[n_fields // 2 :], damp)
    qn = l2(q)
    vinf = float(np.abs(V).max())
    pert = q + V
    rows = []
    for g in gam:
        res = 1.0 / (P + 1j * g)
        delta = np.zeros(shape, dtype=complex)
        delta[(0,) * n] = 1.0
        extremal = pdo(delta, res)
        batch = np.concatenate([fields, extremal[None]], 0)
        hu = pdo(batch, P)
        kap = float((np.abs(batch).reshape(len(batch), -1).max(1) / l2(hu + 1j * g * batch)).max())
        c2 = float(qn * kap)
        c1 = vinf + g * c2
        lhs = l2(pert * batch)
        rhs = c1 * l2(batch) + c2 * l2(hu)
        with np.errstate(invalid="ignore", divide="ignore"):
            viol = np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))
        integral = float((1.0 / (P**2 + g**2)).sum() * dxi)
        rows.append(ProbeRow(float(g), integral, kap, c1, c2, float(viol.max())))
    ints = np.array([r.integral for r in rows])
    slope = float(np.polyfit(np.log(gam), np.log(ints), 1)[0])
    star = next((r.gamma for r in rows if r.c2 < 1), None)
    return ProbeResult(rows, slope, star)


def load_potential_csv(path):
    """Read columns ``x, q, V`` from a CSV file with a header row."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"x", "q", "V"} <= set(rows[0]):
        raise ValueError(f"{path}: expected columns x, q, V")
    x = np.array([float(r["x"]) for r in rows])
    q = np.array([float(r["q"]) for r in rows])
    V = np.array([float(r["V"]) for r in rows])
    return x, q, V
