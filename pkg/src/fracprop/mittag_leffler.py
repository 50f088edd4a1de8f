"""Two-parameter Mittag-Leffler function E_{alpha,beta}(z) for complex z.

Three evaluation routes are combined by :func:`ml_eval`:

* the power series (double precision near the origin, extended precision
  through mpmath when cancellation would destroy the double result),
* a parabolic-contour integral for the intermediate annulus when
  ``0 < alpha < 1``,
* the large-argument expansion, with the exponentially growing residue
  contribution added so it stays valid on every ray.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import gammaln, rgamma

__all__ = [
    "MLConfig",
    "MLParams",
    "MittagLefflerError",
    "SectorError",
    "SeriesConvergenceError",
    "UnsupportedRegionError",
    "asymptotic_radius",
    "default_sector_angle",
    "ml_asymptotic",
    "ml_branch",
    "ml_derivative_pair",
    "ml_eval",
    "ml_series",
]

_EPS = np.finfo(float).eps
_LOG_TARGET = -math.log(1e-15)
_P_MAX = 50
_ASYM_ENVELOPE = math.log(1e-11)
_SERIES_CAP = 200_000


class MittagLefflerError(ValueError):
    """Base class for evaluation failures."""


class SeriesConvergenceError(MittagLefflerError):
    """|z| is too large for the power series within the term cap."""


class SectorError(MittagLefflerError):
    """Argument lies outside the sector where the expansion holds."""


class UnsupportedRegionError(MittagLefflerError):
    """No implemented route covers the requested (alpha, beta, z)."""


@dataclass(frozen=True)
class MLParams:
    alpha: float
    beta: float
    z: complex

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        object.__setattr__(self, "z", complex(self.z))


@dataclass(frozen=True)
class MLConfig:
    """Knobs for :func:`ml_eval`.

    Parameters
    ----------
    series_radius : float
        Below this modulus the double-precision series is used.
    switch_radius : float or None
        Modulus above which the asymptotic branch takes over. ``None``
        derives a radius per (alpha, beta) from the size of the expansion
        coefficients, see :func:`asymptotic_radius`.
    series_tol : float
        Absolute tail tolerance for the series.
    asymptotic_terms : int or None
        Number of expansion terms; ``None`` picks the optimal truncation at
        the switch radius.
    mu_max : float
        Largest contour scale allowed when no residue dominates; bounds the
        roundoff amplification ``exp(mu_max)``.
    """

    series_radius: float = 1.0
    switch_radius: float | None = None
    series_tol: float = 1e-16
    asymptotic_terms: int | None = None
    mu_max: float = 3.0

    def __post_init__(self):
        if not self.series_radius > 0:
            raise ValueError("series_radius must be positive")
        if self.switch_radius is not None and not self.switch_radius > 0:
            raise ValueError("switch_radius must be positive")
        if not self.series_tol > 0:
            raise ValueError("series_tol must be positive")
        if self.asymptotic_terms is not None and self.asymptotic_terms < 1:
            raise ValueError("asymptotic_terms must be >= 1")


DEFAULT_CONFIG = MLConfig()


def _as_array(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def _finish(out, scalar):
    return complex(out.reshape(())) if scalar else out


def _check_alpha(alpha):
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ValueError(f"alpha must be a positive finite number, got {alpha}")


# ---------------------------------------------------------------- series


def _gamma_pole(x):
    return (x <= 0) & (np.floor(x) == x)


def _series_logmag(alpha, beta, absz, K):
    k = np.arange(K)
    x = alpha * k + beta
    with np.errstate(divide="ignore", invalid="ignore"):
        logz = np.log(absz)[..., None]
        lm = k * logz - gammaln(x)
    lm = np.where(_gamma_pole(x), -np.inf, lm)
    # 0**0 == 1 for the leading term
    lm[..., 0] = -np.inf if _gamma_pole(beta) else -gammaln(beta)
    return lm


def _series_length(alpha, beta, rmax, tol):
    """Number of terms so that the tail is below ``tol`` for |z| <= rmax."""
    if rmax == 0.0:
        return 1
    K = int(min(_SERIES_CAP, 32 + (2.0 * rmax ** (1.0 / alpha) + 40.0) / alpha))
    while True:
        lm = _series_logmag(alpha, beta, np.array([rmax]), K + 1)[0]
        x = alpha * np.arange(K + 1) + beta
        step = np.diff(lm)
        with np.errstate(divide="ignore", invalid="ignore"):
            # tail <= t_k / (1 - ratio) while the term ratio keeps shrinking
            tail = lm[:-1] - np.log1p(-np.exp(np.minimum(step, -1e-300)))
        ok = (x[:-1] > 1.0) & (step < 0) & (tail < math.log(tol))
        # the log-magnitudes are concave past the peak, so the first hit
        # after the maximum bounds the whole tail
        peak = int(np.argmax(lm))
        ok[:peak] = False
        hit = np.flatnonzero(ok)
        if hit.size:
            return int(hit[0]) + 1
        if K >= _SERIES_CAP:
            raise SeriesConvergenceError(
                f"|z|={rmax:.3g} needs more than {_SERIES_CAP} series terms "
                f"for alpha={alpha}"
            )
        K = min(_SERIES_CAP, 2 * K)


def _series_double(alpha, beta, z, K):
    k = np.arange(K)
    x = alpha * k + beta
    rg = rgamma(x)
    absz = np.abs(z)
    lm = _series_logmag(alpha, beta, absz, K)
    phase = np.angle(z)[..., None] * k
    sign = np.where(_gamma_pole(x), 0.0, np.sign(rg))
    sign = np.where(sign == 0.0, np.where(_gamma_pole(x), 0.0, 1.0), sign)
    terms = sign * np.exp(lm + 1j * phase)
    # compensated summation along k
    s = np.zeros(z.shape, dtype=complex)
    c = np.zeros(z.shape, dtype=complex)
    for j in range(K):
        y = terms[..., j] - c
        t = s + y
        c = (t - s) - y
        s = t
    maxterm = np.exp(lm.max(axis=-1)) if K else np.zeros(z.shape)
    return s, maxterm, lm.max(axis=-1)


def _rational(alpha):
    fr = Fraction(alpha).limit_denominator(64)
    if fr.numerator <= 64 and abs(float(fr) - alpha) <= 2 * _EPS * alpha:
        return fr.numerator, fr.denominator
    return None


def _series_mp(alpha, beta, z, dps, tol):
    """Series in extended precision; returns the value and log10 of the largest term."""
    rat = _rational(alpha)
    # past this index the terms decay geometrically
    r = abs(z) ** (1 / alpha)
    k_min = max(3, math.ceil((math.e * r + 1 - beta) / alpha))
    # geometric tail factor once x >= e r
    tol = tol * (1 - math.exp(-alpha))
    with mpmath.workdps(dps):
        zz = mpmath.mpc(z)
        be = mpmath.mpf(beta)
        al = mpmath.mpf(rat[0]) / rat[1] if rat else mpmath.mpf(alpha)
        thresh = mpmath.mpf(tol) * mpmath.mpf(10) ** (-5)
        s = mpmath.mpc(0)
        zk = mpmath.mpc(1)
        big = mpmath.mpf(0)
        hist = []
        k = 0
        while True:
            x = al * k + be
            if rat and k >= rat[1] and hist[k - rat[1]][0] > 0:
                xp, gp = hist[k - rat[1]]
                prod = xp
                for i in range(1, rat[0]):
                    prod *= xp + i
                g = gp / prod
            else:
                g = mpmath.rgamma(x)
            if rat:
                hist.append((x, g))
                if k >= rat[1]:
                    hist[k - rat[1]] = None
            t = zk * g
            s += t
            # max-norm is enough for magnitude bookkeeping
            at = max(abs(t.real), abs(t.imag))
            big = max(big, at)
            if k >= k_min and at < thresh:
                break
            k += 1
            if k > _SERIES_CAP:
                raise SeriesConvergenceError(f"series did not converge for |z|={abs(z):.3g}")
            zk *= zz
        lbig = float(mpmath.log10(big)) if big > 0 else -math.inf
        return complex(s), lbig


def _to_fixed(v, bits):
    scale = mpmath.ldexp(1, bits)
    return int(mpmath.nint(v.real * scale)), int(mpmath.nint(v.imag * scale))


def _rgamma_rational(num, den, bits):
    """1/Gamma(num/den) at the working precision.

    The argument is pushed up to where mpmath uses Stirling's series, which
    is far cheaper at high precision than its small-argument expansion; the
    shift is undone with an exact rational product (zero at the poles).
    """
    shift = max(0, math.ceil(0.8 * bits - num / den))
    pn, pd = 1, 1
    for i in range(shift):
        pn *= num + i * den
        pd *= den
    if pn == 0:
        return mpmath.mpf(0)
    big = mpmath.rgamma(mpmath.mpf(num + shift * den) / den)
    return big * pn / pd


def _series_fixed(P, Q, beta, z, bits, tol):
    """Series for alpha = P/Q in binary fixed point with ``bits`` fraction bits.

    Terms follow t_k = t_{k-Q} z^Q / prod_{i<P} (x_{k-Q} + i) with exact
    rational x, so each step costs a few big-integer products.
    """
    bn, bd = Fraction(beta).as_integer_ratio()
    r = abs(z) ** (Q / P)
    k_min = max(3, math.ceil((math.e * r + 1 - beta) * Q / P))
    one = 1 << bits
    thresh = int(Fraction(tol * (1 - math.exp(-P / Q)) * 1e-5) * one) + 1
    dps = int(bits * 0.30103) + 30
    with mpmath.workdps(dps):
        zz = mpmath.mpc(z)
        zq_re, zq_im = _to_fixed(zz**Q, bits)
        hist = []
        sr = si = 0
        big = 0
        k = 0
        while True:
            # x_k = (P k bd + Q bn) / (Q bd)
            xnum = P * k * bd + Q * bn
            prev = hist[k - Q] if k >= Q else None
            if prev is not None and prev[0] > 0:
                pnum, pre, pim = prev
                num = 1
                for j in range(P):
                    num *= pnum + j * Q * bd
                den = (Q * bd) ** P
                tr = ((pre * zq_re - pim * zq_im) >> bits) * den // num
                ti = ((pre * zq_im + pim * zq_re) >> bits) * den // num
            else:
                tr, ti = _to_fixed(zz**k * _rgamma_rational(xnum, Q * bd, bits), bits)
            hist.append((xnum, tr, ti))
            if k >= Q:
                hist[k - Q] = None
            sr += tr
            si += ti
            at = max(abs(tr), abs(ti))
            big = max(big, at)
            if k >= k_min and at < thresh:
                break
            k += 1
            if k > _SERIES_CAP:
                raise SeriesConvergenceError(f"series did not converge for |z|={abs(z):.3g}")
        val = complex(math.ldexp(sr, -bits) if sr.bit_length() < 1000 else sr / one,
                      math.ldexp(si, -bits) if si.bit_length() < 1000 else si / one)
    lbig = (big.bit_length() - bits) * math.log10(2) if big else -math.inf
    return val, lbig


def _series_horner(alpha, beta, z, K):
    # only for |z| <= 1, where underflowed coefficients cannot matter
    c = rgamma(alpha * np.arange(K) + beta)
    c[_gamma_pole(alpha * np.arange(K) + beta)] = 0.0
    r = np.abs(z)
    s = np.zeros(z.shape, dtype=complex)
    a = np.zeros(z.shape)
    for ck in c[::-1]:
        s = s * z + ck
        a = a * r + abs(ck)
    with np.errstate(divide="ignore"):
        return s, a, np.log(a)


def _series_extended(alpha, beta, z, logmax, tol):
    out = np.empty(z.shape, dtype=complex)
    for idx in np.ndindex(z.shape):
        zi = complex(z[idx])
        dps = 20 + int(max(0.0, logmax[idx]) / math.log(10))
        rat = _rational(alpha)
        for _ in range(4):
            if rat:
                val, lbig = _series_fixed(rat[0], rat[1], beta, zi, int(dps * 3.33), tol)
            else:
                val, lbig = _series_mp(alpha, beta, zi, dps, tol)
            lost = lbig - math.log10(abs(val)) if val != 0 else dps
            if lost + 18 <= dps:
                break
            dps = int(lost) + 25
        out[idx] = val
    return out


def ml_series(alpha, beta, z, tol=1e-16, precision="auto"):
    """Power series sum_k z^k / Gamma(alpha k + beta).

    ``precision`` is ``"double"``, ``"extended"`` or ``"auto"``. The automatic
    mode estimates the cancellation from the largest term and reruns the
    affected entries in mpmath with enough digits to absorb it.
    """
    _check_alpha(alpha)
    if not tol > 0:
        raise ValueError("tol must be positive")
    if precision not in ("auto", "double", "extended"):
        raise ValueError(f"unknown precision {precision!r}")
    z, scalar = _as_array(z)
    if z.size == 0:
        return _finish(z.copy(), scalar)
    shape = z.shape
    z = z.ravel()
    rmax = float(np.abs(z).max())
    K = _series_length(alpha, beta, rmax, tol)
    if precision == "extended":
        lm = _series_logmag(alpha, beta, np.abs(z), K).max(axis=-1)
        return _finish(_series_extended(alpha, beta, z, lm, tol).reshape(shape), scalar)
    with np.errstate(over="ignore", invalid="ignore"):
        if rmax <= 1.0:
            s, maxterm, logmax = _series_horner(alpha, beta, z, K)
        else:
            s, maxterm, logmax = _series_double(alpha, beta, z, K)
    if precision == "auto":
        bad = (8 * _EPS * maxterm > 1e-13 * np.abs(s)) | ~np.isfinite(s)
        bad &= z != 0
        if bad.any():
            s[bad] = _series_extended(alpha, beta, z[bad], logmax[bad], tol)
    return _finish(s.reshape(shape), scalar)


# ------------------------------------------------------------ asymptotic


def default_sector_angle(alpha):
    """An angle mu with pi*alpha/2 < mu < min(pi, pi*alpha), just above the lower end."""
    lo = math.pi * alpha / 2
    hi = min(math.pi, math.pi * alpha)
    return lo + min(0.01, (hi - lo) / 2)


def _residues(alpha, beta, z):
    """Sum of (1/alpha) s^(1-beta) e^s over the roots s of s^alpha = z on the principal sheet."""
    out = np.zeros(z.shape, dtype=complex)
    r = np.abs(z) ** (1.0 / alpha)
    th = np.angle(z)
    for j in (-1, 0, 1):
        ang = th + 2 * math.pi * j
        keep = (ang > -math.pi * alpha) & (ang <= math.pi * alpha) & (r > 0)
        if not keep.any():
            continue
        a = ang[keep] / alpha
        rr = r[keep]
        logs = np.log(rr) + 1j * a
        out[keep] += np.exp((1 - beta) * logs + rr * np.exp(1j * a)) / alpha
    return out


def _asym_sum(alpha, beta, z, p):
    k = np.arange(1, p + 1)
    coef = rgamma(beta - alpha * k)
    inv = 1.0 / z
    acc = np.zeros(z.shape, dtype=complex)
    w = np.ones(z.shape, dtype=complex)
    for c in coef:
        w = w * inv
        if c != 0.0:
            acc -= c * w
    return acc


def ml_asymptotic(alpha, beta, z, p, mu=None, residues=False, min_abs=1.0):
    """Truncated large-|z| expansion ``-sum_{k=1}^p z^-k / Gamma(beta - alpha k)``.

    Parameters
    ----------
    alpha, beta : float
        ``0 < alpha < 2``.
    z : complex or array_like
    p : int
        Number of terms, at least 1.
    mu : float, optional
        Sector half-angle; every ``z`` must satisfy ``mu <= |arg z| <= pi``.
        Defaults to :func:`default_sector_angle`.
    residues : bool
        Add the residue terms coming from the roots of ``s**alpha = z``.
        With them the expansion is valid on every ray, so the sector check
        is skipped.
    min_abs : float
        Smallest modulus accepted.

    Returns
    -------
    complex or ndarray
    """
    _check_alpha(alpha)
    if not alpha < 2:
        raise UnsupportedRegionError("the expansion needs 0 < alpha < 2")
    if int(p) != p or p < 1:
        raise ValueError("p must be an integer >= 1")
    z, scalar = _as_array(z)
    if np.any(np.abs(z) < min_abs):
        raise MittagLefflerError(f"|z| must be at least {min_abs} for the expansion")
    out = _asym_sum(alpha, beta, z, int(p))
    if residues:
        out = out + _residues(alpha, beta, z)
    else:
        mu = default_sector_angle(alpha) if mu is None else mu
        lo = math.pi * alpha / 2
        if not (lo < mu < min(math.pi, math.pi * alpha) or (alpha >= 1 and lo < mu <= math.pi)):
            raise ValueError(f"sector angle {mu} outside (pi*alpha/2, min(pi, pi*alpha))")
        if np.any(np.abs(np.angle(z)) < mu):
            raise SectorError(
                f"arg z outside the sector |arg z| >= {mu:.4f} for alpha={alpha}"
            )
    return _finish(out, scalar)


def _envelope(alpha, beta, k, logr):
    x = beta - alpha * k
    # |1/Gamma(x)| <= Gamma(1-x)/pi for x < 1/2 (reflection formula)
    with np.errstate(divide="ignore"):
        lg = np.where(
            x < 0.5,
            gammaln(np.maximum(1 - x, 1e-300)) - math.log(math.pi),
            np.log(np.abs(rgamma(x))),
        )
    return lg - k * logr


@lru_cache(maxsize=256)
def asymptotic_radius(alpha, beta):
    """Switch radius and truncation order ``(R, p)`` for the expansion.

    ``R`` is twice the smallest modulus at which some expansion term drops
    below 1e-11; ``p`` minimises the term envelope at ``R``.
    """
    k = np.arange(1, _P_MAX + 2)
    logr = np.linspace(math.log(0.5), math.log(5e4), 4000)
    env = _envelope(alpha, beta, k[None, :], logr[:, None]).min(axis=1)
    hit = np.flatnonzero(env <= _ASYM_ENVELOPE)
    rmin = math.exp(logr[hit[0]]) if hit.size else 5e4
    R = max(2.0 * rmin, 2.0)
    e = _envelope(alpha, beta, k, math.log(R))
    p = max(1, min(_P_MAX, int(np.argmin(e))))
    return R, p


# --------------------------------------------------------------- contour


def _contour_choice(alpha, z, mu_max):
    """Pick (mu, h, N, residue flag) per entry of ``z`` for 0 < alpha < 1."""
    L = _LOG_TARGET
    th = np.angle(z)
    r = np.abs(z) ** (1.0 / alpha)
    pole = np.abs(th) < math.pi * alpha
    sang = np.where(pole, th / alpha, 0.0)
    re_s = r * np.cos(sang)
    q2 = np.where(pole, r * np.cos(sang / 2) ** 2, 0.0)
    q = np.sqrt(q2)
    # excess of the pole-line size over the result size
    excess = q2 - np.maximum(re_s, 0.0)
    mus = mu_max * 2.0 ** np.arange(-12, 14)
    best_n = np.full(z.shape, np.inf)
    best = np.zeros(z.shape + (3,))
    for mu in mus:
        m = math.sqrt(mu)
        dstar = math.sqrt(1 + L / mu)
        allowed = mu <= mu_max + np.where(pole, np.maximum(re_s, 0.0), 0.0)
        left = ~pole | (q < m)
        dplus = np.where(pole & left, 1 - q / m, 1.0)
        hp = 2 * math.pi * dplus / (np.where(pole & left, excess, 0.0) + L)
        dcap = np.where(left, np.inf, q / m - 1)
        dm = np.minimum(dstar, dcap)
        tail = np.where(left, mu * (1 + dm) ** 2, excess)
        hm = 2 * math.pi * dm / (tail + L)
        h = np.minimum(hp, hm)
        with np.errstate(divide="ignore"):
            n = np.where(allowed & (h > 1e-6), dstar / h, np.inf)
        take = n < best_n
        best_n = np.where(take, n, best_n)
        best[take] = np.stack([np.full(take.sum(), mu), h[take], (~left)[take]], -1)
    if not np.isfinite(best_n).all():
        raise UnsupportedRegionError("no contour parameters found")
    # round h down onto a geometric grid so nodes can be shared
    hq = 2.0 ** (np.floor(4 * np.log2(best[..., 1])) / 4)
    return best[..., 0], hq, best[..., 2].astype(bool)


@lru_cache(maxsize=512)
def _contour_rule(alpha, beta, mu, h):
    n = math.ceil(math.sqrt(1 + _LOG_TARGET / mu) / h)
    u = h * np.arange(-n, n + 1)
    s = mu * (1 + 1j * u) ** 2
    ds = 2j * mu * (1 + 1j * u)
    logs = np.log(s)
    w = h * np.exp(s + (alpha - beta) * logs) * ds / (2j * math.pi)
    sig = np.exp(alpha * logs)
    w.flags.writeable = False
    sig.flags.writeable = False
    return w, sig


def _ml_contour(alpha, beta, z, mu_max):
    out = np.empty(z.shape, dtype=complex)
    if z.size == 0:
        return out
    mu, h, res = _contour_choice(alpha, z, mu_max)
    # integer code per (mu, h) pair: mu is mu_max * 2^i and h is 2^(k/4)
    code = np.rint(np.log2(mu / mu_max)).astype(np.int64) * 4096
    code += np.rint(4 * np.log2(h)).astype(np.int64)
    order = np.argsort(code, kind="stable")
    bounds = np.flatnonzero(np.diff(code[order])) + 1
    for sel in np.split(order, bounds):
        m, hh = float(mu[sel[0]]), float(h[sel[0]])
        w, sig = _contour_rule(alpha, beta, m, hh)
        zz = z[sel]
        vals = np.empty(zz.shape, dtype=complex)
        chunk = max(1, 2_000_000 // sig.size)
        for i in range(0, zz.size, chunk):
            blk = zz[i : i + chunk]
            vals[i : i + chunk] = (w / (sig - blk[:, None])).sum(axis=1)
        out[sel] = vals
    if res.any():
        out[res] += _residues(alpha, beta, z[res])
    return out


# --------------------------------------------------------------- dispatch


def _is_int(x):
    return float(x).is_integer()


def _route(alpha, beta, absz, cfg):
    """Integer route code per entry: 0 series, 1 expansion+residues, 2 contour."""
    route = np.zeros(absz.shape, dtype=np.int8)
    small = absz <= cfg.series_radius
    if alpha == 1.0 and _is_int(beta):
        route[~small] = 1
        return route
    if alpha >= 2:
        if not small.all():
            raise UnsupportedRegionError(
                f"alpha={alpha} >= 2 is only supported for |z| <= {cfg.series_radius}"
            )
        return route
    R = cfg.switch_radius if cfg.switch_radius is not None else asymptotic_radius(alpha, beta)[0]
    far = ~small & (absz >= R)
    route[far] = 1
    if alpha < 1:
        route[~small & ~far] = 2
    return route


_ROUTE_NAMES = {0: "series", 1: "asymptotic", 2: "contour"}


def ml_branch(alpha, beta, z, cfg=None):
    """Name of the route :func:`ml_eval` takes for each ``z``."""
    cfg = cfg or DEFAULT_CONFIG
    _check_alpha(alpha)
    z, scalar = _as_array(z)
    route = _route(alpha, beta, np.abs(z), cfg)
    names = np.vectorize(_ROUTE_NAMES.get, otypes=[object])(route)
    return names.item() if scalar else names


def _asym_terms(alpha, beta, cfg):
    if alpha == 1.0 and _is_int(beta):
        return max(1, int(beta) - 1)
    if cfg.asymptotic_terms is not None:
        return cfg.asymptotic_terms
    return asymptotic_radius(alpha, beta)[1]


def ml_eval(alpha, beta, z, cfg=None):
    """Evaluate E_{alpha,beta}(z) choosing the route from |z|.

    Scalars in, complex out; arrays in, arrays out. Raises
    :class:`UnsupportedRegionError` when the value is not representable or
    no route covers the input.
    """
    cfg = cfg or DEFAULT_CONFIG
    _check_alpha(alpha)
    z, scalar = _as_array(z)
    if not np.isfinite(z).all():
        raise UnsupportedRegionError("non-finite argument")
    route = _route(alpha, beta, np.abs(z), cfg)
    out = np.empty(z.shape, dtype=complex)
    sel = route == 0
    if sel.any():
        out[sel] = ml_series(alpha, beta, z[sel], tol=cfg.series_tol)
    sel = route == 1
    if sel.any():
        p = _asym_terms(alpha, beta, cfg)
        with np.errstate(over="ignore", invalid="ignore"):
            out[sel] = _asym_sum(alpha, beta, z[sel], p) + _residues(alpha, beta, z[sel])
    sel = route == 2
    if sel.any():
        with np.errstate(over="ignore", invalid="ignore"):
            out[sel] = _ml_contour(alpha, beta, z[sel], cfg.mu_max)
    bad = ~np.isfinite(out)
    if bad.any():
        i = np.flatnonzero(bad.ravel())[0]
        raise UnsupportedRegionError(
            f"E_{{{alpha},{beta}}}({z.ravel()[i]}) overflows double precision"
        )
    return _finish(out, scalar)


def ml_derivative_pair(alpha, lam, t, cfg=None):
    """Time derivatives of the two propagator symbols at ``t > 0``.

    Returns ``(lam t^(a-1) E_{a,a}(lam t^a), t^(a-2) E_{a,a-1}(lam t^a))``,
    the exact derivatives of ``E_{a,1}(lam t^a)`` and
    ``t^(a-1) E_{a,a}(lam t^a)``.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    t_arr, scalar = _as_array(t)
    t_arr = t_arr.real
    if np.any(t_arr <= 0):
        raise ValueError("t must be positive")
    z = lam * t_arr**alpha
    first = lam * t_arr ** (alpha - 1) * ml_eval(alpha, alpha, z, cfg)
    second = t_arr ** (alpha - 2) * ml_eval(alpha, alpha - 1, z, cfg)
    if scalar:
        return complex(first), complex(second)
    return first, second

