"""Problem presets, sweep orchestration and artifact writing."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import evolution_solver as es
from .frac_calculus import TimeGrid
from .spectral_operator import (
    SymbolSpec,
    build_diagonal,
    build_perturbed,
    load_potential_csv,
    relative_bound_probe,
)

SCHEMA_VERSION = 1
# size of initial data, used for R, the ball radius and blow-up thresholds
DATA_NORM = "graph"

PRESETS = {
    "linear-free": {"kind": "linear", "symbol": "schrodinger", "N": 64, "nonlinearity": "zero", "horizon": 1.0},
    "linear-kappa": {"kind": "local", "symbol": "schrodinger", "N": 16, "nonlinearity": "linear", "kappa": "-1.5j",
        "alpha": 0.9, "horizon": 0.5},
    "fnls": {"kind": "continuation", "symbol": "fractional_laplacian", "N": 8, "nonlinearity": "power", "p": 3.0,
        "lam": "1", "horizon": 2.0, "blowup_threshold": 1e3},
    "gkdv": {"kind": "continuation", "symbol": "airy", "N": 32, "nonlinearity": "gkdv", "m": 1, "horizon": 0.5},
    "mbo": {"kind": "continuation", "symbol": "benjamin_ono", "N": 32, "nonlinearity": "gkdv", "m": 2, "horizon": 0.5},
    "saturating": {"kind": "continuation", "symbol": "schrodinger", "N": 8, "nonlinearity": "saturating", "lam": "1",
        "alpha": 0.8, "horizon": 50.0},
    "scalar-cubic": {"kind": "continuation", "symbol": "scalar", "scalar_eigenvalue": 0.0, "nonlinearity": "power",
        "p": 3.0, "lam": "-1j", "alpha": 0.6, "x0": "large", "horizon": 10.0, "blowup_threshold": 1e3},
    "steady-state": {"kind": "steady_state", "symbol": "scalar", "scalar_eigenvalue": 1.0, "alpha": 0.7},
    "vanishing-operator": {"kind": "vanishing_operator", "symbol": "scalar", "scalar_eigenvalue": 1.0, "alpha": 0.7},
    "stiff-limit": {"kind": "stiff_limit", "symbol": "scalar", "scalar_eigenvalue": 1.0, "alpha": 0.7},
    "gamma-probe": {"kind": "probe", "symbol": "schrodinger", "N": 4096, "L": 16 * math.pi},
}


@dataclass
class RunConfig:
    """Resolved run description; every field is JSON-serialisable."""

    preset: str
    alpha: float = 0.5
    alphas: list | None = None
    amplitudes: list | None = None
    eps_list: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    horizons: list = field(default_factory=lambda: [5.0, 10.0, 20.0, 40.0])
    gammas: list = field(default_factory=lambda: [1e2, 3e2, 1e3, 3e3, 1e4])
    symbol: str = "schrodinger"
    beta: float = 1.0
    N: int = 64
    L: float = 2 * math.pi
    potential: str | None = None
    scalar_eigenvalue: float = 1.0
    nonlinearity: str = "zero"
    p: float = 3.0
    lam: str = "1"
    kappa: str = "0.3"
    m: int = 1
    x0: str = "small"
    horizon: float = 1.0
    Nt: int = 128
    picard_tol: float = 1e-10
    max_iter: int = 200
    blowup_threshold: float = 1e6
    seed: int = 0
    output: str = "runs"
    kind: str = "linear"

    @classmethod
    def from_preset(cls, name, **overrides):
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        vals = dict(PRESETS[name])
        vals.update({k: v for k, v in overrides.items() if v is not None})
        return cls(preset=name, **vals).validated()

    @classmethod
    def from_dict(cls, d):
        d = d.get("config", d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields {sorted(unknown)}")
        if "preset" not in d:
            raise ValueError("config needs a preset")
        base = dict(PRESETS.get(d["preset"], {}))
        base.update(d)
        base.pop("preset")
        return cls(preset=d["preset"], **base).validated()

    def validated(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        for name in ("alphas", "amplitudes"):
            v = getattr(self, name)
            if v is not None and len(v) == 0:
                raise ValueError(f"{name} must be nonempty")
        for name in ("eps_list", "horizons", "gammas"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be nonempty")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        return self

    def to_dict(self):
        return asdict(self)

    def sweep_points(self):
        alphas = self.alphas or [self.alpha]
        amps = self.amplitudes or [self.x0]
        return [{"alpha": float(a), "x0": x} for a, x in itertools.product(alphas, amps)]


def _complex(s):
    return complex(str(s).replace(" ", ""))


def build_operator(cfg: RunConfig):
    if cfg.symbol == "scalar":
        return es.scalar_operator(cfg.scalar_eigenvalue)
    sym = SymbolSpec(cfg.symbol, beta=cfg.beta)
    if cfg.potential:
        xs, q, V = load_potential_csv(cfg.potential)
        pts = cfg.L * np.arange(cfg.N) / cfg.N
        qi = np.interp(pts, xs, q, period=cfg.L)
        Vi = np.interp(pts, xs, V, period=cfg.L)
        return build_perturbed(sym, qi, Vi, cfg.N, cfg.L)
    return build_diagonal(sym, cfg.N, cfg.L)


def build_nonlinearity(cfg: RunConfig):
    name = cfg.nonlinearity
    if name == "zero":
        return es.zero_nonlinearity()
    if name == "linear":
        return es.linear_nonlinearity(_complex(cfg.kappa))
    if name == "power":
        return es.power_nonlinearity(_complex(cfg.lam), cfg.p)
    if name == "gkdv":
        return es.gkdv_nonlinearity(cfg.m)
    if name == "saturating":
        return es.saturating_nonlinearity(_complex(cfg.lam))
    raise ValueError(f"unknown nonlinearity {name!r}")


def initial_data(op, x0, seed=0):
    """``small``: Gaussian bump of height 0.5; ``large``: constant field of height 4;
    ``random``: seeded random field; a number scales the Gaussian bump (scalar: the value)."""
    if op.size == 1:
        amp = {"small": 0.5, "large": 4.0}.get(str(x0))
        return np.array([complex(amp if amp is not None else _complex(x0))])
    pts = op.points()
    if pts.ndim > 1:
        r2 = ((pts - op.L / 2) ** 2).sum(-1)
    else:
        r2 = (pts - op.L / 2) ** 2
    bump = np.exp(-r2)
    if x0 == "small":
        u = 0.5 * bump
    elif x0 == "large":
        u = np.full(op.size, 4.0)
    elif x0 == "random":
        rng = np.random.default_rng(seed)
        c = rng.standard_normal(op.size) + 1j * rng.standard_normal(op.size)
        return c / (1 + np.abs(op.eigenvalues))
    else:
        u = float(x0) * bump
    return op.to_coefficients(u)


def _grid(cfg, alpha, T):
    return TimeGrid.graded(T, cfg.Nt, max(1.0, 2.0 / alpha))


def run_point(cfg: RunConfig, point):
    """Execute one sweep point; returns ``(trajectory or None, record)``."""
    alpha = point["alpha"]
    op = build_operator(cfg)
    kind = cfg.kind
    rec = {"alpha": alpha, "x0": point["x0"]}
    if kind in ("steady_state", "vanishing_operator", "stiff_limit"):
        if kind == "steady_state":
            rows, dec = es.asymptotic_experiments(op, alpha, kind, x=np.zeros(op.size), F0=np.ones(op.size),
                                                  params=cfg.horizons, N=cfg.Nt * 2)
        elif kind == "vanishing_operator":
            rows, dec = es.asymptotic_experiments(op, alpha, kind, x=np.ones(op.size),
                                                  F=lambda t: np.full(op.size, math.cos(t)),
                                                  params=cfg.eps_list, N=cfg.Nt * 2)
        else:
            rows, dec = es.asymptotic_experiments(op, alpha, kind, x=np.zeros(op.size),
                                                  F=lambda t: np.full(op.size, math.sin(t)),
                                                  params=cfg.eps_list, N=cfg.Nt * 2)
        rec.update(status="completed", table=rows, decreasing=dec)
        return None, rec
    if kind == "probe":
        xs = cfg.L * np.arange(cfg.N) / cfg.N
        q = 400.0 * np.exp(-((xs - cfg.L / 2) ** 2))
        res = relative_bound_probe(SymbolSpec(cfg.symbol, beta=cfg.beta), q, None, cfg.gammas, cfg.L,
                                   seed=cfg.seed)
        rec.update(status="completed", table=res.table(), slope=res.slope, gamma_star=res.gamma_star)
        return None, rec
    F = build_nonlinearity(cfg)
    x = initial_data(op, point["x0"], cfg.seed)
    if kind == "linear":
        tr = es.solve_linear(op, alpha, x, None, _grid(cfg, alpha, cfg.horizon))
    elif kind == "local":
        tr = es.solve_local(op, alpha, x, F, grid=_grid(cfg, alpha, cfg.horizon), picard_tol=cfg.picard_tol,
                            max_iter=cfg.max_iter)
    elif kind == "continuation":
        tr = es.solve_with_continuation(op, alpha, x, F, cfg.horizon, blowup_threshold=cfg.blowup_threshold,
                                        picard_tol=cfg.picard_tol, max_iter=cfg.max_iter)
    else:
        raise ValueError(f"unknown experiment kind {kind!r}")
    regime = es.classify_global(F, alpha)[0] if F.name != "zero" else "global_regime"
    rec.update(
        status=tr.status,
        T_est=tr.T_est,
        t_end=float(tr.t[-1]),
        nodes=int(tr.t.size),
        max_da_norm=float(tr.da_norm.max()),
        regime=regime,
        message=tr.message,
        nonlinearity=F.describe(),
    )
    return tr, rec


def _atomic_write(path, text):
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dumps(obj):
    return json.dumps(es._jsonable(obj), indent=2, sort_keys=True) + "\n"


def _threads():
    try:
        return max(1, int(os.environ.get("FRACPROP_THREADS", "1")))
    except ValueError:
        return 1


def run(cfg: RunConfig):
    """Run every sweep point, write artifacts and return the summary records."""
    cfg.validated()
    root = os.path.join(cfg.output, cfg.preset)
    os.makedirs(root, exist_ok=True)
    if not os.access(root, os.W_OK):
        raise PermissionError(f"output directory {root} is not writable")
    points = cfg.sweep_points()

    def one(i_point):
        i, point = i_point
        try:
            tr, rec = run_point(cfg, point)
        except Exception as exc:
            raise RuntimeError(f"preset {cfg.preset}, sweep point {point}: {exc}") from exc
        pdir = os.path.join(root, f"point_{i:03d}")
        diag = {"schema_version": SCHEMA_VERSION, "config": cfg.to_dict(), "point": point, "result": rec,
                "data_norm": DATA_NORM}
        if tr is not None:
            _atomic_write(os.path.join(pdir, "trajectory.csv"), tr.csv_text())
            diag["diagnostics"] = tr.diagnostics()
        _atomic_write(os.path.join(pdir, "diagnostics.json"), _dumps(diag))
        return rec

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        records = list(pool.map(one, enumerate(points)))
    cols = ["point", "alpha", "x0", "status", "T_est", "t_end", "max_da_norm", "regime"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for i, r in enumerate(records):
        w.writerow([i] + [_cell(r.get(c)) for c in cols[1:]])
    _atomic_write(os.path.join(root, "summary.csv"), buf.getvalue())
    _atomic_write(
        os.path.join(root, "summary.json"),
        _dumps({"schema_version": SCHEMA_VERSION, "config": cfg.to_dict(), "points": records}),
    )
    return records


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)
