"""Run configuration, eps sweeps with rate fits, and the criterion registry."""
from __future__ import annotations

import csv
import json
import math
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate, stats

from .glue import build_approx, compare_to_true, linearized_spectrum, residual
from .painleve import (BoundaryLayer, _loglog_fit, cancellation, inner_expansion, left_tail_fit,
                       shoot_hastings_mcleod, solve_hastings_mcleod)
from .params import PhysParams, Regime, classify, regime_threshold, validate
from .profiles import TFProfile, tf_profile
from .radial import RadialState, default_grid, energy_decomposition, solve_coupled
from .rotation import (aux_functions, default_grid2d, detect_vortices, energy_split,
                       omega_threshold, radial_free_energy, radial_to_2d, solve_rotating_2d)

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


class UnknownCriterion(KeyError):
    pass


# -- configuration -------------------------------------------------------------------

@dataclass(frozen=True)
class ParamsBlock:
    g1: float = 1.0
    g2: float = 2.0
    g: float = 1.0
    eps: float = 0.05  # default for single-eps commands
    omega: float = 0.0

    def at(self, eps: float) -> PhysParams:
        return validate(self.g1, self.g2, self.g, eps, self.omega)


@dataclass(frozen=True)
class GridBlock:
    per_layer: float = 40.0  # nodes per eps^(2/3)
    reach: float = 10.0  # layer widths kept beyond the outer radius
    min_n: int = 2000


@dataclass(frozen=True)
class SweepBlock:
    eps: tuple = (0.1, 0.05, 0.025)
    # finer windows for rates that need smaller eps to leave the pre-asymptotic range
    interior_eps: tuple = (0.00125, 0.000625, 0.0003125)
    residual_eps: tuple = (0.002, 0.001, 0.0005)


@dataclass(frozen=True)
class RotationBlock:
    eps: float = 0.075
    cells: int = 256
    omega_fraction: float = 0.5
    alpha: float = 1300.0
    density_floor: float = 1e-4
    tol: float = 1e-8
    max_iter: int = 20000
    noise: float = 1e-3


@dataclass(frozen=True)
class OutputBlock:
    dir: str = "out"


@dataclass(frozen=True)
class RunConfig:
    params: ParamsBlock = ParamsBlock()
    annulus: ParamsBlock = ParamsBlock(1.0, 2.0, 1.35)
    grid: GridBlock = GridBlock()
    sweep: SweepBlock = SweepBlock()
    rotation: RotationBlock = RotationBlock()
    output: OutputBlock = OutputBlock()
    seed: int = 0

    def __post_init__(self):
        for name in ("eps", "interior_eps", "residual_eps"):
            check_eps_sequence(getattr(self.sweep, name), name)
        for blk in (self.params, self.annulus):
            validate(blk.g1, blk.g2, blk.g, blk.eps, blk.omega)


def check_eps_sequence(eps, name: str = "eps") -> None:
    eps = tuple(eps)
    if not eps:
        raise ConfigError(f"{name}: empty eps list")
    if any(not (e > 0 and math.isfinite(e)) for e in eps):
        raise ConfigError(f"{name}: eps values must be positive and finite")
    for a, b in zip(eps, eps[1:]):
        if not b < a:
            raise ConfigError(f"{name}: eps must be strictly decreasing")
        if not 0.4 <= b / a <= 0.6:
            raise ConfigError(f"{name}: successive ratio {b / a:.3g} outside [0.4, 0.6]")


def config_from_dict(d: dict) -> RunConfig:
    known = {"params", "annulus", "grid", "sweep", "rotation", "output", "seed"}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown config sections: {sorted(extra)}")
    kw = {}
    for key, cls in (("params", ParamsBlock), ("annulus", ParamsBlock), ("grid", GridBlock),
                     ("sweep", SweepBlock), ("rotation", RotationBlock), ("output", OutputBlock)):
        if key in d:
            blk = dict(d[key])
            for k, v in blk.items():
                if isinstance(v, list):
                    blk[k] = tuple(v)
            try:
                kw[key] = cls(**blk)
            except TypeError as exc:
                raise ConfigError(f"[{key}]: {exc}") from exc
    if "seed" in d:
        kw["seed"] = int(d["seed"])
    return RunConfig(**kw)


def load_config(path) -> RunConfig:
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    with open(path, "rb") as fh:
        return config_from_dict(tomllib.load(fh))


# -- fits ------------------------------------------------------------------------------

@dataclass
class SlopeFit:
    slope: float
    half_width: float  # 95% interval half-width; nan with two points
    residual: float  # rms of the log-log residuals
    eps: list
    values: list


def fit_slope(eps, values) -> SlopeFit:
    """OLS slope of log(values) against log(eps)."""
    x = np.log(np.asarray(eps, float))
    y = np.log(np.asarray(values, float))
    if len(x) < 2 or not np.all(np.isfinite(y)):
        return SlopeFit(math.nan, math.nan, math.nan, list(eps), list(values))
    res = stats.linregress(x, y)
    dof = len(x) - 2
    hw = float(stats.t.ppf(0.975, dof) * res.stderr) if dof > 0 else math.nan
    rms = float(np.sqrt(np.mean((y - res.intercept - res.slope * x) ** 2)))
    return SlopeFit(float(res.slope), hw, rms, [float(e) for e in eps], [float(v) for v in values])


# -- cached solves ------------------------------------------------------------------

@lru_cache(maxsize=32)
def _state(g1, g2, g, eps, grid: GridBlock, init="tf") -> RadialState:
    p = validate(g1, g2, g, eps)
    return solve_coupled(p, default_grid(p, per_layer=grid.per_layer, reach=grid.reach,
                                         min_n=grid.min_n), init=init)


def solve_state(blk: ParamsBlock, eps: float, grid: GridBlock = GridBlock(), init="tf"):
    return _state(blk.g1, blk.g2, blk.g, float(eps), grid, init)


@lru_cache(maxsize=32)
def _approx(g1, g2, g, eps, grid: GridBlock):
    return build_approx(_state(g1, g2, g, eps, grid))


def solve_approx(blk: ParamsBlock, eps: float, grid: GridBlock = GridBlock()):
    return _approx(blk.g1, blk.g2, blk.g, float(eps), grid)


@lru_cache(maxsize=1)
def painleve_table():
    return solve_hastings_mcleod()


# -- per-eps metrics ----------------------------------------------------------------

def interior_delta(prof: TFProfile) -> float:
    """Margin kept away from every support edge and interface: 0.9 of the largest
    admissible value (a quarter of the narrowest piece)."""
    if prof.regime is Regime.DISK_ANNULUS:
        widths = (prof.r2_inner, prof.r1 - prof.r2_inner, prof.r2 - prof.r1)
    else:
        widths = (prof.r1, prof.r2 - prof.r1)
    return 0.9 * min(widths) / 4.0


def interior_masks(prof: TFProfile, r, delta: float):
    """Per-component interior regions away from edges and interfaces."""
    if prof.regime is Regime.DISK_ANNULUS:
        lo, mid, hi = prof.r2_inner, prof.r1, prof.r2
        m1 = (r <= lo - delta) | ((r >= lo + delta) & (r <= mid - delta))
        m2 = ((r >= lo + delta) & (r <= mid - delta)) | ((r >= mid + delta) & (r <= hi - delta))
    else:
        m1 = r <= prof.r1 - delta
        m2 = (r <= prof.r1 - delta) | ((r >= prof.r1 + delta) & (r <= prof.r2 - delta))
    return m1, m2


def sup_errors(state: RadialState, prof: TFProfile, delta: float) -> dict:
    r = state.r
    m = interior_masks(prof, r, delta)
    out = {}
    band = (r >= prof.r2_inner) & (r <= prof.r2)
    for i in (1, 2):
        err = np.abs(state.eta(i) - np.sqrt(prof.a(i, r)))
        out[f"sup_global{i}"] = float(err.max())
        out[f"sup_interior{i}"] = float(err[m[i - 1]].max())
        out[f"sup_band{i}"] = float(err[band].max()) if prof.regime is Regime.DISK_ANNULUS else math.nan
    return out


def tail_envelope(state: RadialState, fit=(0.5, 3.0), env=(0.0, 3.0)) -> dict:
    """(c, C) with eta_i <= C eps^(1/3) exp(-c t), t = (r - R_i,eps)/eps^(2/3).

    c comes from a log-linear fit over `fit`; C is then the smallest constant
    making the bound hold over `env`."""
    eps = state.params.eps
    ep = state.eps_profile
    r = state.r
    out = {}
    for i, R in ((1, ep.r1), (2, ep.r2)):
        t = (r - R) / eps ** (2.0 / 3.0)
        y = state.eta(i) / eps ** (1.0 / 3.0)
        mf = (t >= fit[0]) & (t <= fit[1])
        me = (t >= env[0]) & (t <= env[1])
        slope = np.polyfit(t[mf], np.log(y[mf]), 1)[0]
        c = -float(slope)
        out[f"tail_c{i}"] = c
        out[f"tail_C{i}"] = float(np.max(y[me] * np.exp(c * t[me])))
    return out


def aux_errors(state: RadialState, prof: TFProfile) -> dict:
    ax = aux_functions(state, prof)
    eps = state.params.eps
    r = ax.r
    out = {}
    for i in (1, 2):
        F, F0 = ax.F(i), ax.F0(i)
        # the limit is infinite where a_i vanishes inside the support (annulus hole)
        v = ax.valid(i) & np.isfinite(F0)
        out[f"F_err{i}"] = float(np.max(np.abs(F - F0)[v]))
        out[f"F_outer{i}"] = float(np.max(F[v & (r >= prof.support(i))]) / eps ** (2.0 / 3.0))
        xi0 = ax.xi1[0] if i == 1 else ax.xi2[0]
        out[f"xi0_err{i}"] = float(abs(xi0 - 1.0 / (2.0 * math.pi)))
    return out


def layer_error(state: RadialState, width: float = 3.0) -> float:
    """Sup of |eta_1 - leading inner profile| within `width` layer widths of R_1,eps."""
    p = state.params
    ep = state.eps_profile
    lay = BoundaryLayer(ep.beta1, ep.r1, p.eps, p.g1 * p.gammas.gamma)
    r = state.r
    m = np.abs(r - ep.r1) <= width * p.eps ** (2.0 / 3.0)
    return float(np.max(np.abs(state.eta1[m] - inner_expansion(lay, painleve_table(), r[m]))))


RECORD_COLUMNS = (
    "eps", "ok", "n", "lam_err1", "lam_err2", "sup_global1", "sup_global2",
    "sup_interior1", "sup_interior2", "sup_band1", "sup_band2",
    "tail_c1", "tail_C1", "tail_c2", "tail_C2",
    "E1", "E1_in", "E1_out", "E2_in", "E2_out", "triple", "eig_weighted", "eig_plain",
    "F_err1", "F_err2", "F_outer1", "F_outer2", "xi0_err1", "xi0_err2", "layer_err",
    "sym_diff", "mass_err", "error",
)


def eps_record(blk: ParamsBlock, eps: float, grid: GridBlock = GridBlock(),
               spectrum: bool = True) -> dict:
    """Full per-eps pipeline: limit profile, coupled state, glued pair, auxiliary functions."""
    rec = {k: math.nan for k in RECORD_COLUMNS}
    rec.update(eps=float(eps), ok=False, error="")
    p = blk.at(eps)
    prof = tf_profile(p)
    st = solve_state(blk, eps, grid)
    rec["n"] = st.grid.n
    rec["lam_err1"] = abs(st.lam1 - prof.lam1)
    rec["lam_err2"] = abs(st.lam2 - prof.lam2)
    rec["mass_err"] = float(max(abs(m - 1.0) for m in st.masses()))
    rec["sym_diff"] = float(np.max(np.abs(st.eta1 - st.eta2)))
    rec.update(sup_errors(st, prof, interior_delta(prof)))
    rec.update(tail_envelope(st))
    rec.update(aux_errors(st, prof))
    if prof.regime is not Regime.SYMMETRIC:
        rec["layer_err"] = layer_error(st)
        ap = solve_approx(blk, eps, grid)
        rec.update(residual(ap).norms)
        rec["triple"] = compare_to_true(ap, st)["triple"]
        if spectrum:
            spec = linearized_spectrum(ap, k=2)
            rec["eig_weighted"] = float(spec["weighted"][0])
            rec["eig_plain"] = float(spec["plain"][0])
    rec["ok"] = True
    return rec


def _isolated_record(args) -> dict:
    blk, eps, grid = args
    try:
        return eps_record(blk, eps, grid)
    except Exception as exc:  # one failing eps must not take the sweep down
        rec = {k: math.nan for k in RECORD_COLUMNS}
        rec.update(eps=float(eps), ok=False, error=f"{type(exc).__name__}: {exc}")
        return rec


# -- sweep report -------------------------------------------------------------------

@dataclass
class Check:
    name: str
    observed: object
    target: str
    passed: bool


@dataclass
class SweepReport:
    params: dict
    regime: str
    eps_list: list
    records: list
    slopes: dict
    checks: list = field(default_factory=list)
    symmetric_checks: bool = False
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        return json.dumps(_clean(asdict(self)), sort_keys=True, indent=2)


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def _band(x, centre, tol) -> bool:
    return bool(math.isfinite(x) and abs(x - centre) <= tol)


def _stable(vals, ratio: float = 2.0) -> bool:
    vals = np.asarray(vals, float)
    return bool(np.all(np.isfinite(vals)) and np.all(vals > 0) and vals.max() / vals.min() <= ratio)


SLOPE_TARGETS = {
    "lam_err1": (2.0, 0.3), "lam_err2": (2.0, 0.3),
    "sup_global1": (1 / 3, 0.15), "sup_global2": (1 / 3, 0.15),
    "sup_interior1": (2.0, 0.4), "sup_interior2": (2.0, 0.4),
    "E2_in": (5 / 3, 0.2), "E2_out": (2.0, 0.2),
    "triple": (5 / 3, 0.25),
    "F_err1": (1 / 3, 0.15), "F_err2": (1 / 3, 0.15),
    "sup_band1": (1 / 3, 0.15), "sup_band2": (1 / 3, 0.15),
}


def run_sweep(config: RunConfig, blk: ParamsBlock | None = None, eps_list=None,
              threads: int = 1, write: bool = True) -> SweepReport:
    """Per-eps pipeline over the sweep, then rate fits and checks on the sweep points."""
    blk = config.params if blk is None else blk
    eps_list = tuple(config.sweep.eps if eps_list is None else eps_list)
    check_eps_sequence(eps_list)
    regime = classify(blk.at(eps_list[0]))
    jobs = [(blk, e, config.grid) for e in eps_list]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_isolated_record, jobs))
    else:
        records = [_isolated_record(j) for j in jobs]
    good = [r for r in records if r["ok"]]
    eps_ok = [r["eps"] for r in good]
    slopes = {}
    checks = []
    for key, (centre, tol) in SLOPE_TARGETS.items():
        vals = [r[key] for r in good]
        if not vals or not np.all(np.isfinite(vals)):
            continue
        fit = fit_slope(eps_ok, vals)
        slopes[key] = asdict(fit)
        checks.append(Check(f"slope {key}", fit.slope, f"{centre:.4g} +/- {tol}", _band(fit.slope, centre, tol)))
    layer = [r["layer_err"] for r in good]
    if layer and np.all(np.isfinite(layer)):
        fit = fit_slope(eps_ok, layer)
        slopes["layer_err"] = asdict(fit)
        checks.append(Check("slope layer_err", fit.slope, ">= 2/3",
                            math.isfinite(fit.slope) and fit.slope >= 2 / 3))
    if good and regime is not Regime.SYMMETRIC:
        e1 = [r["E1"] for r in good]
        checks.append(Check("E1 max", max(e1), "< 1e-8", max(e1) < 1e-8))
        eig = [r["eig_weighted"] for r in good]
        if np.all(np.isfinite(eig)):
            checks.append(Check("weighted eigenvalue positive", min(eig), "> 0", min(eig) > 0))
            change = abs(eig[-1] - eig[0]) / abs(eig[0])
            checks.append(Check("weighted eigenvalue change", change, "< 0.5", change < 0.5))
    for key in ("tail_c1", "tail_C1", "tail_c2", "tail_C2", "F_outer1", "F_outer2"):
        vals = [r[key] for r in good]
        if vals:
            checks.append(Check(f"{key} stable", vals, "max/min <= 2", _stable(vals)))
    for key in ("xi0_err1", "xi0_err2"):
        vals = [r[key] for r in good]
        if vals:
            checks.append(Check(key, max(vals), "< 1e-9", max(vals) < 1e-9))
    sym = regime is Regime.SYMMETRIC
    if sym:
        d = [r["sym_diff"] for r in good]
        checks.append(Check("eta1 == eta2", max(d), "< 1e-8", max(d) < 1e-8))
    failed = [r["eps"] for r in records if not r["ok"]]
    checks.append(Check("all eps succeeded", failed, "[]", not failed))
    rep = SweepReport(dict(g1=blk.g1, g2=blk.g2, g=blk.g), regime.value, list(eps_list),
                      records, slopes, checks, sym)
    if write:
        write_report(rep, Path(config.output.dir))
    return rep


def write_report(rep: SweepReport, out: Path, stem: str = "sweep") -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.json").write_text(rep.to_json() + "\n")
    with open(out / f"{stem}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_COLUMNS)
        for r in rep.records:
            w.writerow([_fmt(r[k]) for k in RECORD_COLUMNS])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


# -- criteria -----------------------------------------------------------------------

@dataclass
class CriterionResult:
    id: str
    anchor: str
    checks: list
    runtime: float = 0.0
    evidence: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self):
        yield f"[{'PASS' if self.passed else 'FAIL'}] {self.id}: {self.anchor} ({self.runtime:.1f} s)"
        for c in self.checks:
            yield f"    {'ok  ' if c.passed else 'FAIL'} {c.name}: observed {_short(c.observed)}, target {c.target}"
        for n in self.notes:
            yield f"    note: {n}"


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


CRITERIA = {}


def criterion(cid: str, anchor: str):
    def deco(fn):
        CRITERIA[cid] = (anchor, fn)
        return fn
    return deco


def _slope_check(name, fit: SlopeFit, centre, tol):
    return Check(name, fit.slope, f"{centre:.4g} +/- {tol}", _band(fit.slope, centre, tol))


def random_params(rng, n: int = 24):
    """Valid (g1, g2, g) triples, half in each non-symmetric regime."""
    out = []
    for k in range(n):
        g1 = rng.uniform(0.5, 2.0)
        g2 = g1 * rng.uniform(1.1, 3.0)
        t = regime_threshold(g1, g2)
        if k % 2 == 0:
            g = t * rng.uniform(0.05, 0.95)
        else:
            g = t + (math.sqrt(g1 * g2) - t) * rng.uniform(0.05, 0.95)
        out.append((g1, g2, g))
    return out


def _quad_mass(prof: TFProfile, i: int) -> float:
    """Mass of a_i by adaptive quadrature, independent of the closed forms."""
    pts = sorted({prof.r2_inner, prof.r1, prof.r2} - {0.0})
    hi = prof.support(i)
    pts = [x for x in pts if x < hi]
    with warnings.catch_warnings():
        # the requested tolerance sits at the rounding floor; quad says so harmlessly
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(lambda s: 2 * math.pi * s * float(prof.a(i, s)), 0.0, hi,
                                points=pts or None, epsabs=1e-14, epsrel=1e-14, limit=200)
    return val


@criterion("tf-normalization", "limit densities carry unit mass in both regimes")
def crit_tf_normalization(cfg: RunConfig) -> CriterionResult:
    rng = np.random.default_rng(cfg.seed)
    t0 = time.perf_counter()
    worst_exact = worst_quad = 0.0
    regimes = set()
    sets = random_params(rng)
    for g1, g2, g in sets:
        prof = tf_profile(validate(g1, g2, g, 0.05))
        regimes.add(prof.regime.value)
        for i in (1, 2):
            worst_exact = max(worst_exact, abs(prof.masses[i - 1] - 1.0))
    elapsed = time.perf_counter() - t0
    for g1, g2, g in sets:
        prof = tf_profile(validate(g1, g2, g, 0.05))
        for i in (1, 2):
            worst_quad = max(worst_quad, abs(_quad_mass(prof, i) - 1.0))
    checks = [
        Check("parameter sets", len(sets), ">= 20", len(sets) >= 20),
        Check("regimes covered", sorted(regimes), "both", len(regimes) == 2),
        Check("max |mass - 1| (closed form)", worst_exact, "< 1e-10", worst_exact < 1e-10),
        Check("max |mass - 1| (quadrature)", worst_quad, "< 1e-10", worst_quad < 1e-10),
        Check("runtime [s]", elapsed, "< 1", elapsed < 1.0),
    ]
    return CriterionResult("tf-normalization", CRITERIA["tf-normalization"][0], checks,
                           evidence=dict(sets=sets))


@criterion("painleve-residual", "Hastings-McLeod profile by collocation against a shooting oracle")
def crit_painleve(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    tab = solve_hastings_mcleod()
    shoot, bracket = shoot_hastings_mcleod()
    elapsed = time.perf_counter() - t0
    v0 = tab.value_at(0.0)
    res = float(np.max(np.abs(tab.residual())))
    left = left_tail_fit(tab)
    m = tab.s <= -tab.L / 2
    canc = _loglog_fit(-tab.s[m], np.abs(cancellation(tab)[m]))
    checks = [
        Check("|V(0) collocation - V(0) shooting|", abs(v0 - shoot), "< 1e-6", abs(v0 - shoot) < 1e-6),
        Check("max residual", res, "< 1e-8", res < 1e-8),
        Check("left-tail exponent of |V - sqrt(-s)|", left.exponent, "<= -2", left.exponent <= -2),
        Check("exponent of V V'' + V'^2", canc.exponent, "-4 +/- 0.5", _band(canc.exponent, -4.0, 0.5)),
        Check("runtime [s]", elapsed, "< 10", elapsed < 10.0),
    ]
    return CriterionResult("painleve-residual", CRITERIA["painleve-residual"][0], checks,
                           evidence=dict(v0=v0, shooting=shoot, bracket=bracket))


@criterion("uniqueness", "positive ground state is independent of the starting guess")
def crit_uniqueness(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    blk, eps, grid = cfg.params, 0.05, cfg.grid
    a = solve_state(blk, eps, grid, "tf")
    b = solve_state(blk, eps, grid, "gaussian")
    diff = float(max(np.abs(a.eta1 - b.eta1).max(), np.abs(a.eta2 - b.eta2).max()))
    sym_blk = ParamsBlock(1.5, 1.5, 1.0)
    s = solve_state(sym_blk, eps, grid, "gaussian")
    sym = float(np.abs(s.eta1 - s.eta2).max())
    elapsed = time.perf_counter() - t0
    checks = [
        Check("sup |eta(tf start) - eta(gaussian start)|", diff, "< 1e-7", diff < 1e-7),
        Check("symmetric couplings: max |eta1 - eta2|", sym, "< 1e-8", sym < 1e-8),
        Check("runtime [s]", elapsed, "< 120", elapsed < 120.0),
    ]
    return CriterionResult("uniqueness", CRITERIA["uniqueness"][0], checks)


@criterion("lagrange-rate", "chemical potentials approach their limits at rate eps^2")
def crit_lagrange(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    eps = cfg.sweep.eps
    sts = [solve_state(cfg.params, e, cfg.grid) for e in eps]
    prof = tf_profile(cfg.params.at(eps[0]))
    f1 = fit_slope(eps, [abs(s.lam1 - prof.lam1) for s in sts])
    f2 = fit_slope(eps, [abs(s.lam2 - prof.lam2) for s in sts])
    elapsed = time.perf_counter() - t0
    checks = [_slope_check("slope |lam1 - lam1,0|", f1, 2.0, 0.3),
              _slope_check("slope |lam2 - lam2,0|", f2, 2.0, 0.3),
              Check("runtime [s]", elapsed, "< 600", elapsed < 600.0)]
    return CriterionResult("lagrange-rate", CRITERIA["lagrange-rate"][0], checks,
                           evidence=dict(fit1=asdict(f1), fit2=asdict(f2)))


@criterion("supnorm-rates", "sup-norm distance to the limit profile: globally, in the interior, and in the tails")
def crit_supnorm(cfg: RunConfig) -> CriterionResult:
    eps = cfg.sweep.eps
    prof = tf_profile(cfg.params.at(eps[0]))
    delta = interior_delta(prof)
    glob = [sup_errors(solve_state(cfg.params, e, cfg.grid), prof, delta) for e in eps]
    tails = [tail_envelope(solve_state(cfg.params, e, cfg.grid)) for e in eps]
    fine = cfg.sweep.interior_eps
    inner = [sup_errors(solve_state(cfg.params, e, cfg.grid), prof, delta) for e in fine]
    checks = []
    ev = dict(delta=delta)
    for i in (1, 2):
        fg = fit_slope(eps, [g[f"sup_global{i}"] for g in glob])
        fi = fit_slope(fine, [g[f"sup_interior{i}"] for g in inner])
        checks.append(_slope_check(f"global slope, component {i}", fg, 1 / 3, 0.15))
        checks.append(_slope_check(f"interior slope, component {i}", fi, 2.0, 0.4))
        ev[f"global{i}"], ev[f"interior{i}"] = asdict(fg), asdict(fi)
        for key in (f"tail_c{i}", f"tail_C{i}"):
            vals = [t[key] for t in tails]
            checks.append(Check(f"{key} across eps", vals, "max/min <= 2", _stable(vals)))
    return CriterionResult("supnorm-rates", CRITERIA["supnorm-rates"][0], checks, evidence=ev,
                           notes=[f"global and tail fits on eps = {list(eps)}",
                                  f"interior fit on eps = {list(fine)}, delta = {delta:.4g}"])


@criterion("residual-rates", "remainder of the glued approximation inside and outside the interface")
def crit_residual(cfg: RunConfig) -> CriterionResult:
    eps = cfg.sweep.residual_eps
    norms = [residual(solve_approx(cfg.params, e, cfg.grid)).norms for e in eps]
    fin = fit_slope(eps, [n["E2_in"] for n in norms])
    fout = fit_slope(eps, [n["E2_out"] for n in norms])
    e1 = [n["E1"] for n in norms]
    checks = [_slope_check("slope ||E2|| inside", fin, 5 / 3, 0.2),
              _slope_check("slope ||E2|| outside", fout, 2.0, 0.2),
              Check("max ||E1||", max(e1), "< 1e-8", max(e1) < 1e-8)]
    return CriterionResult("residual-rates", CRITERIA["residual-rates"][0], checks,
                           evidence=dict(inside=asdict(fin), outside=asdict(fout), E1=e1),
                           notes=[f"fitted on eps = {list(eps)}"])


@criterion("approx-distance", "triple-norm distance between true and glued solutions")
def crit_approx(cfg: RunConfig) -> CriterionResult:
    eps = cfg.sweep.eps
    tri = [compare_to_true(solve_approx(cfg.params, e, cfg.grid),
                           solve_state(cfg.params, e, cfg.grid))["triple"] for e in eps]
    f = fit_slope(eps, tri)
    return CriterionResult("approx-distance", CRITERIA["approx-distance"][0],
                           [_slope_check("triple-norm slope", f, 5 / 3, 0.25)], evidence=asdict(f))


@criterion("linearized-positivity", "linearised operator at the glued pair is uniformly positive")
def crit_positivity(cfg: RunConfig) -> CriterionResult:
    eps = cfg.sweep.eps
    spec = [linearized_spectrum(solve_approx(cfg.params, e, cfg.grid), k=2) for e in eps]
    w = [float(s["weighted"][0]) for s in spec]
    change = abs(w[-1] - w[0]) / abs(w[0])
    asym = max(s["asymmetry"] for s in spec)
    checks = [Check("smallest weighted eigenvalues", w, "> 0", min(w) > 0),
              Check("relative change over the sweep", change, "< 0.5", change < 0.5),
              Check("matrix asymmetry", asym, "< 1e-10", asym < 1e-10)]
    return CriterionResult("linearized-positivity", CRITERIA["linearized-positivity"][0], checks,
                           evidence=dict(plain=[float(s["plain"][0]) for s in spec]))


@criterion("inner-layer", "Painleve profile describes the inner edge layer")
def crit_inner_layer(cfg: RunConfig) -> CriterionResult:
    eps = cfg.sweep.eps
    errs = [layer_error(solve_state(cfg.params, e, cfg.grid)) for e in eps]
    f = fit_slope(eps, errs)
    ok = math.isfinite(f.slope) and f.slope >= 2 / 3
    return CriterionResult("inner-layer", CRITERIA["inner-layer"][0],
                           [Check("slope of layer mismatch", f.slope, ">= 2/3", ok)], evidence=asdict(f))


@criterion("aux-functions", "auxiliary functions F = xi / eta^2 and their limits")
def crit_aux(cfg: RunConfig) -> CriterionResult:
    eps = cfg.sweep.eps
    prof = tf_profile(cfg.params.at(eps[0]))
    rows = [aux_errors(solve_state(cfg.params, e, cfg.grid), prof) for e in eps]
    checks = []
    ev = {}
    for i in (1, 2):
        f = fit_slope(eps, [r[f"F_err{i}"] for r in rows])
        checks.append(_slope_check(f"slope sup |F{i} - F{i},0|", f, 1 / 3, 0.15))
        ev[f"F{i}"] = asdict(f)
        outer = [r[f"F_outer{i}"] for r in rows]
        checks.append(Check(f"outer bound constant C{i} = max F{i} / eps^(2/3)", outer,
                            "max/min <= 2", _stable(outer)))
        xi = max(r[f"xi0_err{i}"] for r in rows)
        checks.append(Check(f"|xi{i}(0) - 1/(2 pi)|", xi, "< 1e-9", xi < 1e-9))
    return CriterionResult("aux-functions", CRITERIA["aux-functions"][0], checks, evidence=ev)


def _smooth_random_phase(rng, X, Y, scale: float, amp: float = 1.0, modes: int = 4):
    """Complex multiplier 1 + O(amp) with smooth modulus and phase variations."""
    ph = np.zeros_like(X)
    mod = np.ones_like(X)
    for _ in range(modes):
        k = rng.normal(size=2) * 2.0 / scale
        ph += amp * rng.uniform(-1, 1) * np.cos(k[0] * X + k[1] * Y + rng.uniform(0, 2 * math.pi))
        k = rng.normal(size=2) * 2.0 / scale
        mod += 0.2 * amp * rng.uniform(-1, 1) * np.sin(k[0] * X + k[1] * Y + rng.uniform(0, 2 * math.pi))
    return mod * np.exp(1j * ph)


@criterion("energy-identities", "energy rewriting, splitting, and non-negativity of the remainder")
def crit_energy(cfg: RunConfig) -> CriterionResult:
    rng = np.random.default_rng(cfg.seed)
    eps = 0.1
    st = solve_state(cfg.params, eps, cfg.grid)
    dec = energy_decomposition(st)
    rel = dec["identity_gap"] / abs(dec["energy"])
    # radial random multipliers
    r = st.r
    f0_radial = []
    for k in range(8):
        amp = 1.0 if k < 4 else 1e-3
        v1, v2 = (_smooth_random_phase(rng, r, 0 * r, 0.5, amp) for _ in range(2))
        v1 = v1 / st.grid.norm(np.abs(st.eta1 * v1))
        v2 = v2 / st.grid.norm(np.abs(st.eta2 * v2))
        f0_radial.append(radial_free_energy(st, v1, v2))
    # 2D: minimiser at zero rotation, then random fields u = eta v
    p = cfg.params.at(eps)
    grid = default_grid2d(p, cells=64)
    base = solve_rotating_2d(p, grid, 0.0, st, noise=0.0, tol=1e-10)
    eta = (np.abs(base.u1), np.abs(base.u2))
    X, Y = grid.mesh()
    gaps, f0_2d = [], []
    for k in range(8):
        # the identity holds for unit-mass fields, so normalise u = eta v
        amp = 1.0 if k < 4 else 1e-3
        u = tuple(e * _smooth_random_phase(rng, X, Y, 0.5, amp) for e in eta)
        u = tuple(x / math.sqrt(grid.mass(x)) for x in u)
        omega = 0.0 if k % 2 else float(rng.uniform(0.5, 3.0))
        br = energy_split(p, omega, eta, u, grid)
        gaps.append(br.identity_gap)
        if omega == 0.0:
            f0_2d.append(br.F_omega)
    f0 = min(f0_radial + f0_2d)
    checks = [Check("E = modified + constant, relative gap", rel, "< 1e-9", rel < 1e-9),
              Check("splitting identity, max relative gap", max(gaps), "< 1e-6", max(gaps) < 1e-6),
              Check("min F0 over random pairs", f0, ">= -1e-9", f0 >= -1e-9)]
    return CriterionResult("energy-identities", CRITERIA["energy-identities"][0], checks,
                           evidence=dict(f0_radial=f0_radial, f0_2d=f0_2d, gaps=gaps))


def rotation_omega(cfg: RunConfig, p: PhysParams):
    """Omega for the vortex-free run: fraction of the threshold, or of its leading
    term omega0 |log eps| when the threshold is not positive at this eps."""
    th = omega_threshold(p, alpha=cfg.rotation.alpha, strict=False)
    base = th.omega_star if th.omega_star > 0 else th.leading
    return cfg.rotation.omega_fraction * base, th


@criterion("vortex-free", "2D minimiser below the critical rotation carries no vortices")
def crit_vortex_free(cfg: RunConfig) -> CriterionResult:
    rc = cfg.rotation
    t0 = time.perf_counter()
    p = cfg.params.at(rc.eps)
    st = solve_state(cfg.params, rc.eps, cfg.grid)
    grid = default_grid2d(p, cells=rc.cells)
    omega, th = rotation_omega(cfg, p)
    still = solve_rotating_2d(p, grid, 0.0, st, seed=cfg.seed, noise=0.0, tol=rc.tol, max_iter=rc.max_iter)
    ref = radial_to_2d(st, grid)
    dist = float(max(np.abs(np.abs(still.u1) - ref[0]).max(), np.abs(np.abs(still.u2) - ref[1]).max()))
    fld = solve_rotating_2d(p, grid, omega, st, seed=cfg.seed, noise=rc.noise, tol=rc.tol,
                            max_iter=rc.max_iter)
    vort = detect_vortices(fld, rc.density_floor)
    elapsed = time.perf_counter() - t0
    checks = [Check("rotating run converged", fld.residual, f"< {rc.tol}", fld.converged),
              Check("windings above density floor", vort, "[]", not vort),
              Check("sup |Omega=0 run - radial state|", dist, f"<= 5h = {5 * grid.h:.4g}", dist <= 5 * grid.h),
              Check("runtime [s]", elapsed, "< 1800", elapsed < 1800.0)]
    return CriterionResult("vortex-free", CRITERIA["vortex-free"][0], checks,
                           evidence=dict(omega=omega, omega_star=th.omega_star, leading=th.leading,
                                         iterations=fld.iterations, vortices=vort),
                           notes=[_omega_note(cfg, th, omega)])


def _omega_note(cfg: RunConfig, th, omega: float) -> str:
    rc = cfg.rotation
    if th.omega_star > 0:
        return f"Omega = {rc.omega_fraction} * Omega* = {omega:.4g}"
    return (f"Omega* = {th.omega_star:.4g} <= 0 at eps = {rc.eps} with alpha = {rc.alpha:g}; "
            f"used {rc.omega_fraction} * omega0 |log eps| = {omega:.4g}")


def radii_residuals(prof: TFProfile) -> dict:
    """Closed-form radius identities and continuity of the piecewise densities."""
    p = prof.params
    gm = p.gammas
    lo, mid, hi = prof.r2_inner, prof.r1, prof.r2
    return {
        "R1^2 identity": abs(mid ** 2 - (prof.lam1 - p.g / p.g2 * prof.lam2) / gm.gamma2),
        "R2-^2 identity": abs(lo ** 2 - (prof.lam2 - p.g / p.g1 * prof.lam1) / gm.gamma1),
        "R2+^2 identity": abs(hi ** 2 - prof.lam2),
        "a1(R1)": abs(float(prof.a(1, mid))),
        "a2(R2-)": abs(float(prof.inner_quadratic(2, lo))),
        "a2(R2+)": abs(float(prof.a(2, hi))),
        "a1 continuity at R2-": abs((prof.lam1 - lo ** 2) / p.g1 - float(prof.inner_quadratic(1, lo))),
        "a2 continuity at R1": abs((prof.lam2 - mid ** 2) / p.g2 - float(prof.inner_quadratic(2, mid))),
    }


@criterion("annulus", "disk-annulus regime: profile, rates, and a populated central hole")
def crit_annulus(cfg: RunConfig) -> CriterionResult:
    blk = cfg.annulus
    eps = cfg.sweep.eps
    prof = tf_profile(blk.at(eps[0]))
    checks = [Check("regime", prof.regime.value, "disk-annulus", prof.regime is Regime.DISK_ANNULUS)]
    masses = [abs(_quad_mass(prof, i) - 1.0) for i in (1, 2)] + [abs(m - 1.0) for m in prof.masses]
    checks.append(Check("max |mass - 1|", max(masses), "< 1e-10", max(masses) < 1e-10))
    rr = radii_residuals(prof)
    worst = max(rr.values())
    checks.append(Check("max radius-identity residual", worst, "< 1e-10", worst < 1e-10))
    delta = interior_delta(prof)
    rows = [sup_errors(solve_state(blk, e, cfg.grid), prof, delta) for e in eps]
    ev = dict(radii=rr)
    for i in (1, 2):
        f = fit_slope(eps, [r[f"sup_band{i}"] for r in rows])
        checks.append(_slope_check(f"band sup slope, component {i}", f, 1 / 3, 0.15))
        ev[f"band{i}"] = asdict(f)
    st = solve_state(blk, 0.05, cfg.grid)
    hole = st.r < prof.r2_inner
    mn = float(st.eta2[hole].min())
    checks.append(Check("min eta2 in the central hole at eps = 0.05", mn, "> 0", mn > 0))
    return CriterionResult("annulus", CRITERIA["annulus"][0], checks, evidence=ev)


def reproduce(criterion_id: str, config: RunConfig | None = None, echo: bool = True) -> CriterionResult:
    if criterion_id not in CRITERIA:
        raise UnknownCriterion(criterion_id)
    config = RunConfig() if config is None else config
    anchor, fn = CRITERIA[criterion_id]
    t0 = time.perf_counter()
    res = fn(config)
    res.runtime = time.perf_counter() - t0
    if echo:
        for line in res.lines():
            print(line)
    return res
