"""Hastings-McLeod solution of v'' = v (v^2 + s) and boundary-layer profiles."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded


class NewtonDivergence(RuntimeError):
    pass


class GridTooCoarse(ValueError):
    pass


class OutOfTableRange(ValueError):
    pass


class FitRejected(ValueError):
    pass


RESIDUAL_TOL = 1e-8


def left_asymptote(s):
    """sqrt(-s) with its first two algebraic corrections, valid for s -> -inf."""
    x = -np.asarray(s, dtype=float)
    return np.sqrt(x) * (1.0 - 1.0 / (8.0 * x ** 3) - 73.0 / (128.0 * x ** 6))


@dataclass(frozen=True)
class PainleveTable:
    s: np.ndarray
    v: np.ndarray
    v_prime: np.ndarray
    L: float
    newton_trace: tuple = ()

    @property
    def h(self) -> float:
        return float(self.s[1] - self.s[0])

    def residual(self) -> np.ndarray:
        s, v, h = self.s, self.v, self.h
        return (v[2:] - 2 * v[1:-1] + v[:-2]) / h ** 2 - v[1:-1] * (v[1:-1] ** 2 + s[1:-1])

    def value_at(self, x: float) -> float:
        return float(self(np.array([x]))[0])

    def __call__(self, x, extrapolate: bool = False):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= self.L
        if not extrapolate and not inside.all():
            bad = x[~inside]
            raise OutOfTableRange(f"{bad.size} points outside [-{self.L}, {self.L}], e.g. {bad.flat[0]:.3g}")
        out = np.zeros_like(x)
        out[inside] = _spline(self)(x[inside])
        left = x < -self.L
        out[left] = left_asymptote(x[left])
        return out


_SPLINES = {}


def _spline(table: PainleveTable) -> CubicSpline:
    key = id(table)
    sp_ = _SPLINES.get(key)
    if sp_ is None or sp_[0] is not table:
        sp_ = (table, CubicSpline(table.s, table.v))
        _SPLINES[key] = sp_
    return sp_[1]


def solve_hastings_mcleod(L: float = 16.0, n: int = 80001, left_bc: str = "asymptotic",
                          tol: float = 1e-12, max_iter: int = 60) -> PainleveTable:
    """Newton on the three-point collocation of v'' = v (v^2 + s) over [-L, L].

    left_bc='leading' imposes v(-L) = sqrt(L); the default adds the two
    algebraic corrections of the left asymptote, which removes the O(L^-5/2)
    boundary error that otherwise leaks about e-7 into the interior.
    """
    if L < 8 or n < 2000:
        raise GridTooCoarse(f"need L >= 8 and n >= 2000, got L={L}, n={n}")
    s = np.linspace(-L, L, n)
    h = s[1] - s[0]
    v = np.sqrt(np.maximum(-s, 0.0))
    if left_bc == "asymptotic":
        v[0] = left_asymptote(-L)
    elif left_bc == "leading":
        v[0] = math.sqrt(L)
    else:
        raise ValueError(f"unknown left boundary condition {left_bc!r}")
    v[-1] = 0.0
    m = n - 2
    ab = np.zeros((3, m))
    ab[0, 1:] = 1.0 / h ** 2
    ab[2, :-1] = 1.0 / h ** 2
    trace = []
    best = np.inf
    stalled = 0
    for _ in range(max_iter):
        vi, si = v[1:-1], s[1:-1]
        F = (v[2:] - 2 * vi + v[:-2]) / h ** 2 - vi * (vi * vi + si)
        ab[1] = -2.0 / h ** 2 - (3 * vi * vi + si)
        dv = solve_banded((1, 1), ab, -F)
        v[1:-1] += dv
        step = float(np.max(np.abs(dv)))
        trace.append(step)
        if not math.isfinite(step):
            raise NewtonDivergence(f"non-finite Newton update; trace {trace}")
        if step < tol:
            break
        # the residual floor is set by rounding in the 1/h^2 stencil; stop once
        # the update stops shrinking below a level well under the tolerance
        if step < 1e3 * tol:
            stalled = stalled + 1 if step >= best else 0
            if stalled >= 2:
                break
        best = min(best, step)
    else:
        raise NewtonDivergence(f"no convergence in {max_iter} iterations; trace {trace[-5:]}")
    vp = np.gradient(v, h, edge_order=2)
    table = PainleveTable(s, v, vp, float(L), tuple(trace))
    res = np.max(np.abs(table.residual()))
    floor = 16 * np.finfo(float).eps * float(np.max(np.abs(v))) / h ** 2
    if res > max(RESIDUAL_TOL, floor):
        raise GridTooCoarse(f"collocation residual {res:.2e} above {RESIDUAL_TOL}")
    return table


def shoot_hastings_mcleod(L: float = 6.0, h: float = 1e-3, s_eval: float = 0.0):
    """Independent route: bisection on v'(-L) with classical RK4.

    Trajectories that cross zero had too steep a start, those that turn up
    after s > 0 too shallow. Returns V(s_eval) averaged over the final bracket
    and the bracket half-width at s_eval.
    """
    v0 = float(left_asymptote(-L))
    nsteps = int(round(2 * L / h))
    k_eval = int(round((s_eval + L) / h))

    def run(p):
        v = v0
        s = -L
        at = None
        for k in range(nsteps):
            if k == k_eval:
                at = v
            k1v, k1p = p, v * (v * v + s)
            vv, pp = v + 0.5 * h * k1v, p + 0.5 * h * k1p
            k2v, k2p = pp, vv * (vv * vv + s + 0.5 * h)
            vv, pp = v + 0.5 * h * k2v, p + 0.5 * h * k2p
            k3v, k3p = pp, vv * (vv * vv + s + 0.5 * h)
            vv, pp = v + h * k3v, p + h * k3p
            k4v, k4p = pp, vv * (vv * vv + s + h)
            v += h * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0
            p += h * (k1p + 2 * k2p + 2 * k3p + k4p) / 6.0
            s = -L + (k + 1) * h
            if v < 0:
                return -1, at
            if p > 0 and s > 0:
                return 1, at
        return 0, at

    lo, hi = -2.0, 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        c, _ = run(mid)
        if c < 0:
            lo = mid
        elif c > 0:
            hi = mid
        else:
            lo = hi = mid
            break
    a, b = run(lo)[1], run(hi)[1]
    return 0.5 * (a + b), 0.5 * abs(a - b)


@dataclass(frozen=True)
class TailFit:
    exponent: float
    intercept: float
    n_points: int


def _loglog_fit(x, y) -> TailFit:
    m = (x > 0) & (y > 0) & np.isfinite(y)
    if m.sum() < 3:
        raise FitRejected("fewer than three usable points")
    k, c = np.polyfit(np.log(x[m]), np.log(y[m]), 1)
    return TailFit(float(k), float(c), int(m.sum()))


def left_tail_fit(table: PainleveTable) -> TailFit:
    """Exponent of |V - sqrt(-s)| against |s| on s <= -L/2."""
    m = table.s <= -table.L / 2
    s = table.s[m]
    return _loglog_fit(-s, np.abs(table.v[m] - np.sqrt(-s)))


def cancellation(table: PainleveTable) -> np.ndarray:
    """V V'' + V'^2, with V'' taken from the equation itself."""
    v, s = table.v, table.s
    return v * v * (v * v + s) + table.v_prime ** 2


def check_cancellation(table: PainleveTable, max_exponent: float = -3.5) -> TailFit:
    m = table.s <= -table.L / 2
    fit = _loglog_fit(-table.s[m], np.abs(cancellation(table)[m]))
    if fit.exponent > max_exponent:
        raise FitRejected(f"cancellation exponent {fit.exponent:.3f} above {max_exponent}")
    return fit


def right_tail_log_slopes(table: PainleveTable, window: float = 1.0) -> np.ndarray:
    """Average d(log V)/ds over consecutive windows of [L/2, L)."""
    out = []
    a = table.L / 2
    while a + window <= table.L - window:
        i0 = np.searchsorted(table.s, a)
        i1 = np.searchsorted(table.s, a + window)
        out.append((math.log(table.v[i1]) - math.log(table.v[i0])) / (table.s[i1] - table.s[i0]))
        a += window
    return np.array(out)


@dataclass(frozen=True)
class BoundaryLayer:
    """Rescaling r -> s = k beta (r - r_center) / eps^(2/3) around a support edge."""

    beta: float
    r_center: float
    eps: float
    coupling: float  # g1*Gamma for the inner edge, g2 for the outer one

    @property
    def k(self) -> float:
        return self.coupling ** (1.0 / 3.0)

    def s(self, r):
        return self.k * self.beta * (np.asarray(r, dtype=float) - self.r_center) / self.eps ** (2.0 / 3.0)

    @property
    def amplitude(self) -> float:
        return self.eps ** (1.0 / 3.0) * self.coupling ** (-1.0 / 6.0) * self.beta


def inner_expansion(layer: BoundaryLayer, table: PainleveTable, r, extrapolate: bool = False):
    """Leading-order profile eps^(1/3) c^(-1/6) beta V(s) across the layer."""
    return layer.amplitude * table(layer.s(r), extrapolate=extrapolate)
