"""Thomas-Fermi limit profiles and their finite-eps quadratic counterparts.

Every limit density is piecewise linear in t = r^2, so masses and the tail
integral xi(r) = int_r^inf s a(s) ds are evaluated in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import PhysParams, Regime, RegimeMismatch, classify

MASS_TOL = 1e-10


class DegenerateRadius(ArithmeticError):
    pass


@dataclass(frozen=True)
class Piece:
    """Density c0 + c1 * r^2 on lo <= r < hi."""

    lo: float
    hi: float
    c0: float
    c1: float


class PiecewiseDensity:
    def __init__(self, pieces):
        self.pieces = tuple(p for p in pieces if p.hi > p.lo)

    @property
    def support_radius(self) -> float:
        return self.pieces[-1].hi

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for p in self.pieces:
            m = (r >= p.lo) & (r < p.hi)
            out[m] = p.c0 + p.c1 * r[m] ** 2
        return out

    def _half_t_integral(self, p: Piece, t0: float) -> float:
        # 0.5 * int_{t0}^{hi^2} (c0 + c1 t) dt
        t1 = p.hi ** 2
        return 0.5 * (p.c0 * (t1 - t0) + 0.5 * p.c1 * (t1 * t1 - t0 * t0))

    def mass(self) -> float:
        return 2.0 * math.pi * sum(self._half_t_integral(p, p.lo ** 2) for p in self.pieces)

    def xi(self, r):
        """int_r^inf s a(s) ds."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        for k, rk in enumerate(r):
            tot = 0.0
            for p in self.pieces:
                if rk >= p.hi:
                    continue
                tot += self._half_t_integral(p, max(rk, p.lo) ** 2)
            out[k] = tot
        return out

    def ratio(self, r):
        """xi / a inside the support, 0 outside; inf where a vanishes inside."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        last = self.pieces[-1]
        T = last.hi ** 2
        a = self(r)
        inner = r < self.support_radius
        for k in np.flatnonzero(inner):
            if r[k] >= last.lo:
                # on the outermost piece a = -c1 (T - t) and xi = -c1 (T - t)^2 / 4
                out[k] = (T - r[k] ** 2) / 4.0
            elif a[k] > 0:
                out[k] = self.xi(r[k])[0] / a[k]
            else:
                out[k] = np.inf
        return out


@dataclass(frozen=True)
class TFProfile:
    params: PhysParams
    regime: Regime
    lam1: float
    lam2: float
    r1: float
    r2: float
    r2_inner: float = 0.0
    masses: tuple = (1.0, 1.0)

    @property
    def r2_outer(self) -> float:
        return self.r2

    def inner_quadratic(self, i: int, r):
        """a_{i,0} continued as a quadratic over all r."""
        return limit_quadratic(self.params, self.lam1, self.lam2, i, r)

    def density(self, i: int) -> PiecewiseDensity:
        p = self.params
        g1, g2 = p.g1, p.g2
        a10 = Piece(0, 0, *_quad_coeffs(p, self.lam1, self.lam2, 1))
        a20 = Piece(0, 0, *_quad_coeffs(p, self.lam1, self.lam2, 2))
        if self.regime is Regime.DISK_ANNULUS:
            lo, r1, hi = self.r2_inner, self.r1, self.r2
            if i == 1:
                return PiecewiseDensity([
                    Piece(0.0, lo, self.lam1 / g1, -1.0 / g1),
                    Piece(lo, r1, a10.c0, a10.c1),
                ])
            return PiecewiseDensity([
                Piece(lo, r1, a20.c0, a20.c1),
                Piece(r1, hi, self.lam2 / g2, -1.0 / g2),
            ])
        if i == 1:
            return PiecewiseDensity([Piece(0.0, self.r1, a10.c0, a10.c1)])
        return PiecewiseDensity([
            Piece(0.0, self.r1, a20.c0, a20.c1),
            Piece(self.r1, self.r2, self.lam2 / g2, -1.0 / g2),
        ])

    def a(self, i: int, r):
        return self.density(i)(r)

    def xi(self, i: int, r):
        return self.density(i).xi(r)

    def aux(self, i: int, r):
        """Limit auxiliary function xi_{i,0} / a_i on the support, zero beyond."""
        return self.density(i).ratio(r)

    def support(self, i: int) -> float:
        return self.r1 if i == 1 else self.r2


def _quad_coeffs(p: PhysParams, lam1: float, lam2: float, i: int):
    gm = p.gammas
    if i == 1:
        d = p.g1 * gm.gamma
        return (lam1 - p.g / p.g2 * lam2) / d, -gm.gamma2 / d
    d = p.g2 * gm.gamma
    return (lam2 - p.g / p.g1 * lam1) / d, -gm.gamma1 / d


def limit_quadratic(p: PhysParams, lam1: float, lam2: float, i: int, r):
    """(lam_i - (g/g_j) lam_j - Gamma_j r^2) / (g_i Gamma), untruncated."""
    c0, c1 = _quad_coeffs(p, lam1, lam2, i)
    return c0 + c1 * np.asarray(r, dtype=float) ** 2


def two_disk_profile(p: PhysParams) -> TFProfile:
    regime = classify(p)
    if regime is Regime.DISK_ANNULUS:
        raise RegimeMismatch("parameters lie in the disk-annulus regime")
    gm = p.gammas
    r1 = (2.0 * p.g1 * gm.gamma / (math.pi * gm.gamma2)) ** 0.25
    r2 = (2.0 * (p.g2 + p.g) / math.pi) ** 0.25
    if not r1 <= r2 * (1 + 1e-14):
        raise DegenerateRadius(f"inner radius {r1} exceeds outer radius {r2}")
    lam2 = r2 * r2
    lam1 = p.g / p.g2 * lam2 + gm.gamma2 * r1 * r1
    return _finish(TFProfile(p, regime, lam1, lam2, r1, r2))


def annulus_profile(p: PhysParams) -> TFProfile:
    regime = classify(p)
    if regime is not Regime.DISK_ANNULUS:
        raise RegimeMismatch("parameters do not lie in the disk-annulus regime")
    g1, g2, g = p.g1, p.g2, p.g
    gm = p.gammas
    lam1 = math.sqrt(2.0 * g1 * (1.0 + (g2 * g2) / (g * g) * (1.0 - gm.gamma2) ** 2) / math.pi)
    gap = math.sqrt(-gm.gamma1 * gm.gamma2) * math.sqrt(
        2.0 * g1 * g2 * g2 * (1.0 - gm.gamma2) / (math.pi * g * g))
    lam2 = lam1 + gap
    sq1 = (lam1 - g / g2 * lam2) / gm.gamma2
    sq_in = (lam2 - g / g1 * lam1) / gm.gamma1
    if sq1 <= 0 or sq_in <= 0:
        raise DegenerateRadius(f"non-positive squared radius ({sq1}, {sq_in})")
    r1, r_in, r_out = math.sqrt(sq1), math.sqrt(sq_in), math.sqrt(lam2)
    if not r_in < r1 < r_out:
        raise DegenerateRadius(f"radii out of order: {r_in}, {r1}, {r_out}")
    return _finish(TFProfile(p, regime, lam1, lam2, r1, r_out, r_in))


def _finish(prof: TFProfile) -> TFProfile:
    m = (prof.density(1).mass(), prof.density(2).mass())
    if max(abs(m[0] - 1), abs(m[1] - 1)) > MASS_TOL:
        raise DegenerateRadius(f"closed-form masses {m} are not normalised")
    return TFProfile(prof.params, prof.regime, prof.lam1, prof.lam2, prof.r1, prof.r2,
                     prof.r2_inner, m)


def tf_profile(p: PhysParams) -> TFProfile:
    if classify(p) is Regime.DISK_ANNULUS:
        return annulus_profile(p)
    return two_disk_profile(p)


@dataclass(frozen=True)
class EpsProfile:
    """Quadratic profiles built from finite-eps chemical potentials."""

    params: PhysParams
    lam1: float
    lam2: float

    def a(self, i: int, r):
        return limit_quadratic(self.params, self.lam1, self.lam2, i, r)

    def outer_potential(self, r):
        """a_2 + (g/g2) a_1, equal to (lam2 - r^2) / g2."""
        return (self.lam2 - np.asarray(r, dtype=float) ** 2) / self.params.g2

    @property
    def r1(self) -> float:
        p = self.params
        sq = (self.lam1 - p.g / p.g2 * self.lam2) / p.gammas.gamma2
        if sq <= 0:
            raise DegenerateRadius(f"squared inner radius {sq} is not positive")
        return math.sqrt(sq)

    @property
    def r2(self) -> float:
        if self.lam2 <= 0:
            raise DegenerateRadius("lam2 must be positive")
        return math.sqrt(self.lam2)

    @property
    def r2_inner(self) -> float:
        p = self.params
        sq = (self.lam2 - p.g / p.g1 * self.lam1) / p.gammas.gamma1
        if sq <= 0:
            raise DegenerateRadius(f"squared hole radius {sq} is not positive")
        return math.sqrt(sq)

    @property
    def beta1(self) -> float:
        p = self.params
        gm = p.gammas
        return (2.0 * gm.gamma2 * self.r1 / (p.g1 * gm.gamma)) ** (1.0 / 3.0)

    @property
    def beta2(self) -> float:
        return (2.0 * self.r2 / self.params.g2) ** (1.0 / 3.0)
