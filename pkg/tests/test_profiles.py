import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, optimize

from tfbec.params import Regime, regime_threshold, validate
from tfbec.profiles import DegenerateRadius, EpsProfile, tf_profile


def _sc(x):
    return float(np.asarray(x).reshape(-1)[0])


def quad(f, a, b):
    return integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def test_two_disk_radii_closed_form():
    prof = tf_profile(validate(1, 2, 1, 0.05))
    assert prof.regime is Regime.TWO_DISKS
    assert prof.r2 ** 4 == pytest.approx(6 / math.pi, rel=1e-14)
    assert prof.r1 ** 4 == pytest.approx(2 / math.pi, rel=1e-14)


def test_symmetric_profiles_coincide():
    prof = tf_profile(validate(1.5, 1.5, 1.0, 0.05))
    r = np.linspace(0, 1.2 * prof.r2, 401)
    assert prof.r1 == pytest.approx(prof.r2, rel=1e-14)
    assert np.max(np.abs(prof.a(1, r) - prof.a(2, r))) < 1e-14


def _annulus_oracle(g1, g2, g):
    """Solve both unit-mass conditions by root finding over (lam1, lam2)."""
    G, G1, G2 = 1 - g * g / (g1 * g2), 1 - g / g1, 1 - g / g2

    def masses(lam):
        l1, l2 = lam
        r1 = math.sqrt((l1 - g / g2 * l2) / G2)
        rm = math.sqrt((l2 - g / g1 * l1) / G1)
        rp = math.sqrt(l2)
        a10 = lambda r: (l1 - g / g2 * l2 - G2 * r * r) / (g1 * G)
        a20 = lambda r: (l2 - g / g1 * l1 - G1 * r * r) / (g2 * G)
        m1 = quad(lambda r: 2 * math.pi * r * (l1 - r * r) / g1, 0, rm) + \
            quad(lambda r: 2 * math.pi * r * a10(r), rm, r1)
        m2 = quad(lambda r: 2 * math.pi * r * a20(r), rm, r1) + \
            quad(lambda r: 2 * math.pi * r * (l2 - r * r) / g2, r1, rp)
        return [m1 - 1, m2 - 1]

    sol = optimize.fsolve(masses, [1.1, 1.4], xtol=1e-14)
    return sol


def test_annulus_matches_root_finding_oracle():
    p = validate(1, 2, 1.35, 0.05)
    prof = tf_profile(p)
    assert prof.regime is Regime.DISK_ANNULUS
    l1, l2 = _annulus_oracle(1, 2, 1.35)
    assert prof.lam1 == pytest.approx(l1, abs=1e-10)
    assert prof.lam2 == pytest.approx(l2, abs=1e-10)
    gm = p.gammas
    assert abs(prof.lam2 - p.g / p.g1 * prof.lam1 - gm.gamma1 * prof.r2_inner ** 2) < 1e-10
    assert abs(prof.lam1 - p.g / p.g2 * prof.lam2 - gm.gamma2 * prof.r1 ** 2) < 1e-10
    assert abs(prof.lam2 - prof.r2 ** 2) < 1e-10
    assert prof.r2_inner < prof.r1 < prof.r2


@pytest.mark.parametrize("g", [1.0, 1.2, 1.35])
def test_edges_and_continuity(g):
    p = validate(1, 2, g, 0.05)
    prof = tf_profile(p)
    assert abs(_sc(prof.a(1, prof.r1))) < 1e-14
    e = 1e-9
    for x in {prof.r1, prof.r2_inner} - {0.0}:
        for i in (1, 2):
            assert abs(_sc(prof.a(i, x - e)) - _sc(prof.a(i, x + e))) < 1e-7
    r = np.linspace(0, 2 * prof.r2, 2001)
    for i in (1, 2):
        a = prof.a(i, r)
        assert a.min() >= 0
        assert np.all(a[r > prof.support(i)] == 0)


def test_outer_component_at_centre_when_gamma1_negative():
    p = validate(1, 2, 1.2, 0.05)  # two disks with g > g1
    prof = tf_profile(p)
    assert prof.regime is Regime.TWO_DISKS and p.gammas.gamma1 < 0
    expect = (prof.lam2 - p.g / p.g1 * prof.lam1) / (p.g2 * p.gammas.gamma)
    assert _sc(prof.a(2, 0.0)) == pytest.approx(expect, rel=1e-14)
    assert expect > 0
    r = np.linspace(0, 0.9 * prof.r1, 200)
    assert np.all(np.diff(prof.a(2, r)) > 0)


@pytest.mark.parametrize("g, sign", [(0.6, -1), (1.0, 0), (1.2, 1)])
def test_inner_monotonicity(g, sign):
    prof = tf_profile(validate(1, 2, g, 0.05))
    r = np.linspace(0, prof.r1, 300)[1:-1]
    assert np.all(np.diff(prof.a(1, r)) < 0)
    d = np.diff(prof.a(2, r))
    if sign == 0:
        assert np.max(np.abs(d)) < 1e-14
    else:
        assert np.all(np.sign(d) == sign)
        lo = min(_sc(prof.a(2, 0.0)), _sc(prof.inner_quadratic(2, prof.r1)))
        assert prof.a(2, r).min() >= lo - 1e-14


@st.composite
def regime_params(draw):
    g1 = draw(st.floats(0.3, 3.0))
    g2 = g1 * draw(st.floats(1.05, 4.0))
    t = regime_threshold(g1, g2)
    if draw(st.booleans()):
        g = t * draw(st.floats(0.05, 0.95))
    else:
        g = t + (math.sqrt(g1 * g2) - t) * draw(st.floats(0.05, 0.95))
    return validate(g1, g2, g, 0.05)


@given(regime_params())
def test_normalization_by_quadrature(p):
    prof = tf_profile(p)
    brk = sorted({prof.r2_inner, prof.r1, prof.r2} - {0.0})
    for i in (1, 2):
        edges = [0.0] + [b for b in brk if b <= prof.support(i)]
        m = sum(quad(lambda s: 2 * math.pi * s * _sc(prof.a(i, s)), a, b)
                for a, b in zip(edges, edges[1:]))
        assert abs(m - 1) < 1e-10


@given(regime_params())
def test_radius_ordering_two_disks(p):
    prof = tf_profile(p)
    if prof.regime is Regime.TWO_DISKS:
        assert prof.r1 < prof.r2


def test_eps_profile_reduces_to_limit():
    p = validate(1, 2, 1, 0.05)
    prof = tf_profile(p)
    ep = EpsProfile(p, prof.lam1, prof.lam2)
    assert ep.r1 == pytest.approx(prof.r1, rel=1e-14)
    assert ep.r2 == pytest.approx(prof.r2, rel=1e-14)


def test_eps_profile_slopes_by_finite_differences():
    p = validate(1, 2, 1, 0.05)
    ep = EpsProfile(p, 1.098, 1.389)
    h = 1e-5
    d1 = (ep.a(1, ep.r1 + h) - ep.a(1, ep.r1 - h)) / (2 * h)
    assert ep.beta1 ** 3 == pytest.approx(-d1, abs=1e-8)
    d2 = (ep.outer_potential(ep.r2 + h) - ep.outer_potential(ep.r2 - h)) / (2 * h)
    assert ep.beta2 ** 3 == pytest.approx(-d2, abs=1e-8)
    comb = ep.a(2, ep.r2) + p.g / p.g2 * ep.a(1, ep.r2)
    assert abs(comb) < 1e-12
    r = np.linspace(0, 2, 2001)
    s = np.sign(ep.a(1, r))
    assert np.count_nonzero(np.diff(s)) == 1 and s[0] > 0


def test_degenerate_radius():
    p = validate(1, 2, 1, 0.05)
    with pytest.raises(DegenerateRadius):
        EpsProfile(p, 0.1, 1.0).r1
    with pytest.raises(DegenerateRadius):
        EpsProfile(p, 0.1, -1.0).r2


def test_limit_aux_function():
    prof = tf_profile(validate(1, 2, 1, 0.05))
    for i in (1, 2):
        assert _sc(prof.aux(i, prof.support(i))) == 0.0
    r = np.linspace(0, 1.5, 20001)
    assert np.isfinite(prof.aux(1, r)).all() and np.isfinite(prof.aux(2, r)).all()
    # F_{1,0}(0) by two quadrature rules
    R = prof.r1
    f = lambda s: s * _sc(prof.a(1, s))
    q1 = quad(f, 0, R)
    x = np.linspace(0, R, 20001)
    q2 = integrate.simpson(x * prof.a(1, x), x=x)
    assert abs(q1 - q2) < 1e-9
    assert _sc(prof.aux(1, 0.0)) == pytest.approx(q1 / _sc(prof.a(1, 0.0)), abs=1e-12)


def test_limit_aux_continuous_at_edge():
    prof = tf_profile(validate(1, 2, 1, 0.05))
    for i in (1, 2):
        R = prof.support(i)
        assert _sc(prof.aux(i, R - 1e-8)) < 1e-7
