import math

import pytest
from hypothesis import assume, given, strategies as st

from tfbec.params import (BoundaryCase, CoexistenceViolated, NonPositiveCoupling, OrderingViolated,
                          Regime, classify, gammas, regime_threshold, validate)


def test_reference_parameters_are_valid():
    p = validate(1, 2, 1, 0.05, 0.0)
    assert (p.g1, p.g2, p.g, p.eps, p.omega) == (1.0, 2.0, 1.0, 0.05, 0.0)


@pytest.mark.parametrize("args, exc", [
    ((1, 1, 1, 0.05), CoexistenceViolated),
    ((2, 1, 0.5, 0.05), OrderingViolated),
    ((0, 1, 0.5, 0.05), NonPositiveCoupling),
    ((1, 2, 1, 0.0), NonPositiveCoupling),
    ((1, 2, -1, 0.05), NonPositiveCoupling),
])
def test_rejections(args, exc):
    with pytest.raises(exc):
        validate(*args)


def test_negative_omega_rejected():
    with pytest.raises(NonPositiveCoupling):
        validate(1, 2, 1, 0.05, -0.1)


@pytest.mark.parametrize("bad", [math.nan, math.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(ValueError):
        validate(1, 2, bad, 0.05)


def test_classification_examples():
    t = (1 + math.sqrt(17)) / 4
    assert regime_threshold(1, 2) == pytest.approx(t, rel=1e-15)
    assert classify(validate(1, 2, 1, 0.05)) is Regime.TWO_DISKS
    assert classify(validate(1, 2, 1.35, 0.05)) is Regime.DISK_ANNULUS
    assert classify(validate(1, 1, 0.5, 0.05)) is Regime.SYMMETRIC


def test_threshold_is_reported_not_classified():
    t = regime_threshold(1, 2)
    with pytest.raises(BoundaryCase):
        classify(validate(1, 2, t, 0.05))
    with pytest.raises(BoundaryCase):
        classify(validate(1, 2, t * (1 + 1e-13), 0.05))


def test_with_eps_revalidates():
    p = validate(1, 2, 1, 0.05)
    assert p.with_eps(0.1).eps == 0.1
    with pytest.raises(NonPositiveCoupling):
        p.with_eps(-1.0)


@st.composite
def valid_triples(draw):
    g1 = draw(st.floats(0.1, 10.0))
    g2 = g1 * draw(st.floats(1.0, 5.0))
    g = math.sqrt(g1 * g2) * draw(st.floats(0.01, 0.99))
    return g1, g2, g


@given(valid_triples())
def test_gamma_signs(tr):
    g1, g2, g = tr
    gm = validate(g1, g2, g, 0.1).gammas
    assert gm.gamma > 0 and gm.gamma2 > 0
    assert (gm.gamma1 < 0) == (g > g1)


@given(valid_triples())
def test_regimes_are_consistent(tr):
    g1, g2, g = tr
    assume(abs(g - regime_threshold(g1, g2)) > 1e-9)
    reg = classify(validate(g1, g2, g, 0.1))
    if reg is Regime.DISK_ANNULUS:
        assert g > g1
    if reg is Regime.TWO_DISKS:
        assert g * g < g1 * g2


def test_gamma_values():
    gm = gammas(1, 2, 1)
    assert (gm.gamma1, gm.gamma2, gm.gamma) == (0.0, 0.5, 0.5)
