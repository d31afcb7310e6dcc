import math

import numpy as np
import pytest

from tfbec.painleve import (BoundaryLayer, GridTooCoarse, OutOfTableRange, check_cancellation,
                            inner_expansion, left_tail_fit, right_tail_log_slopes,
                            shoot_hastings_mcleod, solve_hastings_mcleod)


@pytest.fixture(scope="module")
def table():
    return solve_hastings_mcleod()


def test_collocation_residual(table):
    assert np.max(np.abs(table.residual())) < 1e-8


def test_boundary_values(table):
    assert table.v[-1] == 0.0
    assert abs(table.v[0] - math.sqrt(table.L)) < 1e-3


def test_leading_boundary_condition():
    t = solve_hastings_mcleod(L=8.0, n=20001, left_bc="leading")
    assert t.v[0] == math.sqrt(8.0)
    with pytest.raises(ValueError):
        solve_hastings_mcleod(L=8.0, n=20001, left_bc="other")


def test_shape(table):
    assert np.all(table.v[:-1] > 0)
    interior = table.s < table.L - 1
    assert np.all(table.v_prime[interior] < 0)


def test_shooting_agrees(table):
    v0, half = shoot_hastings_mcleod()
    assert abs(table.value_at(0.0) - v0) < 1e-6
    assert half < 1e-6


def test_refinement_changes_centre_value_little(table):
    fine = solve_hastings_mcleod(L=table.L, n=2 * (len(table.s) - 1) + 1)
    assert abs(fine.value_at(0.0) - table.value_at(0.0)) < 1e-9


def test_domain_truncation():
    h = 2e-4
    a = solve_hastings_mcleod(L=8.0, n=int(round(16 / h)) + 1)
    b = solve_hastings_mcleod(L=12.0, n=int(round(24 / h)) + 1)
    ma = np.abs(a.s) <= 6
    mb = np.abs(b.s) <= 6 + 1e-12
    assert ma.sum() == mb.sum()
    assert np.max(np.abs(a.v[ma] - b.v[mb])) < 1e-8


def test_left_tail_and_cancellation(table):
    fit = left_tail_fit(table)
    assert fit.exponent == pytest.approx(-2.5, abs=0.1)
    assert check_cancellation(table).exponent <= -3.5


def test_right_tail_steepens(table):
    slopes = right_tail_log_slopes(table)
    assert len(slopes) >= 3
    assert np.all(slopes < 0)
    assert np.all(np.diff(slopes) < 0)


def test_too_coarse():
    with pytest.raises(GridTooCoarse):
        solve_hastings_mcleod(L=4.0)
    with pytest.raises(GridTooCoarse):
        solve_hastings_mcleod(n=100)


def test_out_of_range(table):
    with pytest.raises(OutOfTableRange):
        table(np.array([table.L + 1]))
    left = table(np.array([-table.L - 4]), extrapolate=True)
    assert left[0] == pytest.approx(math.sqrt(table.L + 4), rel=1e-3)


def test_inner_expansion(table):
    layer = BoundaryLayer(beta=1.3, r_center=0.9, eps=0.01, coupling=2.0)
    val = inner_expansion(layer, table, np.array([0.9]))[0]
    assert val == pytest.approx(layer.amplitude * table.value_at(0.0), rel=1e-14)
    assert layer.amplitude == pytest.approx(0.01 ** (1 / 3) * 2 ** (-1 / 6) * 1.3)
    far = 0.9 + 2 * table.L * 0.01 ** (2 / 3) / (layer.k * layer.beta)
    with pytest.raises(OutOfTableRange):
        inner_expansion(layer, table, np.array([far]))
