import math

import numpy as np
import pytest

from tfbec.params import validate
from tfbec.profiles import tf_profile
from tfbec.radial import solve_coupled
from tfbec.rotation import (ALPHA, Grid2D, NonPositiveThreshold, aux_functions, coercivity_gamma,
                            default_grid2d, detect_vortices, energy_2d, energy_split,
                            node_ring_winding, omega_threshold, plaquette_winding,
                            radial_free_energy, radial_to_2d, rotation_bound_terms,
                            solve_rotating_2d, tail_mass)


@pytest.fixture(scope="module")
def state():
    return solve_coupled(validate(1, 2, 1, 0.1))


def test_tail_mass_at_origin(state):
    ax = aux_functions(state)
    assert abs(ax.xi1[0] - 1 / (2 * math.pi)) < 1e-12
    assert abs(ax.xi2[0] - 1 / (2 * math.pi)) < 1e-12
    assert np.all(np.diff(ax.xi1) <= 0)
    assert tail_mass(state.grid, state.eta1)[-1] >= 0


def test_aux_positive_where_valid(state):
    ax = aux_functions(state)
    for i in (1, 2):
        v = ax.valid(i)
        assert np.all(ax.F(i)[v] > 0)
        assert np.all(np.isfinite(ax.F(i)))


def test_threshold_scaling():
    p = validate(1, 2, 1, 1e-6)
    a = omega_threshold(p, sup_F0=0.4, alpha=ALPHA, strict=False)
    b = omega_threshold(p, sup_F0=0.8, alpha=ALPHA, strict=False)
    assert b.omega0 == pytest.approx(a.omega0 / 2, rel=1e-15)
    assert a.omega0 == pytest.approx(1 / 0.8, rel=1e-15)
    assert ALPHA == 1300


def test_threshold_strictness():
    p = validate(1, 2, 1, 0.075)
    with pytest.raises(NonPositiveThreshold):
        omega_threshold(p)
    th = omega_threshold(p, strict=False)
    assert th.omega_star <= 0 < th.leading


@pytest.mark.parametrize("g1, g2, g", [(1, 2, 1), (1, 2, 1.35), (2, 3, 0.5)])
def test_coercivity_gamma(g1, g2, g):
    gam = coercivity_gamma(g1, g2, g)
    assert 0 < gam < min(g1, g2)
    assert g == pytest.approx(math.sqrt(g1 - gam) * math.sqrt(g2 - gam), rel=1e-12)


def _vortex(grid, x0=0.0, y0=0.0, sign=1, core=0.1):
    X, Y = grid.mesh()
    z = (X - x0) + 1j * sign * (Y - y0)
    f = np.exp(-(X * X + Y * Y))
    return f * z / np.sqrt(np.abs(z) ** 2 + core ** 2)


def test_detection_real_field_is_vortex_free():
    grid = Grid2D(64, 2.0)
    X, Y = grid.mesh()
    u = np.exp(-(X * X + Y * Y)).astype(complex)
    assert detect_vortices((u, u), 1e-4, grid) == []


def test_detection_on_node_and_gauge_invariance():
    grid = Grid2D(64, 2.0)
    u = _vortex(grid)
    found = detect_vortices((u, np.abs(u)), 1e-4, grid)
    assert [(k, w) for k, _, w, _ in found] == [(1, 1)]
    assert found[0][3] == pytest.approx((0.0, 0.0), abs=1e-12)
    gauged = detect_vortices((u * np.exp(0.7j), np.abs(u)), 1e-4, grid)
    assert [(k, w) for k, _, w, _ in gauged] == [(1, 1)]


def test_detection_off_node_antivortex_and_pairs():
    grid = Grid2D(64, 2.0)
    h = grid.h
    anti = _vortex(grid, 0.3 * h, 0.4 * h, sign=-1)
    found = detect_vortices((anti, anti), 1e-4, grid)
    assert sorted((k, w) for k, _, w, _ in found) == [(1, -1), (2, -1)]
    two = _vortex(grid, -0.5 + 0.3 * h, 0.2 * h) * _vortex(grid, 0.5 + 0.3 * h, 0.2 * h) / \
        np.exp(-(sum(a * a for a in grid.mesh())))
    found = detect_vortices((two, np.abs(two)), 1e-4, grid)
    assert [(k, w) for k, _, w, _ in found] == [(1, 1), (1, 1)]
    xs = sorted(xy[0] for *_, xy in found)
    assert xs[0] == pytest.approx(-0.5, abs=h) and xs[1] == pytest.approx(0.5, abs=h)
    assert plaquette_winding(two, 1e-4).sum() == 2
    assert node_ring_winding(two, 1e-4).sum() == 0


def test_splitting_identity_trivial_multipliers(state):
    p = state.params
    grid = default_grid2d(p, cells=48)
    base = solve_rotating_2d(p, grid, 0.0, state, noise=0.0, tol=1e-10)
    eta = (np.abs(base.u1), np.abs(base.u2))
    br = energy_split(p, 0.0, eta, eta, grid)
    assert abs(br.F_omega) < 1e-10 * abs(br.E_zero)
    phase = tuple(e * np.exp(0.4j) for e in eta)
    br = energy_split(p, 0.0, eta, phase, grid)
    assert abs(br.F_omega) < 1e-10 * abs(br.E_zero)
    assert br.identity_gap < 1e-10


def test_radial_free_energy(state):
    one = np.ones_like(state.eta1)
    assert abs(radial_free_energy(state, one, one)) < 1e-12
    rng = np.random.default_rng(0)
    for _ in range(5):
        v1 = np.exp(1j * np.cumsum(rng.normal(size=state.grid.n)) * 0.01)
        v1 = v1 / state.grid.norm(np.abs(state.eta1 * v1))
        v2 = (1 + 0.1 * np.sin(3 * state.r)) / state.grid.norm(state.eta2 * (1 + 0.1 * np.sin(3 * state.r)))
        assert radial_free_energy(state, v1, v2) > 0


def test_two_dimensional_minimiser_matches_radial(state):
    p = state.params
    grid = default_grid2d(p, cells=64)
    fld = solve_rotating_2d(p, grid, 0.0, state, noise=1e-3, tol=1e-9)
    assert fld.converged
    ref = radial_to_2d(state, grid)
    dist = max(np.abs(np.abs(fld.u1) - ref[0]).max(), np.abs(np.abs(fld.u2) - ref[1]).max())
    assert dist <= 5 * grid.h
    assert np.max(np.abs(fld.u1) ** 2) <= fld.mu1 / p.g1 + 1e-8
    assert np.max(np.abs(fld.u2) ** 2) <= fld.mu2 / p.g2 + 1e-8
    assert detect_vortices(fld) == []


def test_rotation_bound(state):
    p = state.params
    grid = default_grid2d(p, cells=48)
    fld = solve_rotating_2d(p, grid, 1.0, state, noise=1e-3, tol=1e-8)
    terms = rotation_bound_terms(p, fld)
    assert terms["lhs"] <= terms["rhs"]


@pytest.mark.slow
def test_imprinted_vortex_is_metastable():
    p = validate(1, 2, 1, 0.075)
    st = solve_coupled(p)
    grid = default_grid2d(p, cells=128)
    th = omega_threshold(p, strict=False)
    omega = 0.5 * th.leading
    X, Y = grid.mesh()
    u1, u2 = radial_to_2d(st, grid)
    phase = (X + 1j * Y) / np.maximum(np.hypot(X, Y), 1e-300)
    fld = solve_rotating_2d(p, grid, omega, (u1, u2 * phase), tol=1e-8)
    assert fld.converged
    found = detect_vortices(fld)
    assert [(k, w) for k, _, w, _ in found] == [(2, 1)]
    plain = solve_rotating_2d(p, grid, omega, st, noise=1e-3, tol=1e-8)
    assert detect_vortices(plain) == []
    still = solve_rotating_2d(p, grid, 0.0, st, noise=0.0, tol=1e-10)
    eta = (np.abs(still.u1), np.abs(still.u2))
    br = energy_split(p, omega, eta, (fld.u1, fld.u2), grid)
    assert br.identity_gap < 1e-8
    assert br.F_omega > 0
    assert energy_2d(p, grid, omega, fld.u1, fld.u2)["total"] > \
        energy_2d(p, grid, omega, plain.u1, plain.u2)["total"]
