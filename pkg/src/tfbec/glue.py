"""Glued approximate solution, its residual, and the linearised operator."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl

from .params import Regime, classify
from .profiles import EpsProfile, tf_profile
from .radial import (RadialGrid, RadialState, ScalarProblem, hole_potential,
                     reduced_problem, solve_scalar)


class NegativeRadicand(ArithmeticError):
    pass


class EigensolverFailure(RuntimeError):
    pass


class GridMismatch(ValueError):
    pass


def smoothstep(t):
    """Quintic ramp from 0 to 1 on [0, 1], C^2 at both ends."""
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


def glue_width(prof) -> float:
    if prof.regime is Regime.DISK_ANNULUS:
        return min(prof.r2_inner, prof.r1 - prof.r2_inner, prof.r2 - prof.r1) / 8.0
    return min(prof.r1, prof.r2 - prof.r1) / 8.0


def _checked_sqrt(x, r, what):
    if np.any(x <= 0):
        k = int(np.argmin(x))
        raise NegativeRadicand(f"{what}: radicand {x[k]:.3e} at r = {r[k]:.4f}")
    return np.sqrt(x)


@dataclass
class ApproxSolution:
    grid: RadialGrid
    eps_profile: EpsProfile
    eta1: np.ndarray
    eta2: np.ndarray
    eta2_tilde: np.ndarray  # nan beyond its domain of definition
    zeta: np.ndarray
    R_eps: float
    delta: float
    scalars: dict
    r_eps: float | None = None


def build_approx(state: RadialState, delta: float | None = None) -> ApproxSolution:
    """Glue scalar ground states and algebraic slaving into a pair on the state's grid.

    Chemical potentials come from the coupled state.
    """
    p, grid = state.params, state.grid
    prof = tf_profile(p)
    ep = state.eps_profile
    if delta is None:
        delta = glue_width(prof)
    if prof.regime is Regime.DISK_ANNULUS:
        return _build_annulus(state, ep, prof, delta)
    r = grid.r
    hat1 = solve_scalar(p, reduced_problem(p, ep.lam1, ep.lam2, "inner"), grid)
    hat2 = solve_scalar(p, reduced_problem(p, ep.lam1, ep.lam2, "outer"), grid)
    R = 0.5 * (ep.r1 + ep.r2)
    zeta = 1.0 - smoothstep((r - (R - delta)) / delta)
    eta1 = zeta * hat1
    dom = r <= R + delta
    tilde = np.full_like(r, np.nan)
    tilde[dom] = _checked_sqrt(ep.outer_potential(r[dom]) - p.g / p.g2 * eta1[dom] ** 2, r[dom],
                               "slaved outer component")
    w = 1.0 - smoothstep((r - R) / delta)
    eta2 = hat2.copy()
    eta2[dom] = w[dom] * tilde[dom] + (1.0 - w[dom]) * hat2[dom]
    return ApproxSolution(grid, ep, eta1, eta2, tilde, zeta, R, delta,
                          dict(inner=hat1, outer=hat2))


def _build_annulus(state, ep, prof, delta):
    p, grid = state.params, state.grid
    r = grid.r
    g1, g2, g = p.g1, p.g2, p.g
    hat1 = solve_scalar(p, reduced_problem(p, ep.lam1, ep.lam2, "inner"), grid)
    hat2p = solve_scalar(p, reduced_problem(p, ep.lam1, ep.lam2, "outer"), grid)
    hole = ScalarProblem(g2 - g * g / g1, hole_potential(ep, prof.r1 + delta - ep.r1), "hole")
    hat2m = solve_scalar(p, hole, grid)
    r_small = 0.5 * (ep.r2_inner + ep.r1)
    R = 0.5 * (ep.r1 + ep.r2)
    # inner component: slaved to the hole solution, blended into its own ground state,
    # then cut off at R as in the two-disk construction
    dom1 = r <= r_small + delta
    slave1 = np.full_like(r, np.nan)
    rad = (ep.lam1 - r[dom1] ** 2) / g1 - g / g1 * hat2m[dom1] ** 2
    slave1[dom1] = _checked_sqrt(rad, r[dom1], "slaved inner component")
    w_in = 1.0 - smoothstep((r - r_small) / delta)
    zeta = 1.0 - smoothstep((r - (R - delta)) / delta)
    eta1 = zeta * hat1
    eta1[dom1] = w_in[dom1] * slave1[dom1] + (1.0 - w_in[dom1]) * hat1[dom1]
    # outer component: hole solution, slaved piece, outer ground state
    dom2 = (r >= r_small) & (r <= R + delta)
    tilde = np.full_like(r, np.nan)
    tilde[dom2] = _checked_sqrt(ep.outer_potential(r[dom2]) - g / g2 * eta1[dom2] ** 2, r[dom2],
                                "slaved outer component")
    w_out = 1.0 - smoothstep((r - R) / delta)
    eta2 = hat2p.copy()
    eta2[r < r_small] = hat2m[r < r_small]
    band = (r >= r_small) & (r <= r_small + delta)
    eta2[band] = w_in[band] * hat2m[band] + (1.0 - w_in[band]) * tilde[band]
    mid = (r > r_small + delta) & (r <= R)
    eta2[mid] = tilde[mid]
    top = (r > R) & (r <= R + delta)
    eta2[top] = w_out[top] * tilde[top] + (1.0 - w_out[top]) * hat2p[top]
    return ApproxSolution(grid, ep, eta1, eta2, tilde, zeta, R, delta,
                          dict(inner=hat1, outer=hat2p, hole=hat2m), r_eps=r_small)


# -- residual ------------------------------------------------------------------

@dataclass
class Residual:
    E1: np.ndarray
    E2: np.ndarray
    norms: dict


def residual(approx: ApproxSolution) -> Residual:
    """Remainder of the rewritten system evaluated on the glued pair."""
    ep, grid = approx.eps_profile, approx.grid
    p = ep.params
    r = grid.r
    e2 = p.eps ** 2
    u, v = approx.eta1, approx.eta2
    a1, a2 = ep.a(1, r), ep.a(2, r)
    E1 = e2 * grid.neg_laplacian(u) + p.g1 * u * (u * u - a1) + p.g * u * (v * v - a2)
    E2 = e2 * grid.neg_laplacian(v) + p.g2 * v * (v * v - a2) + p.g * v * (u * u - a1)
    if approx.r_eps is None:
        inside = (r < approx.R_eps).astype(float)
    else:
        inside = ((r > approx.r_eps) & (r < approx.R_eps)).astype(float)
    norms = dict(
        E1=grid.norm(E1), E2=grid.norm(E2),
        E1_in=grid.norm(E1, inside), E1_out=grid.norm(E1, 1.0 - inside),
        E2_in=grid.norm(E2, inside), E2_out=grid.norm(E2, 1.0 - inside),
    )
    return Residual(E1, E2, norms)


# -- linearised operator ---------------------------------------------------------

def _region_inside(approx: ApproxSolution):
    r = approx.grid.r
    return r < approx.R_eps


def linearized_matrices(approx: ApproxSolution):
    """Symmetric stiffness-form matrix M of the linearisation, interleaved as
    (phi_0, psi_0, phi_1, psi_1, ...), and the plain mass weights."""
    ep, grid = approx.eps_profile, approx.grid
    p = ep.params
    r = grid.r
    e2 = p.eps ** 2
    u, v = approx.eta1, approx.eta2
    a1, a2 = ep.a(1, r), ep.a(2, r)
    w = grid.w
    p1 = p.g1 * (3 * u * u - a1) + p.g * (v * v - a2)
    p2 = p.g2 * (3 * v * v - a2) + p.g * (u * u - a1)
    q = 2 * p.g * u * v
    K = grid.stiffness().tocoo()
    n = grid.n
    rows = np.concatenate([2 * K.row, 2 * K.row + 1, 2 * np.arange(n), 2 * np.arange(n) + 1,
                           2 * np.arange(n), 2 * np.arange(n) + 1])
    cols = np.concatenate([2 * K.col, 2 * K.col + 1, 2 * np.arange(n), 2 * np.arange(n) + 1,
                           2 * np.arange(n) + 1, 2 * np.arange(n)])
    vals = np.concatenate([e2 * K.data, e2 * K.data, w * p1, w * p2, w * q, w * q])
    M = sp.csr_matrix((vals, (rows, cols)), shape=(2 * n, 2 * n))
    mass = np.empty(2 * n)
    mass[0::2] = w
    mass[1::2] = w
    return M, mass


def layer_weights(approx: ApproxSolution):
    """(phi, psi) weights: (eps^2/3, 1) inside R_eps and (1, eps^2/3) outside."""
    t = approx.eps_profile.params.eps ** (2.0 / 3.0)
    inside = _region_inside(approx)
    wp = np.where(inside, t, 1.0)
    wq = np.where(inside, 1.0, t)
    out = np.empty(2 * approx.grid.n)
    out[0::2] = wp
    out[1::2] = wq
    return out


def _start_vector(n):
    # fixed ARPACK start so repeated runs give bit-identical eigenvalues
    return np.random.default_rng(0).standard_normal(n)


def _smallest_generalized(M, B, k):
    """Smallest eigenvalues of M x = lam diag(B) x via the symmetric scaling."""
    s = 1.0 / np.sqrt(B)
    A = sp.diags(s) @ M @ sp.diags(s)
    A = 0.5 * (A + A.T)
    try:
        vals = spl.eigsh(A.tocsc(), k=k, sigma=-1.0, which="LM", return_eigenvectors=False,
                         tol=1e-12, v0=_start_vector(A.shape[0]))
    except Exception as exc:  # ARPACK failures surface as several exception types
        raise EigensolverFailure(str(exc)) from exc
    return np.sort(vals)


def linearized_spectrum(approx: ApproxSolution, k: int = 4) -> dict:
    M, mass = linearized_matrices(approx)
    asym = spl.norm(M - M.T, ord=np.inf)
    plain = _smallest_generalized(M, mass, k)
    weighted = _smallest_generalized(M, mass * layer_weights(approx), k)
    return dict(plain=plain, weighted=weighted, asymmetry=float(asym))


def triple_norm_gram(approx: ApproxSolution):
    """Gram matrix T with x^T T x = |||(phi, psi)|||^2 in interleaved order."""
    grid = approx.grid
    e2 = approx.eps_profile.params.eps ** 2
    K = grid.stiffness()
    P = sp.kron(K, sp.identity(2), format="csr")  # interleaved block-diagonal copy
    mass = np.repeat(grid.w, 2) * layer_weights(approx)
    return e2 * P + sp.diags(mass)


def coercivity_constant(approx: ApproxSolution) -> float:
    """Smallest eigenvalue of M relative to the triple-norm Gram matrix."""
    M, _ = linearized_matrices(approx)
    T = triple_norm_gram(approx).tocsc()
    try:
        vals = spl.eigsh(M.tocsc(), k=1, M=T, sigma=-1.0, which="LM", return_eigenvectors=False,
                         tol=1e-10, v0=_start_vector(M.shape[0]))
    except Exception as exc:
        raise EigensolverFailure(str(exc)) from exc
    return float(vals[0])


def triple_norm(approx: ApproxSolution, phi, psi) -> float:
    grid = approx.grid
    e2 = approx.eps_profile.params.eps ** 2
    t = approx.eps_profile.params.eps ** (2.0 / 3.0)
    inside = _region_inside(approx).astype(float)
    val = (e2 * (grid.dirichlet_energy(phi) + grid.dirichlet_energy(psi))
           + t * grid.norm(phi, inside) ** 2 + grid.norm(psi, inside) ** 2
           + grid.norm(phi, 1 - inside) ** 2 + t * grid.norm(psi, 1 - inside) ** 2)
    return math.sqrt(val)


def compare_to_true(approx: ApproxSolution, state: RadialState, away: float | None = None) -> dict:
    if approx.grid != state.grid:
        raise GridMismatch("approximation and state live on different grids")
    d1, d2 = state.eta1 - approx.eta1, state.eta2 - approx.eta2
    r = state.grid.r
    if away is None:
        away = approx.delta
    m = r >= away
    return dict(triple=triple_norm(approx, d1, d2),
                sup_away=float(max(np.abs(d1[m]).max(), np.abs(d2[m]).max())),
                sup=float(max(np.abs(d1).max(), np.abs(d2).max())))


def gluing_mismatch(approx: ApproxSolution) -> float:
    r = approx.grid.r
    m = (r >= approx.R_eps) & (r <= approx.R_eps + approx.delta)
    return float(np.max(np.abs(approx.scalars["outer"][m] - approx.eta2_tilde[m])))


def regime_of(approx: ApproxSolution):
    return classify(approx.eps_profile.params)
