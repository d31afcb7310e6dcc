"""Radial ground states of the coupled two-component problem.

The radial Laplacian is a finite-volume stencil on nodes r_j = j h with cell
weights w_j = 2 pi r_j h (w_0 = pi h^2 / 4) and a Dirichlet wall one step past
the last node. With these weights the stiffness matrix K is symmetric, so
-Delta ~ W^{-1} K and discrete masses are exact weighted sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl
from scipy.linalg import solve_banded

from .params import PhysParams
from .profiles import EpsProfile, tf_profile


class GridTooCoarse(ValueError):
    pass


class NewtonDivergence(RuntimeError):
    pass


class NonConvergence(RuntimeError):
    pass


class NegativeDensity(RuntimeError):
    pass


@dataclass(frozen=True)
class RadialGrid:
    r_max: float
    n: int

    @property
    def h(self) -> float:
        return self.r_max / self.n

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    @property
    def w(self) -> np.ndarray:
        h = self.h
        w = 2.0 * math.pi * self.r * h
        w[0] = math.pi * h * h / 4.0
        return w

    def stiffness_bands(self) -> np.ndarray:
        """K in LAPACK banded storage (upper, diag, lower)."""
        h = self.h
        rp = (np.arange(self.n) + 0.5) * h  # r_{j+1/2}
        c = 2.0 * math.pi * rp / h  # coupling between j and j+1
        diag = c.copy()
        diag[1:] += c[:-1]
        ab = np.zeros((3, self.n))
        ab[0, 1:] = -c[:-1]
        ab[1] = diag
        ab[2, :-1] = -c[:-1]
        return ab

    def stiffness(self) -> sp.csr_matrix:
        ab = self.stiffness_bands()
        return sp.diags([ab[2, :-1], ab[1], ab[0, 1:]], [-1, 0, 1], format="csr")

    def neg_laplacian(self, u: np.ndarray) -> np.ndarray:
        return _band_matvec(self.stiffness_bands(), u) / self.w

    def dot(self, u, v) -> float:
        return float(np.sum(self.w * u * v))

    def norm(self, u, mask=None) -> float:
        w = self.w if mask is None else self.w * mask
        return math.sqrt(float(np.sum(w * u * u)))

    def dirichlet_energy(self, u) -> float:
        """int |grad u|^2 in the finite-volume sense."""
        d = np.diff(np.append(u, 0.0))
        rp = (np.arange(self.n) + 0.5) * self.h
        return float(np.sum(2.0 * math.pi * rp / self.h * d * d))

    def interpolate(self, r_other, u_other) -> np.ndarray:
        return np.interp(self.r, r_other, u_other, right=0.0)


def _band_matvec(ab, u):
    out = ab[1] * u
    out[:-1] += ab[0, 1:] * u[1:]
    out[1:] += ab[2, :-1] * u[:-1]
    return out


def default_grid(p: PhysParams, n: int | None = None, r_max: float | None = None,
                 min_resolution: int = 8, per_layer: float = 40.0, reach: float = 10.0,
                 min_n: int = 2000) -> RadialGrid:
    """Grid over [0, r_max] with r_max past the outer radius by `reach` layer widths
    and `per_layer` nodes per layer width eps^(2/3)."""
    prof = tf_profile(p)
    width = p.eps ** (2.0 / 3.0)
    if r_max is None:
        r_max = max(1.5 * prof.r2, prof.r2 + reach * width)
    if n is None:
        n = max(int(math.ceil(r_max / (width / per_layer))), min_n)
    grid = RadialGrid(float(r_max), int(n))
    if grid.h > width / min_resolution:
        raise GridTooCoarse(f"h = {grid.h:.3e} exceeds eps^(2/3)/{min_resolution} = "
                            f"{width / min_resolution:.3e}")
    return grid


@dataclass
class RadialState:
    params: PhysParams
    grid: RadialGrid
    eta1: np.ndarray
    eta2: np.ndarray
    lam1: float
    lam2: float
    history: dict = field(default_factory=dict)

    @property
    def r(self):
        return self.grid.r

    def eta(self, i: int) -> np.ndarray:
        return self.eta1 if i == 1 else self.eta2

    @property
    def eps_profile(self) -> EpsProfile:
        return EpsProfile(self.params, self.lam1, self.lam2)

    def masses(self):
        g = self.grid
        return g.dot(self.eta1, self.eta1), g.dot(self.eta2, self.eta2)


def _smooth_sqrt(a, width):
    # positive smoothing of sqrt(a^+) over a layer of the given width
    return np.sqrt(0.5 * (a + np.sqrt(a * a + width * width)))


def initial_guess(p: PhysParams, grid: RadialGrid, kind: str = "tf"):
    prof = tf_profile(p)
    r = grid.r
    if kind == "tf":
        kappa = p.eps ** (2.0 / 3.0)
        u1 = _smooth_sqrt(prof.a(1, r), kappa * 0.5)
        u2 = _smooth_sqrt(prof.a(2, r), kappa * 0.5)
    elif kind == "gaussian":
        u1 = np.exp(-r ** 2 / (2 * (0.5 * prof.r1) ** 2))
        u2 = np.exp(-r ** 2 / (2 * (0.5 * prof.r2) ** 2))
    else:
        raise ValueError(f"unknown initial guess {kind!r}")
    u1 = u1 / grid.norm(u1)
    u2 = u2 / grid.norm(u2)
    return u1, u2


def chemical_potentials(p: PhysParams, grid: RadialGrid, u1, u2):
    """Rayleigh quotients of the two coupled equations (unit masses assumed)."""
    e2 = p.eps ** 2
    r2 = grid.r ** 2
    m1, m2 = grid.dot(u1, u1), grid.dot(u2, u2)
    l1 = (e2 * grid.dirichlet_energy(u1) + grid.dot(u1 * (r2 + p.g1 * u1 ** 2 + p.g * u2 ** 2), u1)) / m1
    l2 = (e2 * grid.dirichlet_energy(u2) + grid.dot(u2 * (r2 + p.g2 * u2 ** 2 + p.g * u1 ** 2), u2)) / m2
    return l1, l2


def residuals(p: PhysParams, grid: RadialGrid, u1, u2, l1, l2):
    """Pointwise Euler-Lagrange residuals -eps^2 Lap u_i + (r^2 + ...) u_i - lam_i u_i."""
    e2 = p.eps ** 2
    r2 = grid.r ** 2
    f1 = e2 * grid.neg_laplacian(u1) + (r2 + p.g1 * u1 ** 2 + p.g * u2 ** 2 - l1) * u1
    f2 = e2 * grid.neg_laplacian(u2) + (r2 + p.g2 * u2 ** 2 + p.g * u1 ** 2 - l2) * u2
    return f1, f2


def energy(p: PhysParams, grid: RadialGrid, u1, u2) -> float:
    """Non-rotating energy of the radial pair (same quadrature as every other integral)."""
    e2 = p.eps ** 2
    r2 = grid.r ** 2
    kin = 0.5 * (grid.dirichlet_energy(u1) + grid.dirichlet_energy(u2))
    pot = grid.dot(r2, u1 ** 2 + u2 ** 2) / (2 * e2)
    quart = (p.g1 * grid.dot(u1 ** 2, u1 ** 2) + p.g2 * grid.dot(u2 ** 2, u2 ** 2)) / (4 * e2)
    cross = p.g * grid.dot(u1 ** 2, u2 ** 2) / (2 * e2)
    return kin + pot + quart + cross


@dataclass(frozen=True)
class SolverOptions:
    tau: float = 1.0
    flow_tol: float = 1e-7
    flow_max_iter: int = 20000
    window: int = 100
    newton: bool = True
    newton_tol: float = 1e-12
    newton_max_iter: int = 30


def gradient_flow(p: PhysParams, grid: RadialGrid, u1, u2, opts: SolverOptions = SolverOptions(),
                  record_energy: bool = False):
    """Projected semi-implicit flow; the Laplacian, trap and frozen nonlinear
    coefficients are implicit, then both components are renormalised."""
    e2 = p.eps ** 2
    r2 = grid.r ** 2
    K = grid.stiffness_bands()
    w = grid.w
    tau = opts.tau
    u1, u2 = u1.copy(), u2.copy()
    energies = []
    prev = None
    l1 = l2 = float("nan")
    it = 0
    converged = False
    for it in range(1, opts.flow_max_iter + 1):
        new = []
        for ui, uj, gi in ((u1, u2, p.g1), (u2, u1, p.g2)):
            coeff = r2 + gi * ui ** 2 + p.g * uj ** 2
            ab = e2 * K
            ab[1] = ab[1] + w * (1.0 / tau + coeff)
            v = solve_banded((1, 1), ab, w * ui / tau)
            new.append(v / grid.norm(v))
        u1, u2 = new
        if record_energy:
            energies.append(energy(p, grid, u1, u2))
        if it % opts.window == 0:
            l1, l2 = chemical_potentials(p, grid, u1, u2)
            cur = np.concatenate([u1, u2, [l1, l2]])
            if prev is not None:
                change = np.max(np.abs(cur - prev)) / max(1.0, np.max(np.abs(cur)))
                if change < opts.flow_tol:
                    converged = True
                    break
            prev = cur
    if not np.isfinite(u1).all() or not np.isfinite(u2).all():
        raise NonConvergence("gradient flow produced non-finite values")
    l1, l2 = chemical_potentials(p, grid, u1, u2)
    return u1, u2, l1, l2, dict(flow_iters=it, flow_converged=converged, energies=energies)


def newton_polish(p: PhysParams, grid: RadialGrid, u1, u2, l1, l2, opts: SolverOptions = SolverOptions()):
    """Newton on (eta1, eta2, lam1, lam2) with unit-mass constraints."""
    n = grid.n
    e2 = p.eps ** 2
    r2 = grid.r ** 2
    K = grid.stiffness()
    w = grid.w
    x = np.concatenate([u1, u2, [l1, l2]])
    for it in range(1, opts.newton_max_iter + 1):
        a, b, la, lb = x[:n], x[n:2 * n], x[2 * n], x[2 * n + 1]
        F1 = e2 * (K @ a) + w * (r2 + p.g1 * a * a + p.g * b * b - la) * a
        F2 = e2 * (K @ b) + w * (r2 + p.g2 * b * b + p.g * a * a - lb) * b
        c1 = 0.5 * (np.dot(w, a * a) - 1.0)
        c2 = 0.5 * (np.dot(w, b * b) - 1.0)
        J11 = e2 * K + sp.diags(w * (r2 + 3 * p.g1 * a * a + p.g * b * b - la))
        J22 = e2 * K + sp.diags(w * (r2 + 3 * p.g2 * b * b + p.g * a * a - lb))
        J12 = sp.diags(2 * p.g * w * a * b)
        col_a = sp.csr_matrix(-(w * a)[:, None])
        col_b = sp.csr_matrix(-(w * b)[:, None])
        z = sp.csr_matrix((n, 1))
        J = sp.bmat([
            [J11, J12, col_a, z],
            [J12, J22, z, col_b],
            [-col_a.T, None, None, None],
            [None, -col_b.T, None, None],
        ], format="csc")
        rhs = np.concatenate([F1, F2, [c1, c2]])
        dx = spl.spsolve(J, -rhs)
        if not np.isfinite(dx).all():
            raise NewtonDivergence("singular Newton system")
        x = x + dx
        step = np.max(np.abs(dx))
        if step > 10.0:
            raise NewtonDivergence(f"Newton step {step:.3e} too large")
        if step < opts.newton_tol:
            break
    else:
        raise NewtonDivergence(f"no convergence after {opts.newton_max_iter} Newton steps "
                               f"(last step {step:.3e})")
    return x[:n], x[n:2 * n], float(x[2 * n]), float(x[2 * n + 1]), dict(newton_iters=it)


def solve_coupled(p: PhysParams, grid: RadialGrid | None = None, init="tf",
                  opts: SolverOptions = SolverOptions(), record_energy: bool = False) -> RadialState:
    """Positive radial ground state. `init` is 'tf', 'gaussian', or a RadialState
    (interpolated onto the grid, useful for continuation in eps)."""
    if grid is None:
        grid = default_grid(p)
    if isinstance(init, RadialState):
        u1 = grid.interpolate(init.r, init.eta1)
        u2 = grid.interpolate(init.r, init.eta2)
        u1, u2 = u1 / grid.norm(u1), u2 / grid.norm(u2)
    else:
        u1, u2 = initial_guess(p, grid, init)
    u1, u2, l1, l2, hist = gradient_flow(p, grid, u1, u2, opts, record_energy)
    if opts.newton:
        u1, u2, l1, l2, nh = newton_polish(p, grid, u1, u2, l1, l2, opts)
        hist.update(nh)
    elif not hist["flow_converged"]:
        raise NonConvergence(f"flow did not converge in {opts.flow_max_iter} steps")
    tol = 1e-10
    if u1.min() < -tol or u2.min() < -tol:
        raise NegativeDensity(f"ground state has negative values ({u1.min():.2e}, {u2.min():.2e})")
    return RadialState(p, grid, u1, u2, l1, l2, hist)


# -- reduced scalar problems -------------------------------------------------

@dataclass(frozen=True)
class ScalarProblem:
    """-eps^2 Lap eta + c eta (eta^2 - A(r)) = 0 with a positive solution."""

    coeff: float
    potential: object  # callable r -> A(r)
    label: str = ""


def reduced_problem(p: PhysParams, lam1: float, lam2: float, which: str) -> ScalarProblem:
    prof = EpsProfile(p, lam1, lam2)
    gm = p.gammas
    if which == "inner":
        return ScalarProblem(p.g1 * gm.gamma, lambda r: prof.a(1, r), which)
    if which == "outer":
        return ScalarProblem(p.g2, prof.outer_potential, which)
    if which == "hole":
        return ScalarProblem(p.g2 - p.g * p.g / p.g1, hole_potential(prof), which)
    raise ValueError(f"unknown reduced problem {which!r}")


def hole_potential(prof: EpsProfile, delta: float | None = None):
    """a_{2,eps} up to R1_eps + delta, then a C^1 quadratic continuation that
    turns down and crosses zero near the outer radius."""
    r1, r_out = prof.r1, prof.r2
    if delta is None:
        delta = (r_out - r1) / 8.0
    rc = r1 + delta
    a_c = float(prof.a(2, rc))
    s_c = float(-2.0 * prof.params.gammas.gamma1 / (prof.params.g2 * prof.params.gammas.gamma) * rc)
    # A = a_c + s_c x - k x^2 with x = r - rc; pick k so A(r_out) = 0.
    x_out = r_out - rc
    k = (a_c + s_c * x_out) / (x_out * x_out)
    k = max(k, 1e-12)

    def A(r):
        r = np.asarray(r, dtype=float)
        x = r - rc
        return np.where(r <= rc, prof.a(2, r), a_c + s_c * x - k * x * x)

    return A


def solve_scalar(p: PhysParams, problem: ScalarProblem, grid: RadialGrid, init=None,
                 tol: float = 1e-12, max_iter: int = 60) -> np.ndarray:
    """Newton for the positive root, started from a smoothed sqrt(A^+)."""
    e2 = p.eps ** 2
    c = problem.coeff
    A = problem.potential(grid.r)
    K = grid.stiffness_bands()
    w = grid.w
    u = _smooth_sqrt(A, 0.5 * p.eps ** (2.0 / 3.0)) if init is None else np.array(init, float)
    # a few damped relaxation sweeps make the start robust
    for _ in range(50):
        ab = e2 * K
        ab[1] = ab[1] + w * (1.0 + c * (u * u))
        u = solve_banded((1, 1), ab, w * (u + c * A * u))
    for it in range(max_iter):
        F = e2 * _band_matvec(K, u) + w * c * u * (u * u - A)
        ab = e2 * K
        ab[1] = ab[1] + w * c * (3 * u * u - A)
        du = solve_banded((1, 1), ab, -F)
        u = u + du
        if np.max(np.abs(du)) < tol:
            break
    else:
        raise NewtonDivergence(f"scalar Newton did not converge (last step {np.max(np.abs(du)):.2e})")
    if u.min() < -1e-10:
        raise NegativeDensity(f"scalar solution went negative ({u.min():.2e})")
    return u


# -- energy bookkeeping ------------------------------------------------------

def energy_decomposition(state: RadialState):
    """Split the energy as (modified energy) + (constant) using the limit profiles.

    The modified energy gathers kinetic terms, quadratic deviations from the
    limit densities, and non-negative penalties outside the supports.
    """
    p, grid = state.params, state.grid
    prof = tf_profile(p)
    e2 = p.eps ** 2
    r = grid.r
    a1, a2 = prof.a(1, r), prof.a(2, r)
    u1s, u2s = state.eta1 ** 2, state.eta2 ** 2
    kin = 0.5 * (grid.dirichlet_energy(state.eta1) + grid.dirichlet_energy(state.eta2))
    dev = (p.g1 * grid.dot(u1s - a1, u1s - a1) + p.g2 * grid.dot(u2s - a2, u2s - a2)) / (4 * e2)
    cross = p.g * grid.dot(u1s - a1, u2s - a2) / (2 * e2)
    pen1 = r ** 2 + p.g1 * a1 + p.g * a2 - prof.lam1
    pen2 = r ** 2 + p.g2 * a2 + p.g * a1 - prof.lam2
    pen = (grid.dot(u1s, pen1) + grid.dot(u2s, pen2)) / (2 * e2)
    const = (prof.lam1 + prof.lam2) / (2 * e2) - (
        p.g1 * grid.dot(a1, a1) + p.g2 * grid.dot(a2, a2) + 2 * p.g * grid.dot(a1, a2)) / (4 * e2)
    # the same penalty written through the negative parts of the quadratics
    gm = p.gammas
    a10 = prof.inner_quadratic(1, r)
    if prof.regime.value != "disk-annulus":
        outside1 = r >= prof.r1
        outside2 = r >= prof.r2
        neg1 = np.where(outside1, np.maximum(-a10, 0.0), 0.0)
        comb = prof.inner_quadratic(2, r) + p.g / p.g2 * a10
        neg2 = np.where(outside2, np.maximum(-comb, 0.0), 0.0)
        pen_explicit = (p.g1 * gm.gamma * grid.dot(u1s, neg1)
                        + grid.dot(p.g * u1s + p.g2 * u2s, neg2)) / (2 * e2)
    else:
        pen_explicit = float("nan")
    modified = kin + dev + cross + pen
    return dict(energy=energy(p, grid, state.eta1, state.eta2), modified=modified, constant=const,
                penalty=pen, penalty_explicit=pen_explicit,
                identity_gap=abs(energy(p, grid, state.eta1, state.eta2) - modified - const))


def lagrange_rates(states):
    """|lam_eps - lam_0| against eps for a list of states."""
    rows = []
    for st in states:
        prof = tf_profile(st.params)
        rows.append((st.params.eps, abs(st.lam1 - prof.lam1), abs(st.lam2 - prof.lam2)))
    return np.array(rows)


def with_eps(state: RadialState, eps: float) -> PhysParams:
    return replace(state.params, eps=eps)
