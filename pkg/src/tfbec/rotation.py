"""Auxiliary functions, rotation threshold, and the 2D rotating minimisation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dstn, idstn

from .params import PhysParams
from .profiles import TFProfile, tf_profile
from .radial import NonConvergence, RadialState

ALPHA = 1300.0
DENSITY_FLOOR = 1e-4


class DivisionUnderflow(ArithmeticError):
    pass


class NonPositiveThreshold(ValueError):
    pass


class MassDrift(RuntimeError):
    pass


class TailDivision(ArithmeticError):
    pass


# -- auxiliary functions --------------------------------------------------------

def tail_mass(grid, eta) -> np.ndarray:
    """xi(r_j) = int_{r_j}^inf s eta^2 ds, consistent with the mass quadrature.

    Node j owns the cell [r_j - h/2, r_j + h/2]; the integral from r_j picks up
    the cells beyond and the right half of cell j (all of cell 0)."""
    c = grid.w * eta ** 2 / (2.0 * math.pi)
    beyond = np.concatenate([np.cumsum(c[::-1])[::-1][1:], [0.0]])
    xi = beyond + 0.5 * c
    xi[0] = beyond[0] + c[0]
    return xi


@dataclass
class AuxFunctions:
    r: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    valid1: np.ndarray
    valid2: np.ndarray
    F10: np.ndarray
    F20: np.ndarray
    sup_F0: float
    f1: np.ndarray | None = None
    f2: np.ndarray | None = None

    def F(self, i):
        return self.F1 if i == 1 else self.F2

    def F0(self, i):
        return self.F10 if i == 1 else self.F20

    def valid(self, i):
        return self.valid1 if i == 1 else self.valid2


def _ratio(xi, eta, r, r_cap, floor=1e-200):
    eta2 = eta ** 2
    valid = (eta2 > floor) & (r <= r_cap)
    F = np.full_like(eta, np.nan)
    F[valid] = xi[valid] / eta2[valid]
    if valid.any():
        # beyond the usable tail report the last trusted value
        last = np.flatnonzero(valid)[-1]
        F[last + 1:] = F[last]
    return F, valid


def aux_functions(state: RadialState, prof: TFProfile | None = None, scalars=None) -> AuxFunctions:
    """F_i = xi_i / eta_i^2 on the usable part of the grid, with limits F_{i,0}.

    The wall at r_max bends eta down artificially, so values within three
    layer widths of it are excluded."""
    grid, p = state.grid, state.params
    if prof is None:
        prof = tf_profile(p)
    r = grid.r
    cap = grid.r_max - 3.0 * p.eps ** (2.0 / 3.0)
    xi1, xi2 = tail_mass(grid, state.eta1), tail_mass(grid, state.eta2)
    F1, v1 = _ratio(xi1, state.eta1, r, cap)
    F2, v2 = _ratio(xi2, state.eta2, r, cap)
    f = [None, None]
    if scalars is not None:
        for k, key in enumerate(("inner", "outer")):
            if key in scalars:
                f[k] = _ratio(tail_mass(grid, scalars[key]), scalars[key], r, cap)[0]
    return AuxFunctions(r, xi1, xi2, F1, F2, v1, v2, prof.aux(1, r), prof.aux(2, r),
                        sup_limit_aux(prof), f[0], f[1])


def sup_limit_aux(prof: TFProfile, n: int = 20001) -> float:
    r = np.linspace(0.0, prof.r2, n)
    return float(max(np.max(prof.aux(1, r)), np.max(prof.aux(2, r))))


@dataclass(frozen=True)
class Threshold:
    omega0: float
    sup_F0: float
    alpha: float
    eps: float

    @property
    def leading(self) -> float:
        """omega0 |log eps|."""
        return self.omega0 * abs(math.log(self.eps))

    @property
    def omega_star(self) -> float:
        le = abs(math.log(self.eps))
        return (le - (self.alpha + 1.0) * math.log(le)) * self.omega0


def omega_threshold(p: PhysParams, sup_F0: float | None = None, alpha: float = ALPHA,
                    strict: bool = True) -> Threshold:
    """Vortex-free rotation bound (|log eps| - (alpha+1) log|log eps|) / (2 sup F0).

    With strict=True a non-positive bound raises NonPositiveThreshold."""
    if sup_F0 is None:
        sup_F0 = sup_limit_aux(tf_profile(p))
    th = Threshold(1.0 / (2.0 * sup_F0), float(sup_F0), float(alpha), p.eps)
    if strict and th.omega_star <= 0:
        raise NonPositiveThreshold(
            f"bound is {th.omega_star:.4g} at eps={p.eps} with alpha={alpha}; "
            f"leading-order value omega0|log eps| = {th.leading:.4g}")
    return th


def coercivity_gamma(g1: float, g2: float, g: float) -> float:
    """Largest gamma with g <= sqrt(g1 - gamma) sqrt(g2 - gamma)."""
    return 0.5 * ((g1 + g2) - math.sqrt((g1 - g2) ** 2 + 4.0 * g * g))


# -- 2D grid and operators ------------------------------------------------------------

@dataclass(frozen=True)
class Grid2D:
    """Square [-half, half]^2 split into `cells` intervals per side; the
    cells - 1 interior nodes per side carry unknowns, the walls are Dirichlet."""

    cells: int
    half: float

    @property
    def n(self) -> int:
        return self.cells - 1

    @property
    def h(self) -> float:
        return 2.0 * self.half / self.cells

    @property
    def x(self) -> np.ndarray:
        return -self.half + self.h * np.arange(1, self.cells)

    def mesh(self):
        return np.meshgrid(self.x, self.x, indexing="ij")

    def symbol(self) -> np.ndarray:
        """Eigenvalues of the 5-point -Laplacian in the sine basis."""
        k = np.arange(1, self.cells)
        lam = (2.0 - 2.0 * np.cos(np.pi * k / self.cells)) / self.h ** 2
        return lam[:, None] + lam[None, :]

    def dot(self, a, b) -> float:
        return float(np.sum(np.real(np.conj(a) * b)) * self.h ** 2)

    def mass(self, u) -> float:
        return float(np.sum(np.abs(u) ** 2) * self.h ** 2)


def default_grid2d(p: PhysParams, cells: int = 256) -> Grid2D:
    return Grid2D(cells, 1.5 * tf_profile(p).r2)


def neg_lap(u, h):
    out = 4.0 * u
    out[..., 1:, :] -= u[..., :-1, :]
    out[..., :-1, :] -= u[..., 1:, :]
    out[..., :, 1:] -= u[..., :, :-1]
    out[..., :, :-1] -= u[..., :, 1:]
    return out / (h * h)


def _centered(u, h, axis):
    """Centred difference along the first (axis=0) or second spatial axis."""
    d = np.zeros_like(u)
    if axis == 0:
        d[..., 1:-1, :] = u[..., 2:, :] - u[..., :-2, :]
        d[..., 0, :] = u[..., 1, :]
        d[..., -1, :] = -u[..., -2, :]
    else:
        d[..., :, 1:-1] = u[..., :, 2:] - u[..., :, :-2]
        d[..., :, 0] = u[..., :, 1]
        d[..., :, -1] = -u[..., :, -2]
    return d / (2.0 * h)


def angular_derivative(u, X, Y, h):
    """x d_y - y d_x with centred differences (antisymmetric matrix)."""
    return X * _centered(u, h, 1) - Y * _centered(u, h, 0)


def dirichlet_energy_2d(u, h) -> float:
    """Sum over grid edges of |u_b - u_a|^2 including the wall edges (= int |grad u|^2)."""
    pad = np.pad(u, 1)
    dx = np.diff(pad, axis=0)[:, 1:-1]
    dy = np.diff(pad, axis=1)[1:-1, :]
    return float(np.sum(np.abs(dx) ** 2) + np.sum(np.abs(dy) ** 2))


@dataclass
class RotationField:
    grid: Grid2D
    params: PhysParams
    omega: float
    u1: np.ndarray
    u2: np.ndarray
    mu1: float
    mu2: float
    iterations: int
    residual: float
    converged: bool
    vortices: list = field(default_factory=list)

    def u(self, i):
        return self.u1 if i == 1 else self.u2


def gradient_2d(p: PhysParams, grid: Grid2D, omega: float, U, X, Y, R2):
    """2 eps^2 times the energy gradient; U stacks both components."""
    e2 = p.eps ** 2
    dens = np.abs(U) ** 2
    coup = np.stack([R2 + p.g1 * dens[0] + p.g * dens[1], R2 + p.g2 * dens[1] + p.g * dens[0]])
    G = e2 * neg_lap(U, grid.h) + coup * U
    if omega:
        G = G + 2.0 * e2 * omega * 1j * angular_derivative(U, X, Y, grid.h)
    return G


def energy_2d(p: PhysParams, grid: Grid2D, omega: float, u1, u2) -> dict:
    e2 = p.eps ** 2
    h = grid.h
    X, Y = grid.mesh()
    R2 = X * X + Y * Y
    dA = h * h
    n1, n2 = np.abs(u1) ** 2, np.abs(u2) ** 2
    kin = 0.5 * (dirichlet_energy_2d(u1, h) + dirichlet_energy_2d(u2, h))
    pot = np.sum(R2 * (n1 + n2)) * dA / (2 * e2)
    quart = (p.g1 * np.sum(n1 * n1) + p.g2 * np.sum(n2 * n2)) * dA / (4 * e2)
    cross = p.g * np.sum(n1 * n2) * dA / (2 * e2)
    rot = [grid.dot(u, 1j * angular_derivative(u, X, Y, h)) for u in (u1, u2)]
    total = kin + pot + quart + cross + omega * (rot[0] + rot[1])
    return dict(total=float(total), kinetic=kin, rotation=float(omega * (rot[0] + rot[1])),
                angular=[float(-x) for x in rot])


def radial_to_2d(state: RadialState, grid: Grid2D):
    X, Y = grid.mesh()
    rr = np.sqrt(X * X + Y * Y)
    u1 = np.interp(rr, state.r, state.eta1, right=0.0)
    u2 = np.interp(rr, state.r, state.eta2, right=0.0)
    return u1, u2


def solve_rotating_2d(p: PhysParams, grid: Grid2D, omega: float, init, seed: int = 0,
                      noise: float = 1e-3, tol: float = 1e-8, max_iter: int = 20000,
                      check_every: int = 20) -> RotationField:
    """Preconditioned projected gradient descent with Nesterov momentum.

    The preconditioner (sigma - eps^2 Lap)^{-1}, applied with sine transforms,
    uses sigma = max of the initial potential so that a unit step is stable.
    Momentum restarts whenever the step opposes the gradient. `init` is a
    RadialState (interpolated, plus seeded complex noise) or a pair of arrays."""
    if isinstance(init, RadialState):
        U = np.stack(radial_to_2d(init, grid)).astype(complex)
        if noise:
            rng = np.random.default_rng(seed)
            amp = noise * np.abs(U).max(axis=(1, 2), keepdims=True)
            U = U + amp * (rng.standard_normal(U.shape) + 1j * rng.standard_normal(U.shape))
    else:
        U = np.stack([np.asarray(a, dtype=complex) for a in init])
    e2 = p.eps ** 2
    X, Y = grid.mesh()
    R2 = X * X + Y * Y
    dA = grid.h ** 2

    def inner(A, B):
        return np.sum(np.real(np.conj(A) * B), axis=(1, 2), keepdims=True) * dA

    def normalise(A):
        return A / np.sqrt(inner(A, A))

    U = normalise(U)
    dens = np.abs(U) ** 2
    sigma = float(np.max(R2) + max(p.g1, p.g2) * dens.max() + p.g * dens.max())
    sym = sigma + e2 * grid.symbol()

    def precond(A):
        return idstn(dstn(A, type=1, axes=(1, 2)) / sym, type=1, axes=(1, 2))

    prev = U.copy()
    t = 1.0
    res = np.inf
    converged = False
    mu = np.zeros((2, 1, 1))
    it = 0
    for it in range(1, max_iter + 1):
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        Yk = normalise(U + ((t - 1.0) / t_next) * (U - prev))
        G = gradient_2d(p, grid, omega, Yk, X, Y, R2)
        mu = inner(Yk, G)
        D = precond(G - mu * Yk)
        D = D - inner(Yk, D) * Yk
        new = normalise(Yk - D)
        # gradient-based restart: drop momentum if the step went uphill
        if float(np.sum(inner(G - mu * Yk, new - U))) > 0:
            t = 1.0
            prev = U
            new = U
        else:
            prev = U
            t = t_next
        U = new
        if it % check_every == 0 or it == max_iter:
            G = gradient_2d(p, grid, omega, U, X, Y, R2)
            mu = inner(U, G)
            res = math.sqrt(float(np.sum(inner(G - mu * U, G - mu * U))))
            if not math.isfinite(res):
                raise NonConvergence("2D flow produced non-finite values")
            if res < tol:
                converged = True
                break
    masses = inner(U, U).ravel()
    if np.max(np.abs(masses - 1.0)) > 1e-10:
        raise MassDrift(f"masses drifted to {masses}")
    mu = mu.ravel()
    return RotationField(grid, p, omega, U[0], U[1], float(mu[0]), float(mu[1]), it, float(res),
                         converged)


# -- vortices -------------------------------------------------------------------------

def _wrap(a):
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def _loop_winding(ph, corners):
    tot = 0.0
    for a, b in zip(corners, corners[1:] + corners[:1]):
        tot = tot + _wrap(b - a)
    return np.rint(tot / (2.0 * np.pi)).astype(int)


def plaquette_winding(u, density_floor: float = DENSITY_FLOOR):
    """Winding number of arg(u) around each plaquette whose corners all exceed
    density_floor * max|u|^2; other plaquettes get 0."""
    ph = np.angle(u)
    w = _loop_winding(ph, [ph[:-1, :-1], ph[1:, :-1], ph[1:, 1:], ph[:-1, 1:]])
    ok = _above_floor(u, density_floor)
    mask = ok[:-1, :-1] & ok[1:, :-1] & ok[1:, 1:] & ok[:-1, 1:]
    return np.where(mask, w, 0)


def node_ring_winding(u, density_floor: float = DENSITY_FLOOR):
    """Winding around the 8-neighbour ring of nodes that fall below the floor
    while their whole ring stays above it. Catches a zero sitting exactly on
    a node, which no plaquette loop can see."""
    ph = np.angle(u)
    ok = _above_floor(u, density_floor)
    ring = [ph[:-2, :-2], ph[1:-1, :-2], ph[2:, :-2], ph[2:, 1:-1],
            ph[2:, 2:], ph[1:-1, 2:], ph[:-2, 2:], ph[:-2, 1:-1]]
    ring_ok = (ok[:-2, :-2] & ok[1:-1, :-2] & ok[2:, :-2] & ok[2:, 1:-1]
               & ok[2:, 2:] & ok[1:-1, 2:] & ok[:-2, 2:] & ok[:-2, 1:-1])
    w = _loop_winding(ph, ring)
    out = np.zeros(u.shape, dtype=int)
    out[1:-1, 1:-1] = np.where(ring_ok & ~ok[1:-1, 1:-1], w, 0)
    return out


def _above_floor(u, density_floor):
    dens = np.abs(u) ** 2
    return dens > density_floor * dens.max()


def detect_vortices(fld_or_pair, density_floor: float = DENSITY_FLOOR, grid: Grid2D | None = None):
    """List of (component, (i, j), winding, (x, y)) for nonzero windings.

    Plaquette windings are reported at the plaquette centre; node-centred
    zeros (see node_ring_winding) at the node itself."""
    if isinstance(fld_or_pair, RotationField):
        grid = fld_or_pair.grid
        comps = (fld_or_pair.u1, fld_or_pair.u2)
    else:
        comps = fld_or_pair
    out = []
    for k, u in enumerate(comps, start=1):
        for w, offset in ((plaquette_winding(u, density_floor), 0.5),
                          (node_ring_winding(u, density_floor), 0.0)):
            for i, j in zip(*np.nonzero(w)):
                if grid is not None:
                    xc = grid.x[i] + offset * grid.h
                    yc = grid.x[j] + offset * grid.h
                else:
                    xc = yc = float("nan")
                out.append((k, (int(i), int(j)), int(w[i, j]), (float(xc), float(yc))))
    return out


# -- energy splitting -----------------------------------------------------------------

def _edge_weighted(v, eta, h):
    """Sum over edges of eta_a eta_b |v_b - v_a|^2 with zero-padded walls."""
    vp, ep = np.pad(v, 1), np.pad(eta, 1)
    tot = 0.0
    for ax in (0, 1):
        dv = np.diff(vp, axis=ax)
        we = ep[:-1, :] * ep[1:, :] if ax == 0 else ep[:, :-1] * ep[:, 1:]
        sl = (slice(None), slice(1, -1)) if ax == 0 else (slice(1, -1), slice(None))
        tot += float(np.sum((we * np.abs(dv) ** 2)[sl]))
    return tot


def jacobian(v, h):
    """(i d1 v, d2 v) = Re(i d1 v * conj(d2 v)) with centred differences."""
    d1 = _centered(v, h, 0)
    d2 = _centered(v, h, 1)
    return np.real(1j * d1 * np.conj(d2))


@dataclass
class EnergyBreakdown:
    E_omega: float
    E_zero: float
    F_omega: float
    F_tilde: float
    rotation_term: float
    identity_gap: float
    excluded_mass: tuple


def energy_split(p: PhysParams, omega: float, eta_pair, u_pair, grid: Grid2D, F_pair=None,
                 density_floor: float = DENSITY_FLOOR) -> EnergyBreakdown:
    """E^Omega(u) against E^0(eta) + F^Omega(u / eta) on a 2D grid.

    eta must be the positive non-rotating minimiser on the same grid for the
    identity to close. F_pair holds the auxiliary functions sampled on the grid
    and is needed only for the Jacobian form."""
    e2 = p.eps ** 2
    h = grid.h
    dA = h * h
    X, Y = grid.mesh()
    eta1, eta2 = (np.asarray(e, float) for e in eta_pair)
    u1, u2 = u_pair
    if eta1.min() <= 0 or eta2.min() <= 0:
        raise TailDivision("eta vanishes on the grid; cannot form u / eta")
    v1, v2 = u1 / eta1, u2 / eta2
    Eo = energy_2d(p, grid, omega, u1, u2)
    E0 = energy_2d(p, grid, 0.0, eta1, eta2)["total"]
    F = 0.0
    for v, eta, gi in ((v1, eta1, p.g1), (v2, eta2, p.g2)):
        F += 0.5 * _edge_weighted(v, eta, h)
        F += gi / (4 * e2) * float(np.sum(eta ** 4 * (np.abs(v) ** 2 - 1) ** 2)) * dA
    F += p.g / (2 * e2) * float(np.sum(eta1 ** 2 * eta2 ** 2 * (1 - np.abs(v1) ** 2)
                                       * (1 - np.abs(v2) ** 2))) * dA
    F += Eo["rotation"]
    Ft = float("nan")
    excluded = (float("nan"), float("nan"))
    if F_pair is not None:
        gam = coercivity_gamma(p.g1, p.g2, p.g)
        Ft = 0.0
        exc = []
        for v, eta, Fi, u in ((v1, eta1, F_pair[0], u1), (v2, eta2, F_pair[1], u2)):
            keep = eta ** 2 > density_floor * np.max(eta ** 2)
            grad2 = (np.abs(_centered(v, h, 0)) ** 2 + np.abs(_centered(v, h, 1)) ** 2)
            integrand = 0.5 * eta ** 2 * (grad2 - 4 * omega * Fi * jacobian(v, h)) \
                + gam / (4 * e2) * eta ** 4 * (np.abs(v) ** 2 - 1) ** 2
            Ft += float(np.sum(integrand[keep])) * dA
            exc.append(float(np.sum(np.abs(u[~keep]) ** 2)) * dA)
        excluded = tuple(exc)
    gap = abs(Eo["total"] - E0 - F) / abs(Eo["total"])
    return EnergyBreakdown(Eo["total"], E0, F, Ft, Eo["rotation"], gap, excluded)


def radial_free_energy(state: RadialState, v1, v2) -> float:
    """F^0 for radial complex multipliers v_i on the radial grid (no rotation term)."""
    p, grid = state.params, state.grid
    e2 = p.eps ** 2
    tot = 0.0
    rp = (np.arange(grid.n) + 0.5) * grid.h
    for v, eta, gi in ((v1, state.eta1, p.g1), (v2, state.eta2, p.g2)):
        dv = np.diff(np.append(v, v[-1]))  # wall edge carries eta = 0
        we = eta * np.append(eta[1:], 0.0)
        tot += 0.5 * float(np.sum(2 * math.pi * rp / grid.h * we * np.abs(dv) ** 2))
        tot += gi / (4 * e2) * grid.dot(eta ** 4, (np.abs(v) ** 2 - 1) ** 2)
    tot += p.g / (2 * e2) * grid.dot(state.eta1 ** 2 * state.eta2 ** 2,
                                      (1 - np.abs(v1) ** 2) * (1 - np.abs(v2) ** 2))
    return tot


def rotation_bound_terms(p: PhysParams, fld: RotationField, prof: TFProfile | None = None) -> dict:
    """Both sides of the bound on the rotation term, evaluated on a field."""
    if prof is None:
        prof = tf_profile(p)
    grid = fld.grid
    h = grid.h
    X, Y = grid.mesh()
    rr = np.sqrt(X * X + Y * Y)
    om = fld.omega
    gm = p.gammas
    lhs = 0.0
    for u in (fld.u1, fld.u2):
        lhs += abs(om * grid.dot(u, 1j * angular_derivative(u, X, Y, h)))
    a10 = prof.inner_quadratic(1, rr)
    neg1 = np.where(rr >= prof.r1, np.maximum(-a10, 0.0), 0.0)
    comb = prof.inner_quadratic(2, rr) + p.g / p.g2 * a10
    neg2 = np.where(rr >= prof.r2, np.maximum(-comb, 0.0), 0.0)
    rhs = (dirichlet_energy_2d(fld.u1, h) + dirichlet_energy_2d(fld.u2, h)) / 4.0
    rhs += 2 * om ** 2 * (prof.r1 ** 2 + prof.r2 ** 2)
    rhs += 2 * om ** 2 * p.g1 * gm.gamma / gm.gamma2 * float(np.sum(neg1 * np.abs(fld.u1) ** 2)) * h * h
    rhs += 2 * om ** 2 * p.g2 * float(np.sum(neg2 * np.abs(fld.u2) ** 2)) * h * h
    return dict(lhs=lhs, rhs=rhs)
