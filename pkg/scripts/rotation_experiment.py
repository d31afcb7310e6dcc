"""Rotating 2D minimisation below the critical speed, from a noisy start and from
an imprinted vortex, with energies, windings and the energy splitting."""
import argparse

import numpy as np

from tfbec.harness import RunConfig, rotation_omega, solve_state
from tfbec.rotation import (default_grid2d, detect_vortices, energy_2d, energy_split,
                            radial_to_2d, solve_rotating_2d)


def report(label, p, grid, omega, fld, eta):
    E = energy_2d(p, grid, omega, fld.u1, fld.u2)["total"]
    split = energy_split(p, omega, eta, (fld.u1, fld.u2), grid)
    vort = [(k, w, tuple(round(c, 3) for c in xy)) for k, _, w, xy in detect_vortices(fld)]
    print(f"{label:10s} E = {E:.6f}  F = {split.F_omega:.3e}  gap = {split.identity_gap:.1e}  "
          f"iters = {fld.iterations}  converged = {fld.converged}  vortices = {vort}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=128)
    ap.add_argument("--eps", type=float)
    args = ap.parse_args()
    cfg = RunConfig()
    eps = cfg.rotation.eps if args.eps is None else args.eps
    p = cfg.params.at(eps)
    omega, th = rotation_omega(cfg, p)
    print(f"eps = {eps}, omega0 = {th.omega0:.4f}, threshold = {th.omega_star:.4g}, "
          f"leading = {th.leading:.4f}, Omega = {omega:.4f}")
    st = solve_state(cfg.params, eps, cfg.grid)
    grid = default_grid2d(p, cells=args.cells)
    still = solve_rotating_2d(p, grid, 0.0, st, noise=0.0, tol=1e-10)
    eta = (np.abs(still.u1), np.abs(still.u2))
    noisy = solve_rotating_2d(p, grid, omega, st, seed=cfg.seed, noise=cfg.rotation.noise)
    report("noisy", p, grid, omega, noisy, eta)
    X, Y = grid.mesh()
    u1, u2 = radial_to_2d(st, grid)
    phase = (X + 1j * Y) / np.maximum(np.hypot(X, Y), 1e-300)
    for comp in (1, 2):
        init = (u1 * phase, u2) if comp == 1 else (u1, u2 * phase)
        fld = solve_rotating_2d(p, grid, omega, init)
        report(f"imprint {comp}", p, grid, omega, fld, eta)


if __name__ == "__main__":
    main()
