"""Command line entry point: tf, painleve, solve, approx, aux, rotate, sweep, reproduce."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness
from .glue import build_approx, compare_to_true, linearized_spectrum, residual
from .painleve import shoot_hastings_mcleod, solve_hastings_mcleod
from .profiles import tf_profile
from .radial import energy_decomposition
from .rotation import (aux_functions, default_grid2d, detect_vortices, energy_split,
                       solve_rotating_2d)


def _write_csv(path: Path, header, columns):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([repr(float(x)) for x in row])


def _write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(harness._clean(obj), sort_keys=True, indent=2) + "\n")


def _params_block(args, cfg):
    if getattr(args, "eps", None) is None and args.cmd in ("solve", "approx", "aux"):
        args.eps = cfg.params.eps
    blk = cfg.params
    over = {k: getattr(args, k) for k in ("g1", "g2", "g") if getattr(args, k, None) is not None}
    return replace(blk, **over) if over else blk


def cmd_tf(args, cfg, out: Path) -> int:
    blk = _params_block(args, cfg)
    prof = tf_profile(blk.at(1.0))
    r = np.linspace(0.0, 1.1 * prof.r2, args.points)
    _write_csv(out / "tf.csv", ["r", "a1", "a2", "F10", "F20"],
               [r, prof.a(1, r), prof.a(2, r), prof.aux(1, r), prof.aux(2, r)])
    info = dict(regime=prof.regime.value, lam1=prof.lam1, lam2=prof.lam2, R1=prof.r1,
                R2_inner=prof.r2_inner, R2=prof.r2, masses=list(prof.masses))
    _write_json(out / "tf.json", info)
    print(json.dumps(harness._clean(info), indent=2))
    return 0


def cmd_painleve(args, cfg, out: Path) -> int:
    tab = solve_hastings_mcleod(L=args.L, n=args.n)
    _write_csv(out / "painleve.csv", ["s", "V", "dV"], [tab.s, tab.v, tab.v_prime])
    info = dict(L=tab.L, n=len(tab.s), V0=tab.value_at(0.0),
                max_residual=float(np.max(np.abs(tab.residual()))))
    if args.shoot:
        info["V0_shooting"], info["shooting_bracket"] = shoot_hastings_mcleod()
    _write_json(out / "painleve.json", info)
    print(json.dumps(harness._clean(info), indent=2))
    return 0


def cmd_solve(args, cfg, out: Path) -> int:
    blk = _params_block(args, cfg)
    st = harness.solve_state(blk, args.eps, cfg.grid, args.init)
    prof = tf_profile(st.params)
    _write_csv(out / "solve.csv", ["r", "eta1", "eta2", "sqrt_a1", "sqrt_a2"],
               [st.r, st.eta1, st.eta2, np.sqrt(prof.a(1, st.r)), np.sqrt(prof.a(2, st.r))])
    info = dict(eps=args.eps, n=st.grid.n, r_max=st.grid.r_max, lam1=st.lam1, lam2=st.lam2,
                lam1_limit=prof.lam1, lam2_limit=prof.lam2, masses=list(st.masses()),
                history={k: v for k, v in st.history.items() if not isinstance(v, (list, np.ndarray))},
                energy=energy_decomposition(st))
    _write_json(out / "solve.json", info)
    print(json.dumps(harness._clean(info), indent=2))
    return 0


def cmd_approx(args, cfg, out: Path) -> int:
    blk = _params_block(args, cfg)
    st = harness.solve_state(blk, args.eps, cfg.grid)
    ap = build_approx(st)
    res = residual(ap)
    _write_csv(out / "approx.csv", ["r", "eta1", "eta2", "approx1", "approx2", "E1", "E2"],
               [st.r, st.eta1, st.eta2, ap.eta1, ap.eta2, res.E1, res.E2])
    spec = linearized_spectrum(ap, k=2)
    info = dict(eps=args.eps, R_eps=ap.R_eps, delta=ap.delta, residual=res.norms,
                distance=compare_to_true(ap, st), eig_weighted=list(spec["weighted"]),
                eig_plain=list(spec["plain"]))
    _write_json(out / "approx.json", info)
    print(json.dumps(harness._clean(info), indent=2))
    return 0


def cmd_aux(args, cfg, out: Path) -> int:
    blk = _params_block(args, cfg)
    st = harness.solve_state(blk, args.eps, cfg.grid)
    ax = aux_functions(st)
    _write_csv(out / "aux.csv", ["r", "xi1", "xi2", "F1", "F2", "F10", "F20"],
               [ax.r, ax.xi1, ax.xi2, ax.F1, ax.F2, ax.F10, ax.F20])
    info = dict(eps=args.eps, sup_F0=ax.sup_F0, xi1_0=ax.xi1[0], xi2_0=ax.xi2[0])
    _write_json(out / "aux.json", info)
    print(json.dumps(harness._clean(info), indent=2))
    return 0


def cmd_rotate(args, cfg, out: Path) -> int:
    blk = _params_block(args, cfg)
    rc = cfg.rotation
    eps = rc.eps if args.eps is None else args.eps
    cells = rc.cells if args.cells is None else args.cells
    p = blk.at(eps)
    if args.omega is not None:
        omega = args.omega
        th = None
    else:
        frac = rc.omega_fraction if args.omega_fraction is None else args.omega_fraction
        omega, th = harness.rotation_omega(replace(cfg, rotation=replace(rc, eps=eps, omega_fraction=frac)), p)
    st = harness.solve_state(blk, eps, cfg.grid)
    grid = default_grid2d(p, cells=cells)
    max_iter = rc.max_iter if args.max_iter is None else args.max_iter
    fld = solve_rotating_2d(p, grid, omega, st, seed=cfg.seed, noise=rc.noise, tol=rc.tol,
                            max_iter=max_iter)
    vort = detect_vortices(fld, rc.density_floor)
    X, Y = grid.mesh()
    cols = [X.ravel(), Y.ravel()]
    for u in (fld.u1, fld.u2):
        cols += [np.abs(u.ravel()) ** 2, np.angle(u.ravel())]
    _write_csv(out / "rotate.csv", ["x", "y", "rho1", "phase1", "rho2", "phase2"], cols)
    still = solve_rotating_2d(p, grid, 0.0, st, noise=0.0, tol=rc.tol, max_iter=max_iter)
    eta = (np.abs(still.u1), np.abs(still.u2))
    split = energy_split(p, omega, eta, (fld.u1, fld.u2), grid)
    info = dict(eps=eps, cells=cells, omega=omega, converged=fld.converged, residual=fld.residual,
                iterations=fld.iterations, vortices=[dict(component=k, index=list(ij), winding=w,
                                                          position=list(xy))
                                                     for k, ij, w, xy in vort],
                E_omega=split.E_omega, E_zero=split.E_zero, F_omega=split.F_omega,
                splitting_gap=split.identity_gap)
    if th is not None:
        info.update(omega_star=th.omega_star, omega_leading=th.leading, omega0=th.omega0)
    _write_json(out / "rotate.json", info)
    print(json.dumps(harness._clean(info), indent=2))
    return 0 if fld.converged else 1


def cmd_sweep(args, cfg, out: Path) -> int:
    blk = _params_block(args, cfg)
    eps = tuple(args.eps) if args.eps else None
    cfg = replace(cfg, output=replace(cfg.output, dir=str(out)))
    rep = harness.run_sweep(cfg, blk=blk, eps_list=eps, threads=args.threads)
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {harness._short(c.observed)} (target {c.target})")
    return 0 if rep.passed else 1


def cmd_reproduce(args, cfg, out: Path) -> int:
    ids = list(harness.CRITERIA) if not args.criteria or args.criteria == ["all"] else args.criteria
    results = []
    for cid in ids:
        try:
            res = harness.reproduce(cid, cfg)
        except harness.UnknownCriterion:
            print(f"unknown criterion {cid!r}; known: {', '.join(harness.CRITERIA)}", file=sys.stderr)
            return 2
        results.append(res)
    _write_json(out / "reproduce.json", [
        dict(id=r.id, passed=r.passed, anchor=r.anchor, notes=r.notes,
             checks=[dict(name=c.name, observed=c.observed, target=c.target, passed=c.passed)
                     for c in r.checks]) for r in results])
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tfbec", description=__doc__)
    ap.add_argument("--config", help="TOML run configuration")
    ap.add_argument("--out", help="output directory (default: [output] dir of the config)")
    ap.add_argument("--threads", type=int, default=1, help="worker processes for eps sweeps")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def with_params(sp):
        sp.add_argument("--g1", type=float)
        sp.add_argument("--g2", type=float)
        sp.add_argument("--g", type=float)
        return sp

    sp = with_params(sub.add_parser("tf", help="limit profile, radii and chemical potentials"))
    sp.add_argument("--points", type=int, default=2001)
    sp = sub.add_parser("painleve", help="Hastings-McLeod table")
    sp.add_argument("--L", type=float, default=16.0)
    sp.add_argument("--n", type=int, default=80001)
    sp.add_argument("--shoot", action="store_true", help="also run the shooting oracle")
    sp = with_params(sub.add_parser("solve", help="coupled radial ground state"))
    sp.add_argument("--eps", type=float, help="default: [params] eps")
    sp.add_argument("--init", choices=("tf", "gaussian"), default="tf")
    sp = with_params(sub.add_parser("approx", help="glued approximation, residuals, spectrum"))
    sp.add_argument("--eps", type=float, help="default: [params] eps")
    sp = with_params(sub.add_parser("aux", help="auxiliary functions xi and F"))
    sp.add_argument("--eps", type=float, help="default: [params] eps")
    sp = with_params(sub.add_parser("rotate", help="2D rotating minimisation and vortex report"))
    sp.add_argument("--eps", type=float)
    sp.add_argument("--cells", type=int)
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--omega", type=float, help="absolute rotation speed")
    grp.add_argument("--omega-fraction", type=float, help="fraction of the critical speed")
    sp.add_argument("--max-iter", type=int)
    sp = with_params(sub.add_parser("sweep", help="eps sweep with rate fits"))
    sp.add_argument("--eps", type=float, nargs="+", help="override the configured sweep")
    sp = sub.add_parser("reproduce", help="run acceptance criteria by id (default: all)")
    sp.add_argument("criteria", nargs="*", help=", ".join(harness.CRITERIA))
    return ap


COMMANDS = dict(tf=cmd_tf, painleve=cmd_painleve, solve=cmd_solve, approx=cmd_approx, aux=cmd_aux,
                rotate=cmd_rotate, sweep=cmd_sweep, reproduce=cmd_reproduce)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = harness.load_config(args.config) if args.config else harness.RunConfig()
    except (OSError, harness.ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out if args.out else cfg.output.dir)
    try:
        return COMMANDS[args.cmd](args, cfg, out)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
