"""Run the eps sweep for the default couplings and the annulus couplings.

    python scripts/run_sweep.py [--config configs/default.toml] [--threads 3] [--out out/sweep]
"""
import argparse
from dataclasses import replace
from pathlib import Path

from tfbec import harness


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="out/sweep")
    args = ap.parse_args()
    cfg = harness.load_config(args.config) if args.config else harness.RunConfig()
    for label, blk in (("two-disk", cfg.params), ("annulus", cfg.annulus)):
        out = Path(args.out) / label
        rep = harness.run_sweep(replace(cfg, output=replace(cfg.output, dir=str(out))), blk=blk,
                                threads=args.threads)
        print(f"== {label} ({rep.regime}), eps = {rep.eps_list} -> {out}")
        for key, fit in rep.slopes.items():
            print(f"  {key:14s} slope {fit['slope']:+.3f}  rms {fit['residual']:.2e}")
        for c in rep.checks:
            if not c.passed:
                print(f"  FAIL {c.name}: {harness._short(c.observed)} (target {c.target})")


if __name__ == "__main__":
    main()
