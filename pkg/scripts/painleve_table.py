"""Tabulate the Hastings-McLeod profile and compare the collocation and shooting routes."""
import argparse

import numpy as np

from tfbec.painleve import (check_cancellation, left_tail_fit, right_tail_log_slopes,
                            shoot_hastings_mcleod, solve_hastings_mcleod)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", type=float, default=16.0)
    ap.add_argument("--n", type=int, default=80001)
    args = ap.parse_args()
    tab = solve_hastings_mcleod(L=args.L, n=args.n)
    fine = solve_hastings_mcleod(L=args.L, n=2 * (args.n - 1) + 1)
    shot, half = shoot_hastings_mcleod()
    print(f"V(0) collocation   {tab.value_at(0.0):.12f}")
    print(f"V(0) refined       {fine.value_at(0.0):.12f}")
    print(f"V(0) shooting      {shot:.12f} +/- {half:.1e}")
    print(f"max residual       {np.max(np.abs(tab.residual())):.2e}")
    print(f"left tail exponent {left_tail_fit(tab).exponent:.3f}")
    print(f"cancellation exp.  {check_cancellation(tab).exponent:.3f}")
    print("right tail d(log V)/ds:", np.array2string(right_tail_log_slopes(tab), precision=3))
    print("\n     s          V           V'")
    for s in np.arange(-8.0, 8.01, 2.0):
        k = int(np.argmin(np.abs(tab.s - s)))
        print(f"{tab.s[k]:6.2f}  {tab.v[k]:.10f}  {tab.v_prime[k]:+.10f}")


if __name__ == "__main__":
    main()
