"""Ratio of the W-term to the quantum-determinant term against N."""

import argparse
import math

from twlab.chainops import ChainSpec, Open
from twlab.thermo import decay_ratio, log_slope


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--u", type=float, default=1.0)
    ap.add_argument("--sizes", default="6,8,10,12")
    ap.add_argument("--open", action="store_true", help="use the open chain with p=-1.2i, qbar=0.8i, xi=1")
    args = ap.parse_args()
    ns = [int(n) for n in args.sizes.split(",")]
    boundary = {"boundary": Open.from_qbar(-1.2j, 0.8j, 1.0)} if args.open else {}
    points = [decay_ratio(ChainSpec(n, **boundary), args.u) for n in ns]
    print(f"{'N':>4} {'measured':>12} {'predicted':>12}")
    for p in points:
        print(f"{p.n_sites:4d} {p.measured:12.6f} {p.predicted:12.6f}")
    per_site = 2 if args.open else 1
    slope = log_slope(ns, [p.measured for p in points])
    print(f"log-slope per site {slope:.5f}; "
          f"expected {per_site * math.log(math.tanh(math.pi * args.u / 2)):.5f}")


if __name__ == "__main__":
    main()
