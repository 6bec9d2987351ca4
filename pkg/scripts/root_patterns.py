"""Ground-state zero-root patterns: periodic N-sweep and the open chain.

Writes one CSV per chain (re, im, family) and prints the string centers.
"""

import argparse
from pathlib import Path

from twlab.chainops import ChainSpec, Open
from twlab.cli import csv_text
from twlab.spectra import classify_strings, ground_state_polynomials


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="6,8,10,12", help="periodic chain lengths")
    ap.add_argument("--open-size", type=int, default=6)
    ap.add_argument("--out", default="root-patterns")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    specs = [ChainSpec(int(n)) for n in args.sizes.split(",")]
    specs.append(ChainSpec(args.open_size, boundary=Open.from_qbar(-1.2j, 0.8j, 1.0)))
    for spec in specs:
        lam, w = ground_state_polynomials(spec)
        rs = classify_strings(lam, w, spec)
        rows = [(r.real, r.imag, "z") for r in rs.z_roots()] + [(r.real, r.imag, "w") for r in rs.w_roots()]
        tag = f"{'open' if spec.is_open else 'periodic'}_N{spec.n_sites}"
        (out / f"{tag}.csv").write_text(csv_text(("re", "im", "family"), rows))
        centers = ", ".join(f"{c:+.4f}" for c in sorted(rs.z_centers))
        extra = f"  z1={rs.boundary_z:.4f} chi={rs.boundary_w[0]:.4f},{rs.boundary_w[1]:.4f}" if spec.is_open else ""
        print(f"{tag:14s} z-string centers [{centers}]{extra}")


if __name__ == "__main__":
    main()
