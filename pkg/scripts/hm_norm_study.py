"""Hormander-Mihlin norm of sample profiles: the r-profile and quadrature refinement.

Profiles decaying like (1+w^2)^(-k) are finite for s - Q_m/2 <= 2k; slower decay is flagged.
"""
import argparse
import csv
from pathlib import Path

from nhcalc.symbols import HMResolution, SymbolSpec, hm_norm

PROFILES = ("(1+w^2)^(-1/2)", "1/(1+w^2)", "(1+w^2)^(-2)", "exp(-w)")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--s", type=float, default=2.0)
    ap.add_argument("--Q_m", type=float, default=1.0)
    ap.add_argument("--out", default="out/hm_profiles.csv")
    args = ap.parse_args()
    rows = []
    for text in PROFILES:
        spec = SymbolSpec("pseudo_multiplier", text)
        base = hm_norm(spec, args.s, args.Q_m)
        fine = hm_norm(spec, args.s, args.Q_m, HMResolution().refined())
        change = abs(fine.value - base.value) / base.value if base.value else 0.0
        print(f"{text:18s} value={base.value:.6g} divergent={base.divergent} refinement_change={change:.1e}")
        rows += [(text, r, v) for r, v in base.profile]
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["profile", "r", "value"])
        wr.writerows(rows)


if __name__ == "__main__":
    main()
