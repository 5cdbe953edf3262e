"""Run the standard sweep battery and write one JSON report per check.

    python3 scripts/verify_suite.py --seed 0 --out out/suite
"""
import argparse
import sys

from nhcalc.suite import default_suite, run_suite, with_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=64)
    ap.add_argument("--N", type=int, nargs="+", default=None, help="override the truncation sweep")
    ap.add_argument("--out", default="out/suite")
    args = ap.parse_args()
    entries = default_suite(args.seed, args.count)
    if args.N:
        entries = with_sweep(entries, args.N)
    reports = run_suite(entries, args.out)
    bad = 0
    for name, rep in reports.items():
        print(f"{name:30s} {rep.status:20s} max_ratio={rep.max_ratio:.4g} growth={rep.growth_factor:.3f}")
        bad += rep.status != "pass"
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
