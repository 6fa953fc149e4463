"""Fitted slopes of sup LHS/RHS for the sliced identity and the dyadic domination bound.

    python scripts/gap_slopes.py --dims 3,4,5 --seeds 1,2,3
"""
import argparse
import math

from latavg.analysis import ScanTarget, lambda_grid, resolve_threads, run_scan
from latavg.grid import RandomSparse


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", default="3,4,5")
    ap.add_argument("--seeds", default="1,2,3")
    ap.add_argument("--lambda-max", type=int, default=128)
    ap.add_argument("--threads", type=int)
    args = ap.parse_args()
    threads = resolve_threads(args.threads)
    grid = lambda_grid("dyadic", 8, args.lambda_max)
    print(f"{'target':10} {'dim':>3} {'seed':>4} {'slope':>8} {'sup ratio':>10}")
    for name in ("prop1gap", "thm2gap"):
        for d in (int(x) for x in args.dims.split(",")):
            for seed in (int(x) for x in args.seeds.split(",")):
                rep = run_scan(ScanTarget(name, d), RandomSparse(seed), RandomSparse(seed + 100), grid,
                               threads=threads)
                top = max(row.ratio for row in rep.rows)
                slope = "nan" if math.isnan(rep.fitted_slope) else f"{rep.fitted_slope:+.4f}"
                print(f"{name:10} {d:3d} {seed:4d} {slope:>8} {top:10.4f}", flush=True)


if __name__ == "__main__":
    main()
