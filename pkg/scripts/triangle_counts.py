"""Count lattice equilateral triangles with a vertex at the origin and compare with lambda^(d-3).

    python scripts/triangle_counts.py --dims 3,4,5,6 --lambda-max 24 --out results/triangles.csv
"""
import argparse
import csv
import io

from latavg.analysis import fit_slope
from latavg.grid import atomic_write_text
from latavg.lattice import CapacityError, enumerate_triangle_set


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", default="3,4,5,6")
    ap.add_argument("--lambda-max", type=int, default=24)
    ap.add_argument("--out")
    args = ap.parse_args()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dim", "lambda", "count", "count_over_power"])
    for d in (int(x) for x in args.dims.split(",")):
        rows = []
        for lam in range(2, args.lambda_max + 1, 2):
            try:
                n = len(enumerate_triangle_set(d, lam))
            except CapacityError:
                break
            ratio = n / lam ** (d - 3)
            w.writerow([d, lam, n, repr(ratio)])
            if n:
                rows.append((lam, n))
        slope = fit_slope(rows)[0] if len(rows) >= 2 else float("nan")
        print(f"d={d}: {len(rows)} nonempty even radii, fitted count growth {slope:.2f} (d-3 = {d - 3})")
    if args.out:
        atomic_write_text(args.out, buf.getvalue())
    else:
        print(buf.getvalue(), end="")


if __name__ == "__main__":
    main()
