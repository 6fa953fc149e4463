"""Tabulate the (1/p, 1/q) region where the truncated bilinear maximal scan is flat in lambda.

    python scripts/range_figure.py --dim 3 --out results/range_d3.csv
"""
import argparse

from latavg.analysis import lambda_grid, range_figure, resolve_threads
from latavg.grid import atomic_write_text, parse_family


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--inv-values", default="0.125,0.25,0.375,0.5,0.625,0.75,0.875")
    ap.add_argument("--lambda-max", type=int, default=48)
    ap.add_argument("--family", default="delta")
    ap.add_argument("--threads", type=int)
    ap.add_argument("--out")
    args = ap.parse_args()
    inv = [float(x) for x in args.inv_values.split(",")]
    fam = parse_family(args.family)
    text = range_figure(args.dim, inv, lambda_grid("linear", 2, args.lambda_max), fam, fam,
                        resolve_threads(args.threads))
    if args.out:
        atomic_write_text(args.out, text)
    # text grid: rows are 1/p, columns 1/q
    rows = [line.split(",") for line in text.splitlines()[1:]]
    cell = {(r[0], r[1]): r for r in rows}
    keys = sorted({r[0] for r in rows}, key=float)
    print("1/p \\ 1/q " + " ".join(f"{k:>7}" for k in keys))
    for a in keys:
        marks = []
        for b in keys:
            r = cell[a, b]
            mark = ("+" if r[5] == "true" else "-") if r[3] == "true" else "."
            marks.append(f"{mark:>7}")
        print(f"{a:>9} " + " ".join(marks))
    print("+ flat inside the stated range, - not flat inside it, . outside it")


if __name__ == "__main__":
    main()
