"""Wall-clock comparison of the pair-by-pair and shell-product bilinear kernels."""
from __future__ import annotations

import csv
import io
import math
import statistics
import time
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ._box import Box
from .analysis import fit_slope
from .bilinear import Method, evaluate_runs, point_runs
from .grid import splitmix64

MIN_REPEATS = 5


@dataclass(frozen=True)
class BenchConfig:
    d: int
    lams: tuple
    methods: tuple = (Method.DIRECT, Method.SLICED)
    points: int = 1000
    repeats: int = MIN_REPEATS
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dim must be >= 1")
        if not self.lams:
            raise ValueError("empty lambda list")
        if any(lam < 1 for lam in self.lams):
            raise ValueError("lambda must be >= 1")
        if self.points < 1:
            raise ValueError("points must be >= 1")
        if self.repeats < MIN_REPEATS:
            raise ValueError(f"repeats must be >= {MIN_REPEATS}")


@dataclass(frozen=True)
class BenchRow:
    d: int
    lam: int
    method: str
    wall_nanos: int
    points: int


RUN_LENGTH = 128


def bench_points(d: int, count: int) -> np.ndarray:
    """count points in rows of RUN_LENGTH along the last axis, stacked along the second last."""
    side = min(count, RUN_LENGTH)
    if d == 1:
        return np.arange(count, dtype=np.int64).reshape(-1, 1)
    a, b = np.divmod(np.arange(count, dtype=np.int64), side)
    pts = np.zeros((count, d), dtype=np.int64)
    pts[:, -2], pts[:, -1] = a, b
    return pts


def _dense_random(size: int, seed: int) -> np.ndarray:
    bits = splitmix64(seed, np.arange(size, dtype=np.uint64))
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / 2**53)


def _setup(d: int, lam: int, count: int, seed: int):
    pts = bench_points(d, count)
    R = math.isqrt(lam)
    lo = pts.min(axis=0) - R
    box = Box(lo, tuple(int(s) for s in pts.max(axis=0) + R - lo + 1))
    starts, lens = point_runs(box, pts)
    F = _dense_random(box.size, seed)
    G = _dense_random(box.size, seed ^ 0x5DEECE66D)
    return F, G, box, starts, lens


def _warm_up() -> None:
    F, G, box, starts, lens = _setup(2, 2, 4, 0)
    for m in Method:
        evaluate_runs(F, G, box, starts, lens, 2, m)


def time_case(d: int, lam: int, method: Method, points: int, repeats: int, seed: int) -> BenchRow:
    """Median wall time over repeats of one kernel call (inputs built outside the timer)."""
    F, G, box, starts, lens = _setup(d, lam, points, seed)
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        evaluate_runs(F, G, box, starts, lens, lam, method)
        samples.append(time.perf_counter_ns() - t0)
    return BenchRow(d, lam, method.value, int(statistics.median(samples)), points)


def run_bench(cfg: BenchConfig) -> List[BenchRow]:
    _warm_up()
    rows = []
    for lam in cfg.lams:
        for m in cfg.methods:
            rows.append(time_case(cfg.d, lam, Method.parse(m), cfg.points, cfg.repeats, cfg.seed))
    return rows


def growth_exponent(rows: Sequence[BenchRow], method: str) -> float:
    """Fitted log-log slope of per-point wall time against lambda."""
    sel = [(row.lam, row.wall_nanos / row.points) for row in rows if row.method == method]
    return fit_slope(sel)[0]


def to_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dim", "lambda", "method", "wall_nanos", "points_evaluated"])
    for row in rows:
        w.writerow([row.d, row.lam, row.method, row.wall_nanos, row.points])
    return buf.getvalue()
