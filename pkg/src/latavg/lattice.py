"""Lattice point counting and enumeration.

Counts r_d(n) = #{x in Z^d : |x|^2 = n} come from the one-dimensional
convolution recurrence r_d = r_{d-1} * r_1, in exact Python integers.
Enumeration builds points coordinate by coordinate with remaining-budget
pruning, so every list comes out in lexicographic order.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

Point = Tuple[int, ...]

DEFAULT_POINT_BUDGET = 10**8
# ceiling on the bytes of an enumerated tuple array, whatever the point budget
DEFAULT_BYTE_BUDGET = 2 * 2**30
DEFAULT_TABLE_BUDGET = 10**7  # table cells


class CapacityError(RuntimeError):
    """Raised when a table or enumeration would exceed its configured budget."""


class OutOfRangeError(IndexError):
    pass


@dataclass(frozen=True)
class CountTable:
    d_max: int
    n_max: int
    counts: Tuple[Tuple[int, ...], ...] = field(repr=False)

    def __call__(self, d: int, n: int) -> int:
        return sphere_count(d, n, self)

    def row(self, d: int) -> Tuple[int, ...]:
        if not 0 <= d <= self.d_max:
            raise OutOfRangeError(f"d={d} outside table (d_max={self.d_max})")
        return self.counts[d]


@dataclass(frozen=True)
class Shell:
    d: int
    n: int
    count: int
    points: Optional[np.ndarray] = field(default=None, repr=False, compare=False)


def build_count_table(d_max: int, n_max: int, budget: int = DEFAULT_TABLE_BUDGET) -> CountTable:
    if d_max < 1 or n_max < 0:
        raise ValueError("need d_max >= 1 and n_max >= 0")
    if (d_max + 1) * (n_max + 1) > budget:
        raise CapacityError(
            f"count table {d_max + 1}x{n_max + 1} exceeds budget of {budget} cells"
        )
    squares = [j * j for j in range(math.isqrt(n_max) + 1)]
    rows = [[1] + [0] * n_max]
    for _ in range(d_max):
        prev = rows[-1]
        cur = [0] * (n_max + 1)
        for n in range(n_max + 1):
            total = prev[n]
            for j in range(1, len(squares)):
                s = squares[j]
                if s > n:
                    break
                total += 2 * prev[n - s]
            cur[n] = total
        rows.append(cur)
    return CountTable(d_max, n_max, tuple(tuple(r) for r in rows))


def sphere_count(d: int, n: int, table: CountTable) -> int:
    if not 0 <= d <= table.d_max:
        raise OutOfRangeError(f"d={d} outside table (d_max={table.d_max})")
    if not 0 <= n <= table.n_max:
        raise OutOfRangeError(f"n={n} outside table (n_max={table.n_max})")
    return table.counts[d][n]


_table_lock = threading.Lock()
_shared_table: Optional[CountTable] = None


def shared_table(d: int, n: int) -> CountTable:
    """Process-wide table covering (d, n), grown on demand."""
    global _shared_table
    t = _shared_table
    if t is not None and d <= t.d_max and n <= t.n_max:
        return t
    with _table_lock:
        t = _shared_table
        if t is None or d > t.d_max or n > t.n_max:
            d_new = max(d, 10, t.d_max if t else 0)
            n_new = max(n, 256, 2 * t.n_max if t else 0)
            t = build_count_table(d_new, n_new)
            _shared_table = t
    return t


def r(d: int, n: int) -> int:
    """r_d(n) from the shared table; zero for negative n."""
    if n < 0:
        return 0
    return shared_table(d, n).counts[d][n]


def ball_count(d: int, n: int) -> int:
    if n < 0:
        return 0
    row = shared_table(d, n).counts[d]
    return sum(row[: n + 1])


# -- enumeration ---------------------------------------------------------------

def _enumerate(d: int, n: int, exact: bool, budget: int) -> Tuple[np.ndarray, np.ndarray]:
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    expected = r(d, n) if exact else ball_count(d, n)
    if expected > budget:
        raise CapacityError(f"{expected} points exceed point budget {budget}")
    R = math.isqrt(n)
    js = np.arange(-R, R + 1, dtype=np.int64)
    js2 = js * js
    pts = np.zeros((1, 0), dtype=np.int64)
    sums = np.zeros(1, dtype=np.int64)
    for level in range(d):
        cand = sums[:, None] + js2[None, :]
        if exact and level == d - 1:
            mask = cand == n
        else:
            mask = cand <= n
        # row-major nonzero keeps prefixes in order with j ascending: lexicographic
        pi, ji = np.nonzero(mask)
        pts = np.concatenate([pts[pi], js[ji][:, None]], axis=1)
        sums = cand[pi, ji]
    return pts, sums


def enumerate_sphere(d: int, n: int, budget: int = DEFAULT_POINT_BUDGET) -> Shell:
    pts, _ = _enumerate(d, n, True, budget)
    pts.setflags(write=False)
    return Shell(d, n, len(pts), pts)


def enumerate_ball(d: int, n: int, budget: int = DEFAULT_POINT_BUDGET) -> np.ndarray:
    """All points with |p|^2 <= n as an (m, d) array in lexicographic order."""
    pts, _ = _enumerate(d, n, False, budget)
    pts.setflags(write=False)
    return pts


_ball_lock = threading.Lock()
_ball_cache: dict = {}


def ball_shells(d: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Ball points grouped by squared norm.

    Returns ``(points, ptr)`` where the shell of squared radius m is
    ``points[ptr[m]:ptr[m + 1]]`` (lexicographic inside each shell).
    Balls are cached per dimension and smaller requests are served as prefixes.
    """
    cached = _ball_cache.get(d)
    if cached is None or cached[2] < n:
        with _ball_lock:
            cached = _ball_cache.get(d)
            if cached is None or cached[2] < n:
                pts, sums = _enumerate(d, n, False, DEFAULT_POINT_BUDGET)
                order = np.argsort(sums, kind="stable")
                pts = np.ascontiguousarray(pts[order])
                ptr = np.searchsorted(sums[order], np.arange(n + 2)).astype(np.int64)
                pts.setflags(write=False)
                ptr.setflags(write=False)
                cached = (pts, ptr, n)
                _ball_cache[d] = cached
    pts, ptr, _ = cached
    return pts[: ptr[n + 1]], ptr[: n + 2]


def shell_points(d: int, n: int) -> np.ndarray:
    pts, ptr = ball_shells(d, n)
    return pts[ptr[n]: ptr[n + 1]]


def enumerate_triangle_set(d: int, lam: int, budget: int = DEFAULT_POINT_BUDGET) -> np.ndarray:
    """Pairs (u, v) with |u|^2 = |v|^2 = 2 u.v = lam, as an (m, 2, d) array.

    Ordered lexicographically by (u, v).
    """
    return enumerate_simplex_set(d, lam, 2, budget)


def enumerate_simplex_set(d: int, lam: int, k: int, budget: int = DEFAULT_POINT_BUDGET) -> np.ndarray:
    """k-tuples of shell points with pairwise |u_i - u_j|^2 = lam, as (m, k, d)."""
    if d < 1 or lam < 1 or k < 2:
        raise ValueError("need d >= 1, lam >= 1, k >= 2")
    if lam % 2:
        return np.zeros((0, k, d), dtype=np.int64)
    shell = enumerate_sphere(d, lam, budget).points
    half = lam // 2
    adj = (shell @ shell.T) == half
    # grow index prefixes one vertex at a time; a row's candidates are the common neighbours
    # of its vertices, taken in ascending order, so rows stay lexicographic
    idx = np.arange(len(shell), dtype=np.int32)[:, None]
    for level in range(1, k):
        total = sum(int(m.sum()) for _, m in _common_neighbours(idx, adj))
        _check_tuple_budget(total, level + 1, d, budget)
        parts = []
        for rows, m in _common_neighbours(idx, adj):
            r_i, c_i = np.nonzero(m)
            parts.append(np.column_stack([rows[r_i], c_i.astype(np.int32)]))
        idx = np.concatenate(parts) if parts else np.zeros((0, level + 1), dtype=np.int32)
        if len(idx) == 0:
            return np.zeros((0, k, d), dtype=np.int64)
    out = shell[idx]
    out.setflags(write=False)
    return out


def _common_neighbours(idx: np.ndarray, adj: np.ndarray, rows_per_chunk: int = 4096):
    """(rows, mask) chunks: mask[j] marks shell points adjacent to every vertex of rows[j]."""
    for c0 in range(0, len(idx), rows_per_chunk):
        rows = idx[c0:c0 + rows_per_chunk]
        m = adj[rows[:, 0]].copy()
        for j in range(1, rows.shape[1]):
            m &= adj[rows[:, j]]
        yield rows, m


def _check_tuple_budget(count: int, k: int, d: int, budget: int) -> None:
    if count * k > budget:
        raise CapacityError(f"simplex set of {count} tuples exceeds point budget {budget}")
    if count * k * d * 8 > DEFAULT_BYTE_BUDGET:
        raise CapacityError(f"simplex set of {count} tuples exceeds {DEFAULT_BYTE_BUDGET} bytes")
