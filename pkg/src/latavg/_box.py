"""Dense index boxes used by the scatter engine."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .grid import GridFunction, ValueMode
from .lattice import CapacityError, ball_shells

DEFAULT_BOX_BUDGET = 10**8


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    shape: tuple

    @property
    def strides(self) -> np.ndarray:
        s = np.ones(len(self.shape), dtype=np.int64)
        for j in range(len(self.shape) - 2, -1, -1):
            s[j] = s[j + 1] * self.shape[j + 1]
        return s

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def flat(self, coords: np.ndarray) -> np.ndarray:
        return (coords - self.lo) @ self.strides

    def coords(self, flat: np.ndarray) -> np.ndarray:
        idx = np.stack(np.unravel_index(flat, self.shape), axis=1).astype(np.int64)
        return idx + self.lo


def dilated_box(fs: Sequence[GridFunction], radius: int, budget: int = DEFAULT_BOX_BUDGET) -> Optional[Box]:
    """Bounding box of the union of supports, grown by radius on every side."""
    boxes = [f.support_box for f in fs if not f.is_zero]
    if not boxes:
        return None
    lo = np.min([b[0] for b in boxes], axis=0) - radius
    hi = np.max([b[1] for b in boxes], axis=0) + radius
    shape = tuple(int(s) for s in hi - lo + 1)
    box = Box(lo.astype(np.int64), shape)
    if box.size > budget:
        raise CapacityError(f"working box of {box.size} cells exceeds budget {budget}")
    return box


def dilations_meet(f: GridFunction, g: GridFunction, radius: int) -> bool:
    bf, bg = f.support_box, g.support_box
    if bf is None or bg is None:
        return False
    return bool(np.all(bf[0] - radius <= bg[1] + radius) and np.all(bg[0] - radius <= bf[1] + radius))


def ball_offsets(box: Box, d: int, n: int):
    """Flat offsets of the ball |u|^2 <= n, grouped by squared norm, plus its ptr."""
    pts, ptr = ball_shells(d, n)
    return np.ascontiguousarray(pts @ box.strides), np.ascontiguousarray(ptr)


@functools.lru_cache(maxsize=64)
def _lex_ball(d: int, n: int):
    pts, ptr = ball_shells(d, n)
    norms = np.repeat(np.arange(n + 1, dtype=np.int64), np.diff(ptr))
    order = np.lexsort(pts.T[::-1])
    return np.ascontiguousarray(pts[order]), np.ascontiguousarray(norms[order])


def lex_ball_offsets(box: Box, d: int, n: int):
    """Flat offsets of the ball |u|^2 <= n in lexicographic order, with their squared norms.

    Lexicographic order matches flat order whenever the box is wide enough to hold the ball.
    """
    pts, norms = _lex_ball(d, n)
    return np.ascontiguousarray(pts @ box.strides), norms


def from_dense(box: Box, buf: np.ndarray, mode: ValueMode, d: int,
               flat: Optional[np.ndarray] = None) -> GridFunction:
    """GridFunction from nonzero cells of buf (restricted to flat if given)."""
    if flat is None:
        flat = np.flatnonzero(buf)
    else:
        flat = np.sort(flat)
        flat = flat[buf[flat] != 0]
    # flat order over a C-ordered box is lexicographic in coordinates
    return GridFunction(d, box.coords(flat), buf[flat], mode, _canonical=True)


def value_dtype(mode: ValueMode):
    return np.int64 if mode is ValueMode.INT else np.float64
