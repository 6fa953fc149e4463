"""Linear averaging operators over lattice spheres and balls, and their maxima."""
from __future__ import annotations

import enum
import math
from typing import Iterable, Sequence, Union

import numpy as np

from . import _kernels as K
from ._box import ball_offsets, dilated_box, from_dense, value_dtype
from .grid import GridFunction, ModeError, ValueMode
from .lattice import ball_count, r


class Normalization(enum.Enum):
    EXACT = "exact"
    POWER = "power"
    UNNORM = "unnorm"

    @classmethod
    def parse(cls, value: Union["Normalization", str]) -> "Normalization":
        return value if isinstance(value, cls) else cls(str(value).lower())


def require_float(norm: Normalization, *fs: GridFunction) -> None:
    if norm is not Normalization.UNNORM:
        for f in fs:
            if f.mode is not ValueMode.FLOAT:
                raise ModeError(f"{norm.value} normalization needs float-mode input")


def _check_int_range(f: GridFunction, multiplier: int) -> None:
    if f.mode is ValueMode.INT and not f.is_zero:
        if int(np.abs(f.values).max()) * multiplier >= 2**63:
            raise OverflowError("exact sum could exceed int64")


class DenseWorkspace:
    """Shared box, ball offsets and scattered arrays for several functions at one radius."""

    def __init__(self, fs: Sequence[GridFunction], n: int, extra_radius: int = 0):
        self.d = fs[0].d
        self.n = n
        self.box = dilated_box(fs, math.isqrt(n) + extra_radius)
        if self.box is not None:
            self.offs, self.ptr = ball_offsets(self.box, self.d, n)

    def support(self, f: GridFunction):
        return np.ascontiguousarray(self.box.flat(f.coords)), np.ascontiguousarray(f.values)

    def dense(self, f: GridFunction) -> np.ndarray:
        out = np.zeros(self.box.size, dtype=value_dtype(f.mode))
        idx, val = self.support(f)
        out[idx] = val
        return out

    def shell_sum(self, f: GridFunction, lo: int, hi: int = None) -> np.ndarray:
        """Dense sum of f over offsets with lo <= |u|^2 <= hi (hi defaults to lo)."""
        hi = lo if hi is None else hi
        out = np.zeros(self.box.size, dtype=value_dtype(f.mode))
        if not f.is_zero and hi >= lo:
            idx, val = self.support(f)
            K.scatter_sum(idx, val, self.offs, self.ptr[lo], self.ptr[hi + 1], out)
        return out

    def shell_maximum(self, f: GridFunction, rhos: Sequence[int], weights: Sequence[float]) -> np.ndarray:
        """Pointwise max over rho of weight * shell sum; radii missing x count as zero."""
        size = self.box.size
        best = np.zeros(size, dtype=np.float64)
        rhos = np.asarray(rhos, dtype=np.int64)
        if f.is_zero or not len(rhos):
            return best
        hits = np.zeros(size, dtype=np.int64)
        buf = np.zeros(size, dtype=np.float64)
        mark = np.zeros(size, dtype=np.bool_)
        cap = len(f) * int(max(self.ptr[q + 1] - self.ptr[q] for q in rhos))
        touched = np.empty(min(size, max(cap, 1)), dtype=np.int64)
        idx, val = self.support(f)
        K.shell_max(idx, val.astype(np.float64), self.offs, self.ptr, rhos,
                    np.asarray(weights, dtype=np.float64), buf, mark, touched, best, hits)
        partial = hits < len(rhos)
        best[partial] = np.maximum(best[partial], 0.0)
        return best

    def to_function(self, buf: np.ndarray, mode: ValueMode) -> GridFunction:
        return from_dense(self.box, buf, mode, self.d)


def spherical_constant(d: int, lam: int, norm: Normalization) -> float:
    if norm is Normalization.EXACT:
        return r(d, lam)
    if norm is Normalization.POWER:
        return lam ** (d / 2 - 1)
    return 1


def ball_constant(d: int, lam: int, norm: Normalization) -> float:
    if norm is Normalization.EXACT:
        return ball_count(d, lam)
    if norm is Normalization.POWER:
        if lam == 0:
            raise ZeroDivisionError("power-law ball normalization is undefined at radius 0")
        return lam ** (d / 2)
    return 1


def _normalized(ws: DenseWorkspace, buf: np.ndarray, c, mode: ValueMode) -> GridFunction:
    if c == 0:
        return GridFunction.zero(ws.d, mode)
    if c != 1:
        buf = buf / c
    return ws.to_function(buf, mode)


def spherical_average(f: GridFunction, lam: int, norm: Union[Normalization, str] = Normalization.EXACT) -> GridFunction:
    norm = Normalization.parse(norm)
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    require_float(norm, f)
    c = spherical_constant(f.d, lam, norm)
    if f.is_zero or r(f.d, lam) == 0:
        return GridFunction.zero(f.d, f.mode)
    _check_int_range(f, r(f.d, lam))
    ws = DenseWorkspace([f], lam)
    return _normalized(ws, ws.shell_sum(f, lam), c, f.mode)


def ball_average(f: GridFunction, lam: int, norm: Union[Normalization, str] = Normalization.EXACT) -> GridFunction:
    norm = Normalization.parse(norm)
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    require_float(norm, f)
    c = ball_constant(f.d, lam, norm)
    if f.is_zero:
        return GridFunction.zero(f.d, f.mode)
    _check_int_range(f, ball_count(f.d, lam))
    ws = DenseWorkspace([f], lam)
    return _normalized(ws, ws.shell_sum(f, 0, lam), c, f.mode)


def _maximal(f: GridFunction, rhos: Sequence[int], weights: Sequence[float]) -> GridFunction:
    require_float(Normalization.EXACT, f)
    if f.is_zero:
        return GridFunction.zero(f.d, f.mode)
    ws = DenseWorkspace([f], max(rhos))
    return ws.to_function(ws.shell_maximum(f, rhos, weights), f.mode)


def dyadic_block(big_lambda: int) -> range:
    """Radii grouped with Lambda in the dyadic maximal operator: [Lambda, 2 Lambda)."""
    return range(big_lambda, 2 * big_lambda)


def dyadic_maximal(g: GridFunction, big_lambda: int) -> GridFunction:
    """sup over lam in [Lambda, 2 Lambda) of lam^(1 - d/2) times the lam-shell sum."""
    if big_lambda < 1:
        raise ValueError("Lambda must be >= 1")
    rhos = list(dyadic_block(big_lambda))
    return _maximal(g, rhos, [q ** (1 - g.d / 2) for q in rhos])


def _exact_weights(d: int, rhos: Iterable[int]):
    return [1.0 / r(d, q) if r(d, q) else 0.0 for q in rhos]


def truncated_spherical_maximal(f: GridFunction, lam_max: int) -> GridFunction:
    if lam_max < 1:
        raise ValueError("lambda_max must be >= 1")
    rhos = list(range(1, lam_max + 1))
    return _maximal(f, rhos, _exact_weights(f.d, rhos))


def lacunary_radii(lam_max: int) -> list:
    out, q = [], 1
    while q <= lam_max:
        out.append(q)
        q *= 2
    return out


def lacunary_maximal(f: GridFunction, lam_max: int) -> GridFunction:
    if lam_max < 1:
        raise ValueError("lambda_max must be >= 1")
    rhos = lacunary_radii(lam_max)
    return _maximal(f, rhos, _exact_weights(f.d, rhos))
