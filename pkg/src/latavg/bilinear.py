"""Bilinear spherical average T_lam(f, g)(x) = sum_{|u|^2 + |v|^2 = lam} f(x - u) g(x - v) / c.

Two whole-function evaluators share one scatter layout. The sliced one
multiplies per-radius shell sums; the direct one takes every pair product
separately. Both are exact in int mode and agree bit for bit there.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import _kernels as K
from ._box import Box, ball_offsets, dilations_meet, from_dense, lex_ball_offsets, value_dtype
from .averages import DenseWorkspace, Normalization, dyadic_block, require_float
from .grid import GridFunction, ValueMode, check_same
from .lattice import CapacityError, r

DEFAULT_CHUNK = 256


class Method(enum.Enum):
    DIRECT = "direct"
    SLICED = "sliced"

    @classmethod
    def parse(cls, value) -> "Method":
        return value if isinstance(value, cls) else cls(str(value).lower())


@dataclass(frozen=True)
class BilinearResult:
    value: GridFunction
    method: Method
    norm: Normalization
    lam: int
    d: int
    empty_normalizer: bool = False  # exact normalization with N(lam) = 0
    pair_products: Optional[int] = None  # direct method only


def pair_count(d: int, lam: int) -> int:
    """N(lam) = r_{2d}(lam), the number of (u, v) with |u|^2 + |v|^2 = lam."""
    return r(2 * d, lam)


def bilinear_constant(d: int, lam: int, norm: Normalization) -> float:
    if norm is Normalization.EXACT:
        return pair_count(d, lam)
    if norm is Normalization.POWER:
        return lam ** (d - 1)
    return 1


def _check_pair_range(f: GridFunction, g: GridFunction, lam: int) -> None:
    if f.mode is ValueMode.INT:
        bound = int(np.abs(f.values).max()) * int(np.abs(g.values).max()) * pair_count(f.d, lam)
        if bound >= 2**63:
            raise OverflowError("exact bilinear sum could exceed int64")


def _raw(ws: DenseWorkspace, f: GridFunction, g: GridFunction, lam: int, method: Method):
    """Unnormalized values on ws.box: (dense buffer, touched flat indices, pair count)."""
    size = ws.box.size
    dtype = value_dtype(f.mode)
    ptr = ws.ptr
    widest = int(max(ptr[q + 1] - ptr[q] for q in range(lam + 1)))
    fidx, fval = ws.support(f)
    gidx, gval = ws.support(g)
    capF = min(size, len(f) * widest)
    capG = min(size, len(g) * widest)
    out = np.zeros(size, dtype=dtype)
    markO = np.zeros(size, dtype=np.bool_)
    touchedO = np.empty(min(size, len(f) * int(ptr[lam + 1])), dtype=np.int64)
    if method is Method.SLICED:
        no = K.bilinear_sliced_scatter(
            fidx, fval, gidx, gval, ws.offs, ptr, lam,
            np.zeros(size, dtype=dtype), np.zeros(size, dtype=dtype),
            np.zeros(size, dtype=np.bool_), np.zeros(size, dtype=np.bool_),
            np.empty(capF, dtype=np.int64), np.empty(capG, dtype=np.int64),
            out, markO, touchedO)
        pairs = None
    else:
        no, pairs = K.bilinear_direct_scatter(
            fidx, fval, gidx, gval, ws.offs, ptr, lam,
            np.full(size, -1, dtype=np.int64), np.full(size, -1, dtype=np.int64),
            np.empty(len(f) * widest, dtype=np.int64), np.empty(len(g) * widest, dtype=np.int64),
            np.empty(len(f) * widest, dtype=dtype), np.empty(len(g) * widest, dtype=dtype),
            np.empty(capF, dtype=np.int64), np.empty(capG, dtype=np.int64),
            out, markO, touchedO)
        pairs = int(pairs)
    return out, touchedO[:no], pairs


def bilinear(f: GridFunction, g: GridFunction, lam: int,
             norm: Union[Normalization, str] = Normalization.EXACT,
             method: Union[Method, str] = Method.SLICED,
             skip_disjoint: bool = True) -> BilinearResult:
    """T_lam(f, g), normalized per norm.

    skip_disjoint=False forces a full evaluation even when the supports are
    too far apart to interact.
    """
    norm = Normalization.parse(norm)
    method = Method.parse(method)
    d, mode = check_same(f, g)
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    require_float(norm, f, g)
    c = bilinear_constant(d, lam, norm)
    empty = norm is Normalization.EXACT and c == 0
    zero = BilinearResult(GridFunction.zero(d, mode), method, norm, lam, d, empty,
                          0 if method is Method.DIRECT else None)
    if empty or f.is_zero or g.is_zero:
        return zero
    if skip_disjoint and not dilations_meet(f, g, math.isqrt(lam)):
        return zero
    _check_pair_range(f, g, lam)
    ws = DenseWorkspace([f, g], lam)
    out, touched, pairs = _raw(ws, f, g, lam, method)
    if c != 1:
        out[touched] /= c
    value = from_dense(ws.box, out, mode, d, flat=touched)
    return BilinearResult(value, method, norm, lam, d, False, pairs)


def bilinear_direct(f, g, lam, norm=Normalization.EXACT) -> BilinearResult:
    return bilinear(f, g, lam, norm, Method.DIRECT)


def bilinear_sliced(f, g, lam, norm=Normalization.EXACT) -> BilinearResult:
    return bilinear(f, g, lam, norm, Method.SLICED)


# -- evaluation at chosen points ----------------------------------------------------

def point_runs(box: Box, points: np.ndarray):
    """Split lexicographically sorted unique points into runs along the last axis."""
    flat = box.flat(points)
    if len(flat) == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    brk = np.flatnonzero(np.diff(flat) != 1) + 1
    starts = np.concatenate([[0], brk])
    lens = np.diff(np.concatenate([starts, [len(flat)]]))
    return flat[starts].astype(np.int64), lens.astype(np.int64)


def dense_restricted(f: GridFunction, box: Box) -> np.ndarray:
    out = np.zeros(box.size, dtype=value_dtype(f.mode))
    if not f.is_zero:
        hi = box.lo + np.array(box.shape) - 1
        keep = np.all((f.coords >= box.lo) & (f.coords <= hi), axis=1)
        out[box.flat(f.coords[keep])] = f.values[keep]
    return out


def evaluate_runs(F: np.ndarray, G: np.ndarray, box: Box, starts, lens, lam: int,
                  method: Method, chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    """Unnormalized values at runs of points from dense inputs over box."""
    d = len(box.shape)
    out = np.zeros(int(np.sum(lens)), dtype=F.dtype)
    if method is Method.DIRECT:
        offs, ptr = ball_offsets(box, d, lam)
        K.run_direct(F, G, starts, lens, offs, ptr, lam, chunk, out)
    else:
        offs, norms = lex_ball_offsets(box, d, lam)
        K.run_sliced(F, G, starts, lens, offs, norms, lam, chunk, out)
    return out


def bilinear_at_points(f: GridFunction, g: GridFunction, points, lam: int,
                       norm: Union[Normalization, str] = Normalization.EXACT,
                       method: Union[Method, str] = Method.SLICED,
                       box_budget: int = 10**8) -> np.ndarray:
    """T_lam(f, g) at the given points, evaluated point by point."""
    norm = Normalization.parse(norm)
    method = Method.parse(method)
    d, mode = check_same(f, g)
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    require_float(norm, f, g)
    pts = np.asarray(points, dtype=np.int64).reshape(-1, d)
    dtype = value_dtype(mode)
    c = bilinear_constant(d, lam, norm)
    if len(pts) == 0 or c == 0 or f.is_zero or g.is_zero:
        return np.zeros(len(pts), dtype=dtype)
    _check_pair_range(f, g, lam)
    R = math.isqrt(lam)
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    lo = uniq.min(axis=0) - R
    shape = tuple(int(s) for s in uniq.max(axis=0) + R - lo + 1)
    box = Box(lo, shape)
    if box.size > box_budget:
        raise CapacityError(f"evaluation box of {box.size} cells exceeds budget {box_budget}")
    starts, lens = point_runs(box, uniq)
    vals = evaluate_runs(dense_restricted(f, box), dense_restricted(g, box), box, starts, lens, lam, method)
    if c != 1:
        vals = vals / c
    return vals[inv.reshape(-1)]


# -- right-hand sides of the pointwise bounds ----------------------------------------

def _float_pair(f: GridFunction, g: GridFunction, lam: int, lam_min: int):
    d, _ = check_same(f, g)
    if lam < lam_min:
        raise ValueError(f"lambda must be >= {lam_min}")
    require_float(Normalization.POWER, f, g)
    return d


def prop1_rhs(f: GridFunction, g: GridFunction, lam: int) -> GridFunction:
    """Weighted sum of products of power-law spherical averages.

    sum_{0<r<lam} r^a (lam-r)^a / lam^(d-1) S_r f S_{lam-r} g
    + lam^(-d/2) (f S_lam g + g S_lam f), with a = d/2 - 1.
    """
    d = _float_pair(f, g, lam, 2)
    if f.is_zero or g.is_zero:
        return GridFunction.zero(d, ValueMode.FLOAT)
    ws = DenseWorkspace([f, g], lam)
    a = d / 2 - 1
    acc = np.zeros(ws.box.size)
    for q in range(1, lam):
        if r(d, q) == 0 or r(d, lam - q) == 0:
            continue
        sf = ws.shell_sum(f, q) / q ** a
        sg = ws.shell_sum(g, lam - q) / (lam - q) ** a
        acc += (q ** a * (lam - q) ** a / lam ** (d - 1)) * (sf * sg)
    if r(d, lam):
        tail = lam ** (-d / 2)
        acc += tail * ws.dense(f) * (ws.shell_sum(g, lam) / lam ** a)
        acc += tail * ws.dense(g) * (ws.shell_sum(f, lam) / lam ** a)
    return ws.to_function(acc, ValueMode.FLOAT)


def dyadic_levels(lam: int) -> int:
    """Largest k with 2^k <= lam; the dyadic sum runs over k = 0..this."""
    return lam.bit_length() - 1


def thm2_rhs(f: GridFunction, g: GridFunction, lam: int, top_level: Optional[int] = None) -> GridFunction:
    """lam^(1-d/2) A_lam(f) g + lam^(1-d) sum_k (2^k)^(d/2-1) (lam-2^k)^(d/2) A_{lam-2^k}(f) S*_{2^k}(g).

    Power-law ball averages times their power are plain ball sums, so the
    k = log2(lam) term (radius 0) is f itself and needs no division.
    top_level overrides the last k (default: largest k with 2^k <= lam).
    """
    d = _float_pair(f, g, lam, 2)
    if f.is_zero or g.is_zero:
        return GridFunction.zero(d, ValueMode.FLOAT)
    top = dyadic_levels(lam) if top_level is None else top_level
    ws = DenseWorkspace([f, g], max(lam, 2 ** (top + 1) - 1))
    acc = lam ** (1 - d / 2) * (ws.shell_sum(f, 0, lam) / lam ** (d / 2)) * ws.dense(g)
    for k in range(top + 1):
        block = list(dyadic_block(2 ** k))
        smax = ws.shell_maximum(g, block, [q ** (1 - d / 2) for q in block])
        acc += lam ** (1 - d) * (2 ** k) ** (d / 2 - 1) * ws.shell_sum(f, 0, lam - 2 ** k) * smax
    return ws.to_function(acc, ValueMode.FLOAT)


def domination_rhs(f: GridFunction, g: GridFunction, lam: int) -> GridFunction:
    """(lam^(-d/2) ball sum of f) * max_{0<=rho<=lam} lam^(1-d/2) |rho-shell sum of g|."""
    d = _float_pair(f, g, lam, 1)
    if f.is_zero or g.is_zero:
        return GridFunction.zero(d, ValueMode.FLOAT)
    ws = DenseWorkspace([f, g], lam)
    ball = ws.shell_sum(f, 0, lam) * lam ** (-d / 2)
    w = lam ** (1 - d / 2)
    rhos = list(range(lam + 1))
    if np.any(g.values < 0):
        shell = np.max([np.abs(ws.shell_sum(g, q)) for q in rhos], axis=0) * w
    else:
        shell = ws.shell_maximum(g, rhos, [w] * len(rhos))
    return ws.to_function(ball * shell, ValueMode.FLOAT)


def truncated_bilinear_maximal(f: GridFunction, g: GridFunction, lam_max: int,
                               norm: Union[Normalization, str] = Normalization.EXACT) -> GridFunction:
    """Pointwise max of the sliced bilinear average over 1 <= lam <= lam_max."""
    norm = Normalization.parse(norm)
    d, mode = check_same(f, g)
    if lam_max < 1:
        raise ValueError("lambda_max must be >= 1")
    require_float(norm, f, g)
    if f.is_zero or g.is_zero or not dilations_meet(f, g, math.isqrt(lam_max)):
        return GridFunction.zero(d, mode)
    _check_pair_range(f, g, lam_max)
    ws = DenseWorkspace([f, g], lam_max)
    best = None
    for lam in range(1, lam_max + 1):
        c = bilinear_constant(d, lam, norm)
        if c == 0:
            out = np.zeros(ws.box.size, dtype=value_dtype(mode))
        else:
            out, touched, _ = _raw(ws, f, g, lam, Method.SLICED)
            if c != 1:
                out[touched] /= c
        best = out if best is None else np.maximum(best, out)
    return ws.to_function(best, mode)
