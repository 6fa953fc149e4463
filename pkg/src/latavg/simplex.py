"""Triangle and simplex averages over tuples of shell points at mutual distance sqrt(lam)."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import _kernels as K
from ._box import dilated_box, value_dtype
from .averages import DenseWorkspace, Normalization, require_float
from .grid import GridFunction, ValueMode, check_same
from .lattice import enumerate_simplex_set, r


@dataclass(frozen=True)
class SimplexConfig:
    d: int
    k: int
    lam: int
    norm: Normalization = Normalization.EXACT

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.d < 1 or self.lam < 1:
            raise ValueError("need d >= 1 and lambda >= 1")

    @property
    def power_exponent(self) -> float:
        """(dk - k(k+1))/2; equals d - 3 for triangles."""
        return (self.d * self.k - self.k * (self.k + 1)) / 2


def _tuple_sum(fs: Sequence[GridFunction], tuples: np.ndarray, lam: int):
    """Unnormalized sum over tuples of prod_i f_i(x - u_i), as (sorted flat keys, values, box).

    Input-driven over the support of f_0; the other factors are looked up by bisection,
    so no dense buffer over the box is needed.
    """
    R = math.isqrt(lam)
    box = dilated_box(fs, 2 * R, budget=2**62)
    strides = box.strides
    offs = np.ascontiguousarray(tuples @ strides)
    keys = [box.flat(f.coords) for f in fs]
    okeys = np.concatenate(keys[1:])
    ovals = np.concatenate([f.values for f in fs[1:]])
    optr = np.cumsum([0] + [len(f) for f in fs[1:]]).astype(np.int64)
    out_keys = np.unique((keys[0][:, None] + np.unique(offs[:, 0])[None, :]).reshape(-1))
    out = np.zeros(len(out_keys), dtype=value_dtype(fs[0].mode))
    K.tuple_scatter(keys[0], fs[0].values, okeys, ovals, optr, offs, out_keys, out)
    return out_keys, out, box


def simplex_average(fs: Sequence[GridFunction], lam: int,
                    norm: Union[Normalization, str] = Normalization.EXACT) -> GridFunction:
    norm = Normalization.parse(norm)
    if len(fs) < 2:
        raise ValueError("need at least two functions")
    d, mode = check_same(*fs)
    cfg = SimplexConfig(d, len(fs), lam, norm)
    require_float(norm, *fs)
    if norm is Normalization.POWER and cfg.power_exponent <= 0:
        warnings.warn(f"power-law exponent {cfg.power_exponent} is not positive at d={d}, k={cfg.k}",
                      RuntimeWarning, stacklevel=2)
    if lam % 2 or any(f.is_zero for f in fs):
        return GridFunction.zero(d, mode)
    tuples = enumerate_simplex_set(d, lam, cfg.k)
    if len(tuples) == 0:
        return GridFunction.zero(d, mode)
    if norm is Normalization.EXACT:
        c = len(tuples)
    elif norm is Normalization.POWER:
        c = lam ** cfg.power_exponent
    else:
        c = 1
    keys, vals, box = _tuple_sum(fs, tuples, lam)
    if c != 1:
        vals = vals / c
    nz = vals != 0
    # flat order over a C-ordered box is lexicographic in coordinates
    return GridFunction(d, box.coords(keys[nz]), vals[nz], mode, _canonical=True)


def triangle_average(f: GridFunction, g: GridFunction, lam: int,
                     norm: Union[Normalization, str] = Normalization.EXACT) -> GridFunction:
    return simplex_average([f, g], lam, norm)


def simplex_bound_rhs(fs: Sequence[GridFunction], lam: int) -> GridFunction:
    """lam^(k(k-1)/2) times the product of power-law spherical averages of the f_i."""
    if len(fs) < 2:
        raise ValueError("need at least two functions")
    d, _ = check_same(*fs)
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    require_float(Normalization.POWER, *fs)
    k = len(fs)
    if any(f.is_zero for f in fs) or r(d, lam) == 0:
        return GridFunction.zero(d, ValueMode.FLOAT)
    ws = DenseWorkspace(list(fs), lam)
    acc = np.full(ws.box.size, float(lam) ** (k * (k - 1) / 2))
    for f in fs:
        acc *= ws.shell_sum(f, lam) / lam ** (d / 2 - 1)
    return ws.to_function(acc, ValueMode.FLOAT)
