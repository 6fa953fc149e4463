"""Finitely supported functions on Z^d.

A GridFunction keeps its support as a lexicographically sorted (n, d) integer
array plus a parallel value array. Zero values are never stored, so two
functions are equal exactly when their arrays are.
"""
from __future__ import annotations

import enum
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .lattice import Point, enumerate_ball

log = logging.getLogger(__name__)

INT64_MAX = np.iinfo(np.int64).max


class ValueMode(enum.Enum):
    INT = "int"
    FLOAT = "float"


class ModeError(ValueError):
    """Operands disagree on value mode, or the mode does not fit the operation."""


class GridFunction:
    __slots__ = ("d", "mode", "coords", "values", "_lookup")

    def __init__(self, d: int, coords, values, mode: Union[ValueMode, str] = ValueMode.FLOAT,
                 *, _canonical: bool = False):
        mode = ValueMode(mode)
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, d)
        if mode is ValueMode.INT:
            values = _as_int64(values)
        else:
            values = np.asarray(values, dtype=np.float64).reshape(-1)
        if len(values) != len(coords):
            raise ValueError("coords and values differ in length")
        if not _canonical:
            keep = values != 0
            coords, values = coords[keep], values[keep]
            if len(coords):
                order = np.lexsort(coords.T[::-1])
                coords, values = coords[order], values[order]
                if len(coords) > 1 and np.any(np.all(coords[1:] == coords[:-1], axis=1)):
                    raise ValueError("duplicate points")
        coords = np.ascontiguousarray(coords)
        values = np.ascontiguousarray(values)
        coords.setflags(write=False)
        values.setflags(write=False)
        self.d = int(d)
        self.mode = mode
        self.coords = coords
        self.values = values
        self._lookup = None

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls, d: int, mode: Union[ValueMode, str] = ValueMode.FLOAT) -> "GridFunction":
        return cls(d, np.zeros((0, d), dtype=np.int64), [], mode, _canonical=True)

    @classmethod
    def from_dict(cls, d: int, entries: Mapping[Point, float],
                  mode: Union[ValueMode, str] = ValueMode.FLOAT) -> "GridFunction":
        keys = list(entries)
        for k in keys:
            if len(k) != d:
                raise ValueError(f"point {k} does not have length {d}")
        coords = np.array(keys, dtype=np.int64).reshape(-1, d)
        return cls(d, coords, [entries[k] for k in keys], mode)

    @classmethod
    def delta(cls, d: int, at: Optional[Sequence[int]] = None,
              mode: Union[ValueMode, str] = ValueMode.FLOAT) -> "GridFunction":
        at = tuple(at) if at is not None else (0,) * d
        return cls(d, [at], [1], mode)

    # -- accessors ------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.values)

    @property
    def entries(self) -> Dict[Point, Union[int, float]]:
        if self._lookup is None:
            conv = int if self.mode is ValueMode.INT else float
            self._lookup = {tuple(int(c) for c in p): conv(v)
                            for p, v in zip(self.coords, self.values)}
        return self._lookup

    def __getitem__(self, x: Sequence[int]):
        zero = 0 if self.mode is ValueMode.INT else 0.0
        return self.entries.get(tuple(x), zero)

    @property
    def is_zero(self) -> bool:
        return len(self.values) == 0

    @property
    def support_box(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """Inclusive (lo, hi) corners of the bounding box, or None if empty."""
        if self.is_zero:
            return None
        return self.coords.min(axis=0), self.coords.max(axis=0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridFunction):
            return NotImplemented
        return (self.d == other.d and self.mode is other.mode
                and np.array_equal(self.coords, other.coords)
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.d, self.mode, self.coords.tobytes(), self.values.tobytes()))

    def __repr__(self) -> str:
        return f"GridFunction(d={self.d}, mode={self.mode.value}, nnz={len(self)})"

    # -- arithmetic -----------------------------------------------------------

    def astype(self, mode: Union[ValueMode, str]) -> "GridFunction":
        mode = ValueMode(mode)
        if mode is self.mode:
            return self
        if mode is ValueMode.INT:
            if not np.all(np.floor(self.values) == self.values):
                raise ModeError("non-integer values cannot be converted to int mode")
        return GridFunction(self.d, self.coords, self.values, mode, _canonical=True)

    def scale(self, c) -> "GridFunction":
        if self.mode is ValueMode.INT and not isinstance(c, (int, np.integer)):
            raise ModeError("int-mode functions can only be scaled by integers")
        if self.mode is ValueMode.INT:
            return GridFunction(self.d, self.coords, _as_int64([int(v) * int(c) for v in self.values]),
                                self.mode)
        return GridFunction(self.d, self.coords, self.values * c, self.mode)

    def negate(self) -> "GridFunction":
        return GridFunction(self.d, self.coords, -self.values, self.mode, _canonical=True)

    def __neg__(self):
        return self.negate()

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return add(self, other)

    def map_values(self, fn) -> "GridFunction":
        return GridFunction(self.d, self.coords, fn(self.values), self.mode)


def _as_int64(values) -> np.ndarray:
    vals = list(values) if not isinstance(values, np.ndarray) else values
    if isinstance(vals, np.ndarray):
        if vals.dtype.kind == "f":
            if not np.all(np.floor(vals) == vals):
                raise ModeError("int mode requires integer values")
        if vals.dtype.kind in "iuf":
            if len(vals) and np.max(np.abs(vals.astype(np.float64))) >= 2.0**63:
                raise OverflowError("value outside int64 range")
            return vals.astype(np.int64).reshape(-1)
        vals = list(vals.reshape(-1))
    out = []
    for v in vals:
        if isinstance(v, float):
            if not v.is_integer():
                raise ModeError("int mode requires integer values")
            v = int(v)
        v = int(v)
        if abs(v) > INT64_MAX:
            raise OverflowError("value outside int64 range")
        out.append(v)
    return np.array(out, dtype=np.int64)


def check_same(*fs: GridFunction) -> Tuple[int, ValueMode]:
    d, mode = fs[0].d, fs[0].mode
    for f in fs[1:]:
        if f.d != d:
            raise ValueError(f"dimension mismatch: {f.d} != {d}")
        if f.mode is not mode:
            raise ModeError(f"value mode mismatch: {f.mode.value} != {mode.value}")
    return d, mode


def add(f: GridFunction, g: GridFunction) -> GridFunction:
    check_same(f, g)
    coords = np.concatenate([f.coords, g.coords])
    values = np.concatenate([f.values, g.values])
    if not len(coords):
        return GridFunction.zero(f.d, f.mode)
    uniq, inv = np.unique(coords, axis=0, return_inverse=True)
    summed = np.zeros(len(uniq), dtype=values.dtype)
    np.add.at(summed, inv.reshape(-1), values)
    return GridFunction(f.d, uniq, summed, f.mode)


def pointwise(op, *fs: GridFunction, mode: Optional[ValueMode] = None) -> GridFunction:
    """Combine functions pointwise over the union of supports; missing entries read as 0."""
    d, m = check_same(*fs)
    coords = np.concatenate([f.coords for f in fs])
    if not len(coords):
        return GridFunction.zero(d, mode or m)
    uniq, inv = np.unique(coords, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    dense = []
    start = 0
    for f in fs:
        arr = np.zeros(len(uniq), dtype=f.values.dtype)
        arr[inv[start:start + len(f)]] = f.values
        start += len(f)
        dense.append(arr)
    return GridFunction(d, uniq, op(*dense), mode or m)


def maximum(*fs: GridFunction) -> GridFunction:
    """Pointwise max with implicit zeros outside each support."""
    return pointwise(lambda *a: np.maximum.reduce(a), *fs)


def multiply(f: GridFunction, g: GridFunction) -> GridFunction:
    return pointwise(lambda a, b: a * b, f, g)


# -- norms and transforms -------------------------------------------------------

def lp_norm(f: GridFunction, p: float):
    """l^p norm for p in (0, inf]; quasinorm semantics below 1.

    Int-mode p = 1 returns an exact Python int.
    """
    if not p > 0:
        raise ValueError("p must be positive")
    if f.is_zero:
        return 0 if (f.mode is ValueMode.INT and p == 1) else 0.0
    if f.mode is ValueMode.INT and p == 1:
        return sum(abs(int(v)) for v in f.values)
    a = np.abs(f.values.astype(np.float64))
    if math.isinf(p):
        return float(a.max())
    if p == 1:
        return float(a.sum())
    if p == 2:
        return float(math.sqrt(np.sum(a * a)))
    return float(np.sum(a ** p) ** (1.0 / p))


def shift(f: GridFunction, h: Sequence[int]) -> GridFunction:
    """g(x) = f(x - h)."""
    h = np.asarray(h, dtype=np.int64)
    if h.shape != (f.d,):
        raise ValueError(f"shift must have length {f.d}")
    return GridFunction(f.d, f.coords + h, f.values, f.mode, _canonical=True)


def restrict_to_cube(f: GridFunction, corner: Sequence[int], side: int) -> GridFunction:
    """f * 1_Q for the half-open cube Q = corner + [0, side)^d."""
    if side < 1:
        raise ValueError("side must be >= 1")
    corner = np.asarray(corner, dtype=np.int64)
    rel = f.coords - corner
    keep = np.all((rel >= 0) & (rel < side), axis=1)
    return GridFunction(f.d, f.coords[keep], f.values[keep], f.mode, _canonical=True)


# -- test families ----------------------------------------------------------------

@dataclass(frozen=True)
class Delta:
    def label(self) -> str:
        return "delta"


@dataclass(frozen=True)
class BallIndicator:
    radius2: int

    def label(self) -> str:
        return f"ball:{self.radius2}"


@dataclass(frozen=True)
class RandomSparse:
    seed: int
    half_width: int = 3
    density: float = 0.5

    def __post_init__(self):
        if not 0 < self.density <= 1:
            raise ValueError("density must lie in (0, 1]")
        if self.half_width < 0:
            raise ValueError("half_width must be >= 0")

    def label(self) -> str:
        return f"random:{self.seed}:{self.half_width}:{self.density}"


TestFamily = Union[Delta, BallIndicator, RandomSparse]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def splitmix64(seed: int, counters: np.ndarray) -> np.ndarray:
    """Counter-based splitmix64: output i is mix(seed + (i + 1) * golden)."""
    with np.errstate(over="ignore"):
        z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + (counters.astype(np.uint64) + np.uint64(1)) * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def generate(family: TestFamily, d: int, mode: Union[ValueMode, str] = ValueMode.FLOAT) -> GridFunction:
    if d < 1:
        raise ValueError("d must be >= 1")
    if isinstance(family, Delta):
        return GridFunction.delta(d, mode=mode)
    if isinstance(family, BallIndicator):
        pts = enumerate_ball(d, family.radius2)
        return GridFunction(d, pts, np.ones(len(pts)), mode, _canonical=True)
    if isinstance(family, RandomSparse):
        hw = family.half_width
        axis = np.arange(-hw, hw + 1, dtype=np.int64)
        grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
        idx = np.arange(len(grid), dtype=np.uint64)
        draw = splitmix64(family.seed, 2 * idx)
        vals = splitmix64(family.seed, 2 * idx + np.uint64(1))
        u = (draw >> np.uint64(11)).astype(np.float64) * (1.0 / 2**53)
        keep = u < family.density
        values = (vals[keep] % np.uint64(9)).astype(np.int64) + 1
        return GridFunction(d, grid[keep], values, mode, _canonical=True)
    raise TypeError(f"unknown test family {family!r}")


def parse_family(spec: str) -> TestFamily:
    """Parse ``delta``, ``ball:<n>`` or ``random:<seed>[:<half_width>[:<density>]]``."""
    parts = spec.strip().split(":")
    kind = parts[0].lower()
    try:
        if kind == "delta" and len(parts) == 1:
            return Delta()
        if kind == "ball" and len(parts) == 2:
            return BallIndicator(int(parts[1]))
        if kind == "random" and 2 <= len(parts) <= 4:
            seed = int(parts[1])
            hw = int(parts[2]) if len(parts) > 2 else 3
            dens = float(parts[3]) if len(parts) > 3 else 0.5
            return RandomSparse(seed, hw, dens)
    except ValueError as exc:
        raise ValueError(f"bad family spec {spec!r}: {exc}") from None
    raise ValueError(f"bad family spec {spec!r}")


# -- JSON file format ------------------------------------------------------------

def to_json_obj(f: GridFunction) -> dict:
    conv = int if f.mode is ValueMode.INT else float
    return {
        "dim": f.d,
        "mode": f.mode.value,
        "entries": [{"x": [int(c) for c in p], "v": conv(v)} for p, v in zip(f.coords, f.values)],
    }


def from_json_obj(obj: dict) -> GridFunction:
    d = int(obj["dim"])
    mode = ValueMode(obj.get("mode", "float"))
    coords, values, seen = [], [], set()
    dropped = 0
    for e in obj["entries"]:
        x = tuple(int(c) for c in e["x"])
        if len(x) != d:
            raise ValueError(f"point {x} does not have length {d}")
        if x in seen:
            raise ValueError(f"duplicate point {x}")
        seen.add(x)
        if e["v"] == 0:
            dropped += 1
            continue
        coords.append(x)
        values.append(e["v"])
    if dropped:
        log.warning("dropped %d zero-valued entries", dropped)
    return GridFunction(d, np.array(coords, dtype=np.int64).reshape(-1, d), values, mode)


def load(path: Union[str, os.PathLike]) -> GridFunction:
    with open(path) as fh:
        return from_json_obj(json.load(fh))


def atomic_write_text(path: Union[str, os.PathLike], text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(f: GridFunction) -> str:
    return json.dumps(to_json_obj(f), indent=1) + "\n"


def save(f: GridFunction, path: Union[str, os.PathLike]) -> None:
    atomic_write_text(path, dumps(f))
