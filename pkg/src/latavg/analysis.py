"""Norm ratios, exponent scans and pointwise verification drivers.

A scan evaluates one inequality target over a grid of radii, fits the
log-log slope of lhs / (input norm product) against lambda, and compares
it with the exponent the inequality predicts. Implied constants are never
assumed; only slopes are judged.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .averages import Normalization
from .bilinear import (Method, bilinear, domination_rhs, pair_count, prop1_rhs, thm2_rhs,
                       truncated_bilinear_maximal)
from .grid import (Delta, GridFunction, RandomSparse, TestFamily, add, generate,
                   lp_norm, maximum, restrict_to_cube)
from .lattice import r
from .simplex import simplex_average, triangle_average

TARGETS = ("cor13", "cor14", "prop7", "prop32", "d4odd", "cor52", "tri", "simplex",
           "lacunary", "maximal34", "thm2gap", "prop1gap")
GAP_TARGETS = ("thm2gap", "prop1gap")


class ParameterDomainError(ValueError):
    """Exponents outside the range in which the target inequality is claimed."""


class DegenerateFitError(ValueError):
    """Fewer than two positive ratios to fit."""


def resolve_threads(threads: Optional[int] = None) -> int:
    if threads is None:
        env = os.environ.get("LATAVG_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def ordered_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """map() that may run concurrently but always returns results in input order."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def conjugate(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


# -- slope fitting ---------------------------------------------------------------

def fit_slope_detail(rows: Sequence[Tuple[float, float]]) -> Tuple[float, float, int]:
    """(slope, stderr, dropped) of log ratio against log lambda; non-positive ratios dropped."""
    keep = [(lam, ratio) for lam, ratio in rows if ratio > 0 and math.isfinite(ratio)]
    dropped = len(rows) - len(keep)
    if len(keep) < 2 or len({lam for lam, _ in keep}) < 2:
        raise DegenerateFitError(f"only {len(keep)} usable rows ({dropped} dropped)")
    x = np.log([lam for lam, _ in keep])
    y = np.log([ratio for _, ratio in keep])
    if len(keep) == 2:
        return float((y[1] - y[0]) / (x[1] - x[0])), 0.0, dropped
    fit = stats.linregress(x, y)
    return float(fit.slope), float(fit.stderr), dropped


def fit_slope(rows: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    slope, stderr, _ = fit_slope_detail(rows)
    return slope, stderr


# -- targets -----------------------------------------------------------------------

@dataclass(frozen=True)
class ScanTarget:
    name: str
    d: int
    p: float = 2.0
    q: Optional[float] = None
    s: Optional[float] = None
    k: int = 3
    ps: Optional[Tuple[float, ...]] = None  # simplex exponents p_1 <= ... <= p_k

    def __post_init__(self):
        if self.name not in TARGETS:
            raise ValueError(f"unknown target {self.name!r}")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        for v in (self.p, self.q, self.s):
            if v is not None and not v > 0:
                raise ParameterDomainError("exponents must be positive")

    @property
    def qq(self) -> float:
        return self.p if self.q is None else self.q

    @property
    def ss(self) -> float:
        return 1.0 if self.s is None else self.s

    @property
    def simplex_ps(self) -> Tuple[float, ...]:
        return tuple(self.ps) if self.ps else (float(self.k),) * self.k

    def dimension_ok(self) -> bool:
        d, n = self.d, self.name
        if n in ("cor13", "cor14", "prop7", "prop32", "cor52"):
            return d >= 5
        if n == "d4odd":
            return d == 4
        if n == "tri":
            return d >= 7
        if n == "simplex":
            return len(self.simplex_ps) >= 3 and d >= 2 * len(self.simplex_ps) + 3
        if n == "lacunary":
            return d >= 6
        if n == "maximal34":
            return d in (3, 4)
        return d >= 3

    def check_domain(self) -> None:
        """Raise ParameterDomainError outside the exponent hypotheses (checked where the dimension hypothesis holds)."""
        d, p, q, s = self.d, self.p, self.qq, self.ss
        n = self.name
        if n == "d4odd" and d != 4:
            raise ParameterDomainError("d4odd is stated for d = 4 only")
        if n == "simplex":
            ps = self.simplex_ps
            if len(ps) < 2 or list(ps) != sorted(ps):
                raise ParameterDomainError("simplex exponents must be ascending, k >= 2")
            if abs(sum(1 / x for x in ps) - 1) > 1e-9:
                raise ParameterDomainError("simplex exponents must satisfy sum 1/p_i = 1")
            if ps[0] == 2 or (ps[0] < 2 and (len(ps) < 2 or ps[1] <= 2)):
                raise ParameterDomainError("need 2 < p_1, or p_1 < 2 < p_2")
        if not self.dimension_ok():
            return
        bad = None
        if n == "cor13" and not p > d / (d - 2):
            bad = f"need p > d/(d-2) = {d / (d - 2):g}"
        elif n == "cor14" and not ((d + 1) / (d - 1) < p < 2 and p / 2 <= s <= 1):
            bad = "need (d+1)/(d-1) < p < 2 and p/2 <= s <= 1"
        elif n == "prop7" and not (d + 1) / (d - 1) < p < 2:
            bad = "need (d+1)/(d-1) < p < 2"
        elif n == "prop32" and not d / (d - 2) < p < 2:
            bad = "need d/(d-2) < p < 2"
        elif n == "d4odd" and not 5 / 3 < p < 2:
            bad = "need 5/3 < p < 2"
        elif n == "cor52" and not (p >= 1 and q >= 1 and 1 < 1 / p + 1 / q < (2 * d - 2) / d):
            bad = "need p, q >= 1 and 1 < 1/p + 1/q < (2d-2)/d"
        elif n == "tri" and not (d + 1) / (d - 1) < p < 2 * d / (d + 2):
            bad = "need (d+1)/(d-1) < p < 2d/(d+2)"
        elif n == "simplex":
            ps = self.simplex_ps
            if ps[0] < 2 and not (d + 1) / (d - 1) < ps[0]:
                bad = "need (d+1)/(d-1) < p_1"
        elif n == "lacunary" and not (d - 2) / (d - 3) < p < 2:
            bad = "need (d-2)/(d-3) < p < 2"
        elif n == "maximal34" and not (p > 1 and q > 1 and s > 1 and 1 / p + 1 / q >= 1 / s):
            bad = "need p, q, r > 1 and 1/p + 1/q >= 1/r"
        if bad:
            raise ParameterDomainError(f"{n}: {bad}")

    def _simplex_parts(self):
        """(exponent, per-function norm exponents) for the simplex target."""
        d = self.d
        ps = self.simplex_ps
        k = len(ps)
        half = (d + 1) / 2
        if ps[0] > 2:
            j = max((i + 1 for i, x in enumerate(ps) if x < half), default=0)
            expo = (k * (k - 1) - d * j) / 2 + sum(d / x for x in ps[:j])
            norms = [conjugate(x) if i < j else x for i, x in enumerate(ps)]
            return expo, norms
        j = max((i + 1 for i, x in enumerate(ps[:k - 1]) if x < half), default=1)
        expo = (k * (k - 1) - d * j) / 2 + d / conjugate(ps[0]) + sum(d / x for x in ps[1:j])
        if j == k - 1 and (d + 3) / (d + 1) < 2 / ps[0] + 1 / ps[-1] < 1.5:
            expo = (k * (k - 1) - d * (k - 2)) / 2
        norms = [ps[0]] + [conjugate(x) for x in ps[1:]]
        return expo, norms

    @property
    def predicted_exponent(self) -> float:
        d, p, q, s = self.d, self.p, self.qq, self.ss
        n = self.name
        if n == "cor13":
            return -d / (2 * p)
        if n == "cor14":
            return d / (2 * s) - d / p
        if n in ("prop7", "prop32"):
            return d / 2 - d / p
        if n == "d4odd":
            return 2 - 4 / p
        if n == "cor52":
            return -(d / 2) * (1 / p + 1 / q - 1)
        if n == "tri":
            return 1 + d / 2 - d / p
        if n == "simplex":
            return self._simplex_parts()[0]
        return 0.0

    @property
    def default_tolerance(self) -> float:
        return 0.1 if self.name in GAP_TARGETS else 0.3


@dataclass(frozen=True)
class ScanRow:
    lam: int
    lhs: float
    norm_product: float
    ratio: float


@dataclass(frozen=True)
class ScanReport:
    target: ScanTarget
    rows: Tuple[ScanRow, ...]
    fitted_slope: float
    slope_stderr: float
    passed: bool
    tolerance: float
    hypotheses_met: bool
    dropped: int = 0
    note: str = ""

    @property
    def predicted_exponent(self) -> float:
        return self.target.predicted_exponent

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "lhs", "norm_product", "ratio", "log_lambda", "log_ratio"])
        for row in self.rows:
            lr = math.log(row.ratio) if row.ratio > 0 else float("-inf")
            w.writerow([row.lam, repr(row.lhs), repr(row.norm_product), repr(row.ratio),
                        repr(math.log(row.lam)), repr(lr)])
        w.writerow(["fitted_slope", repr(self.fitted_slope)])
        w.writerow(["slope_stderr", repr(self.slope_stderr)])
        w.writerow(["predicted_exponent", repr(self.predicted_exponent)])
        w.writerow(["tolerance", repr(self.tolerance)])
        w.writerow(["hypotheses_met", str(self.hypotheses_met).lower()])
        w.writerow(["pass", str(self.passed).lower()])
        if self.note:
            w.writerow(["note", self.note])
        return buf.getvalue()


def lambda_grid(kind: str, lo: int, hi: int) -> List[int]:
    if lo < 1 or hi < lo:
        raise ValueError("need 1 <= lambda_min <= lambda_max")
    if kind == "dyadic":
        out, q = [], 1
        while q <= hi:
            if q >= lo:
                out.append(q)
            q *= 2
        return out
    if kind == "linear":
        return list(range(lo, hi + 1))
    if kind == "even":
        return [x for x in range(lo, hi + 1) if x % 2 == 0]
    if kind == "odd":
        return [x for x in range(lo, hi + 1) if x % 2 == 1]
    raise ValueError(f"unknown grid kind {kind!r}")


# -- closed forms for delta inputs --------------------------------------------------

def delta_bilinear_norm(d: int, radii: Sequence[int], s: float) -> float:
    """||max_{lam in radii} T_lam(delta, delta)||_s for exact-count averages.

    T_lam(delta, delta) is 1/N(lam) on the shell |x|^2 = lam/2 and zero
    elsewhere; distinct radii give disjoint shells, so the maximum is a sum.
    """
    terms = []
    for lam in radii:
        if lam % 2 or r(d, lam // 2) == 0 or pair_count(d, lam) == 0:
            continue
        terms.append((r(d, lam // 2), pair_count(d, lam)))
    if not terms:
        return 0.0
    if math.isinf(s):
        return max(1.0 / n for _, n in terms)
    if s == 1:
        return sum(m / n for m, n in terms)
    return sum(m * float(n) ** (-s) for m, n in terms) ** (1.0 / s)


def delta_crosscheck(d: int, lams: Sequence[int], s: float = 1.0, threads: int = 1) -> float:
    """Largest relative gap between the closed form and operator evaluation."""
    delta = GridFunction.delta(d)

    def gap(lam):
        closed = delta_bilinear_norm(d, [lam], s)
        evaluated = lp_norm(bilinear(delta, delta, lam).value, s)
        if closed == evaluated:
            return 0.0
        return abs(closed - evaluated) / max(abs(closed), abs(evaluated))

    return max(ordered_map(gap, list(lams), threads), default=0.0)


# -- norm ratios ---------------------------------------------------------------------

def improving_ratio(f: GridFunction, g: GridFunction, lam: int, p: float, q: float, s: float) -> float:
    """||T_lam(f, g)||_s / (||f||_p ||g||_q) with exact-count normalization."""
    denom = lp_norm(f, p) * lp_norm(g, q)
    if denom == 0:
        raise ZeroDivisionError("input norm product is zero")
    value = bilinear(f, g, lam, Normalization.EXACT, Method.SLICED).value
    if value.is_zero:
        return 0.0
    return lp_norm(value, s) / denom


def _sup_ratio(lhs: GridFunction, rhs: GridFunction) -> float:
    """sup over supp(lhs) of lhs / rhs (inf where rhs vanishes)."""
    if lhs.is_zero:
        return 0.0
    best = 0.0
    rl = rhs.entries
    for x, v in lhs.entries.items():
        denom = rl.get(x, 0.0)
        ratio = math.inf if denom == 0 else v / denom
        best = max(best, ratio)
    return best


def thm2_gap(f: GridFunction, g: GridFunction, lam: int) -> float:
    lhs = bilinear(f, g, lam, Normalization.EXACT).value
    return _sup_ratio(lhs, thm2_rhs(f, g, lam))


def prop1_gap(f: GridFunction, g: GridFunction, lam: int) -> float:
    norm = Normalization.POWER if f.d >= 5 else Normalization.EXACT
    lhs = bilinear(f, g, lam, norm).value
    return _sup_ratio(lhs, prop1_rhs(f, g, lam))


def _is_delta_pair(family_f, family_g) -> bool:
    return isinstance(family_f, Delta) and isinstance(family_g, Delta)


def _scan_row(target: ScanTarget, ff, gg, lam: int, use_closed: bool) -> ScanRow:
    t = target
    n = t.name
    p, q, s = t.p, t.qq, t.ss
    if n in GAP_TARGETS:
        val = thm2_gap(ff, gg, lam) if n == "thm2gap" else prop1_gap(ff, gg, lam)
        return ScanRow(lam, val, 1.0, val)
    if n == "simplex":
        expo, norm_ps = t._simplex_parts()
        fs = [ff] + [gg] * (len(norm_ps) - 1)
        lhs = lp_norm(simplex_average(fs, lam, Normalization.POWER), 1)
        prod = math.prod(lp_norm(f, e) for f, e in zip(fs, norm_ps))
        return ScanRow(lam, lhs, prod, lhs / prod)
    if n == "tri":
        lhs = lp_norm(triangle_average(ff, gg, lam, Normalization.EXACT), 1)
        prod = lp_norm(ff, p) * lp_norm(gg, p)
        return ScanRow(lam, lhs, prod, lhs / prod)
    if n == "cor13":
        norm_exps, s_out = (1.0, p), 1.0
    elif n == "cor14":
        norm_exps, s_out = (p, p), s
    elif n in ("prop7", "prop32", "d4odd", "lacunary"):
        norm_exps, s_out = (p, p), 1.0
    elif n == "cor52":
        norm_exps, s_out = (p, q), 1.0
    else:  # maximal34
        norm_exps, s_out = (p, q), s
    prod = lp_norm(ff, norm_exps[0]) * lp_norm(gg, norm_exps[1])
    if n == "lacunary":
        radii = [x for x in lambda_grid("dyadic", 1, lam)]
    elif n == "maximal34":
        radii = list(range(1, lam + 1))
    else:
        radii = [lam]
    if use_closed:
        lhs = delta_bilinear_norm(t.d, radii, s_out)
    elif n == "maximal34":
        lhs = lp_norm(truncated_bilinear_maximal(ff, gg, lam), s_out)
    else:
        outs = [bilinear(ff, gg, x).value for x in radii]
        value = outs[0] if len(outs) == 1 else maximum(*outs)
        lhs = lp_norm(value, s_out)
    return ScanRow(lam, lhs, prod, lhs / prod)


def run_scan(target: ScanTarget, family_f: TestFamily, family_g: TestFamily,
             lam_grid: Sequence[int], tolerance: Optional[float] = None,
             threads: int = 1, closed_form: bool = True) -> ScanReport:
    """Evaluate a target over lam_grid and judge its fitted slope.

    Exponent hypotheses are enforced only where the dimension hypothesis
    holds; below it the scan still runs and is reported as sub-asymptotic.
    """
    target.check_domain()
    grid = sorted(set(int(x) for x in lam_grid))
    if target.name == "d4odd":
        grid = [x for x in grid if x % 2]
    if len(grid) < 4:
        raise ValueError("a scan needs at least 4 radii")
    if grid[0] < 1 or (target.name in GAP_TARGETS and grid[0] < 2):
        raise ValueError("radii out of range for this target")
    tol = target.default_tolerance if tolerance is None else tolerance
    ff = generate(family_f, target.d)
    gg = generate(family_g, target.d)
    use_closed = (closed_form and _is_delta_pair(family_f, family_g)
                  and target.name not in GAP_TARGETS + ("tri", "simplex"))
    rows = ordered_map(lambda lam: _scan_row(target, ff, gg, lam, use_closed), grid, threads)
    hyp = target.dimension_ok()
    notes = []
    if not hyp:
        notes.append("sub-asymptotic: dimension below the stated hypothesis")
    try:
        slope, stderr, dropped = fit_slope_detail([(row.lam, row.ratio) for row in rows])
        passed = slope <= target.predicted_exponent + tol
    except DegenerateFitError as exc:
        slope, stderr, dropped, passed = math.nan, math.nan, len(rows), False
        notes.append(f"degenerate fit: {exc}")
    return ScanReport(target, tuple(rows), slope, stderr, passed, tol, hyp, dropped, "; ".join(notes))


def range_figure(d: int, inv_values: Sequence[float], lam_grid: Sequence[int],
                 family_f: TestFamily = Delta(), family_g: TestFamily = Delta(),
                 threads: int = 1) -> str:
    """CSV over (1/p, 1/q) of maximal-function scans with 1/r = 1/p + 1/q."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["inv_p", "inv_q", "r", "hypotheses_met", "fitted_slope", "pass"])
    cells = [(a, b) for a in inv_values for b in inv_values]

    def one(cell):
        a, b = cell
        rr = 1.0 / (a + b)
        t = ScanTarget("maximal34", d, p=1 / a, q=1 / b, s=rr)
        inside = rr > 1 and t.dimension_ok()
        if inside:
            rep = run_scan(t, family_f, family_g, lam_grid)
        else:
            rows = [_scan_row(t, generate(family_f, d), generate(family_g, d), lam,
                              _is_delta_pair(family_f, family_g)) for lam in lam_grid]
            try:
                slope = fit_slope([(x.lam, x.ratio) for x in rows])[0]
            except DegenerateFitError:
                slope = math.nan
            rep = None
        slope_out = rep.fitted_slope if rep else slope
        return [repr(a), repr(b), repr(rr), str(inside).lower(), repr(slope_out),
                str(bool(rep and rep.passed)).lower()]

    for row in ordered_map(one, cells, threads):
        w.writerow(row)
    return buf.getvalue()


# -- verification drivers ---------------------------------------------------------------

CHECKS = ("slicing", "prop1", "thm2", "domination", "tiling")


@dataclass(frozen=True)
class TrialSpec:
    index: int
    d: int
    lam: int
    f_family: RandomSparse
    g_family: RandomSparse


@dataclass(frozen=True)
class TrialOutcome:
    index: int
    check: str
    d: int
    lam: int
    metric: float
    threshold: float
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class VerifyReport:
    check: str
    outcomes: Tuple[TrialOutcome, ...]

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.outcomes)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "check", "dim", "lambda", "metric", "threshold", "pass", "detail"])
        for o in self.outcomes:
            w.writerow([o.index, o.check, o.d, o.lam, repr(o.metric), repr(o.threshold),
                        str(o.passed).lower(), o.detail])
        return buf.getvalue()


def sparse_density(d: int, half_width: int, target_points: float = 20.0) -> float:
    return min(0.5, target_points / (2 * half_width + 1) ** d)


def draw_trials(d: int, lam_max: int, trials: int, seed: int, lam_min: int = 1,
                dims: Optional[Sequence[int]] = None) -> List[TrialSpec]:
    """Deterministic trial parameters: radius, box half-width, seeds for f and g."""
    if lam_max < lam_min:
        raise ValueError(f"lambda_max must be >= {lam_min}")
    rng = np.random.default_rng(seed)
    out = []
    for i in range(trials):
        dd = int(rng.choice(dims)) if dims else d
        lam = int(rng.integers(lam_min, lam_max + 1))
        hw = int(rng.integers(1, 4))
        dens = sparse_density(dd, hw)
        sf, sg = (int(x) for x in rng.integers(0, 2**32, size=2))
        out.append(TrialSpec(i, dd, lam, RandomSparse(sf, hw, dens), RandomSparse(sg, hw, dens)))
    return out


def _nonempty_pair(spec: TrialSpec, mode: str):
    f = generate(spec.f_family, spec.d, mode)
    g = generate(spec.g_family, spec.d, mode)
    # an empty draw would make every check vacuous
    if f.is_zero:
        f = GridFunction.delta(spec.d, mode=mode)
    if g.is_zero:
        g = GridFunction.delta(spec.d, mode=mode)
    return f, g


def check_slicing(spec: TrialSpec) -> TrialOutcome:
    f, g = _nonempty_pair(spec, "int")
    direct = bilinear(f, g, spec.lam, Normalization.UNNORM, Method.DIRECT)
    sliced = bilinear(f, g, spec.lam, Normalization.UNNORM, Method.SLICED)
    a, b = direct.value, sliced.value
    keys = set(a.entries) | set(b.entries)
    mismatches = sum(1 for x in keys if a[x] != b[x])
    return TrialOutcome(spec.index, "slicing", spec.d, spec.lam, float(mismatches), 0.0,
                        mismatches == 0 and a == b,
                        f"points={len(a)} pair_products={direct.pair_products}")


def max_relative_error(a: GridFunction, b: GridFunction) -> float:
    worst = 0.0
    ea, eb = a.entries, b.entries
    for x in set(ea) | set(eb):
        u, v = ea.get(x, 0.0), eb.get(x, 0.0)
        if u != v:
            worst = max(worst, abs(u - v) / max(abs(u), abs(v)))
    return worst


def check_prop1(spec: TrialSpec, tol: float = 1e-10) -> TrialOutcome:
    f, g = _nonempty_pair(spec, "float")
    lhs = bilinear(f, g, spec.lam, Normalization.POWER).value
    err = max_relative_error(lhs, prop1_rhs(f, g, spec.lam))
    return TrialOutcome(spec.index, "prop1", spec.d, spec.lam, err, tol, err <= tol,
                        f"points={len(lhs)}")


def thm2_constant(d: int) -> float:
    """C with T_lam (power-law) <= C * thm2_rhs pointwise for nonnegative inputs."""
    return max(1.0, 2 ** (d / 2 - 1))


def check_thm2(spec: TrialSpec, slack: float = 1e-12) -> TrialOutcome:
    f, g = _nonempty_pair(spec, "float")
    lhs = bilinear(f, g, spec.lam, Normalization.POWER).value
    worst = _sup_ratio(lhs, thm2_rhs(f, g, spec.lam)) / thm2_constant(spec.d)
    return TrialOutcome(spec.index, "thm2", spec.d, spec.lam, worst, 1 + slack, worst <= 1 + slack,
                        f"points={len(lhs)} constant={thm2_constant(spec.d)!r}")


def check_domination(spec: TrialSpec, slack: float = 1e-12) -> TrialOutcome:
    f, g = _nonempty_pair(spec, "float")
    lhs = bilinear(f, g, spec.lam, Normalization.POWER).value
    worst = max(_sup_ratio(lhs, domination_rhs(f, g, spec.lam)),
                _sup_ratio(lhs, domination_rhs(g, f, spec.lam)))
    return TrialOutcome(spec.index, "domination", spec.d, spec.lam, worst, 1 + slack,
                        worst <= 1 + slack, f"points={len(lhs)}")


def tile_side(lam: int) -> int:
    return 2 * math.isqrt(lam - 1) + 3 if lam > 1 else 3  # 2 * ceil(sqrt(lam)) + 1


def tiling_supports(d: int, lam: int, seed: int, cubes_per_axis: Optional[int] = None,
                    points_per_cube: float = 30.0):
    """Random int functions filling a block of cubes of the tiling side."""
    side = tile_side(lam)
    m = cubes_per_axis or max(2, math.ceil(64 ** (1 / d) - 1e-9))
    half = (m * side) // 2
    dens = min(0.5, points_per_cube / side ** d)
    fam_f = RandomSparse(seed, half, dens)
    fam_g = RandomSparse(seed + 1, half, dens)
    f = generate(fam_f, d, "int")
    g = generate(fam_g, d, "int")
    return f, g, side


def cube_pieces(f: GridFunction, side: int) -> dict:
    """Split f into its restrictions to the cubes l * side + [0, side)^d."""
    if f.is_zero:
        return {}
    labels = np.floor_divide(f.coords, side)
    pieces = {}
    for lab in np.unique(labels, axis=0):
        corner = lab * side
        pieces[tuple(int(c) for c in lab)] = restrict_to_cube(f, corner, side)
    return pieces


def tiling_orthogonality(f: GridFunction, g: GridFunction, lam: int, side: int, threads: int = 1):
    """(far pairs checked, far pairs with nonzero output, near-pair sum equals T(f, g)).

    Far pairs are evaluated in full, without the disjoint-support shortcut.
    """
    fp, gp = cube_pieces(f, side), cube_pieces(g, side)
    pairs = [(lf, lg) for lf in fp for lg in gp]

    def one(pair):
        lf, lg = pair
        far = max(abs(a - b) for a, b in zip(lf, lg)) > 1
        val = bilinear(fp[lf], gp[lg], lam, Normalization.UNNORM, skip_disjoint=False).value
        return far, val

    results = ordered_map(one, pairs, threads)
    far_checked = sum(1 for far, _ in results if far)
    violations = sum(1 for far, v in results if far and not v.is_zero)
    near_sum = GridFunction.zero(f.d, f.mode)
    for far, v in results:
        if not far:
            near_sum = add(near_sum, v)
    whole = bilinear(f, g, lam, Normalization.UNNORM).value
    return far_checked, violations, near_sum == whole


def check_tiling(spec: TrialSpec) -> TrialOutcome:
    f, g, side = tiling_supports(spec.d, spec.lam, spec.f_family.seed)
    far, bad, recombines = tiling_orthogonality(f, g, spec.lam, side)
    return TrialOutcome(spec.index, "tiling", spec.d, spec.lam, float(bad), 0.0,
                        bad == 0 and recombines and far > 0,
                        f"side={side} far_pairs={far} recombines={str(recombines).lower()}")


_CHECK_FUNCS = {
    "slicing": check_slicing,
    "prop1": check_prop1,
    "thm2": check_thm2,
    "domination": check_domination,
    "tiling": check_tiling,
}


def run_verify(check: str, d: int, lam_max: int, trials: int, seed: int,
               threads: int = 1, dims: Optional[Sequence[int]] = None,
               lam_min: Optional[int] = None) -> VerifyReport:
    if check not in _CHECK_FUNCS:
        raise ValueError(f"unknown check {check!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if d < 1:
        raise ValueError("dim must be >= 1")
    floor = 2 if check in ("prop1", "thm2") else 1
    lam_min = floor if lam_min is None else max(floor, lam_min)
    specs = draw_trials(d, lam_max, trials, seed, lam_min, dims)
    outcomes = ordered_map(_CHECK_FUNCS[check], specs, threads)
    return VerifyReport(check, tuple(outcomes))
