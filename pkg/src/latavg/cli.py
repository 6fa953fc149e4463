"""latavg command line: enumeration, operators, verification, scans and benchmarks.

Exit status: 0 on success, 1 when a verification or asserted scan fails,
2 on configuration or input errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence

from . import __version__
from .analysis import (CHECKS, TARGETS, ParameterDomainError, ScanTarget, lambda_grid, range_figure,
                       resolve_threads, run_scan, run_verify)
from .averages import (Normalization, ball_average, dyadic_maximal, lacunary_maximal,
                       spherical_average, truncated_spherical_maximal)
from .bench import BenchConfig, run_bench, to_csv as bench_csv
from .bilinear import Method, bilinear
from .grid import GridFunction, ValueMode, atomic_write_text, dumps, load, parse_family
from .lattice import CapacityError, enumerate_sphere, enumerate_triangle_set, r
from .simplex import simplex_average


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    args: argparse.Namespace
    threads: int


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        atomic_write_text(path, text)
    else:
        sys.stdout.write(text)


def _points_csv(points, header: List[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in points:
        w.writerow([int(c) for c in row])
    return buf.getvalue()


def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad integer list {text!r}") from None


def _load(path: str, d: int, norm: Normalization) -> GridFunction:
    try:
        f = load(path)
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if f.d != d:
        raise ConfigError(f"{path} has dimension {f.d}, expected {d}")
    # normalized averages are real-valued
    if norm is not Normalization.UNNORM and f.mode is ValueMode.INT:
        f = f.astype(ValueMode.FLOAT)
    return f


def cmd_count(cfg: RunConfig) -> int:
    a = cfg.args
    print(r(a.dim, a.n))
    return 0


def cmd_sphere(cfg: RunConfig) -> int:
    a = cfg.args
    if a.emit == "count":
        print(r(a.dim, a.n))
        return 0
    shell = enumerate_sphere(a.dim, a.n)
    _emit(_points_csv(shell.points, [f"x{i + 1}" for i in range(a.dim)]), a.out)
    return 0


def cmd_triangles(cfg: RunConfig) -> int:
    a = cfg.args
    tri = enumerate_triangle_set(a.dim, a.lam)
    header = [f"u{i + 1}" for i in range(a.dim)] + [f"v{i + 1}" for i in range(a.dim)]
    _emit(_points_csv(tri.reshape(len(tri), -1), header), a.out)
    return 0


def cmd_avg(cfg: RunConfig) -> int:
    a = cfg.args
    norm = Normalization.parse(a.norm)
    maximal = a.op in ("dyadic", "maximal", "lacunary")
    f = _load(a.input, a.dim, Normalization.EXACT if maximal else norm)
    if a.op == "sphere":
        out = spherical_average(f, a.lam, norm)
    elif a.op == "ball":
        out = ball_average(f, a.lam, norm)
    elif a.op == "dyadic":
        out = dyadic_maximal(f, a.lam)
    elif a.op == "maximal":
        out = truncated_spherical_maximal(f, a.lam)
    else:
        out = lacunary_maximal(f, a.lam)
    atomic_write_text(a.output, dumps(out))
    return 0


def cmd_bilinear(cfg: RunConfig) -> int:
    a = cfg.args
    norm = Normalization.parse(a.norm)
    f = _load(a.f, a.dim, norm)
    g = _load(a.g, a.dim, norm)
    if f.mode is not g.mode:
        f, g = f.astype(ValueMode.FLOAT), g.astype(ValueMode.FLOAT)
    res = bilinear(f, g, a.lam, norm, Method.parse(a.method))
    if res.empty_normalizer:
        print(f"warning: no pairs at lambda={a.lam}; output is zero", file=sys.stderr)
    atomic_write_text(a.output, dumps(res.value))
    return 0


def cmd_simplex(cfg: RunConfig) -> int:
    a = cfg.args
    norm = Normalization.parse(a.norm)
    paths = [p for p in a.inputs.split(",") if p]
    if len(paths) != a.k:
        raise ConfigError(f"--k {a.k} needs {a.k} inputs, got {len(paths)}")
    fs = [_load(p, a.dim, norm) for p in paths]
    if len({f.mode for f in fs}) > 1:
        fs = [f.astype(ValueMode.FLOAT) for f in fs]
    atomic_write_text(a.output, dumps(simplex_average(fs, a.lam, norm)))
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    a = cfg.args
    rep = run_verify(a.check, a.dim, a.lambda_max, a.trials, a.seed, cfg.threads)
    _emit(rep.to_csv(), a.report)
    failed = sum(1 for o in rep.outcomes if not o.passed)
    print(f"{a.check}: {len(rep.outcomes) - failed}/{len(rep.outcomes)} trials passed", file=sys.stderr)
    return 0 if rep.passed else 1


def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad number list {text!r}") from None


def cmd_scan(cfg: RunConfig) -> int:
    a = cfg.args
    grid = lambda_grid(a.grid, a.lambda_min, a.lambda_max)
    ff, gg = parse_family(a.family_f), parse_family(a.family_g)
    if a.target == "range-figure":
        inv = _float_list(a.inv_values)
        _emit(range_figure(a.dim, inv, grid, ff, gg, cfg.threads), a.out)
        return 0
    ps = _float_list(a.p)
    if a.target == "simplex":
        target = ScanTarget("simplex", a.dim, k=len(ps), ps=tuple(ps))
    else:
        if len(ps) != 1:
            raise ConfigError("--p takes one value for this target")
        target = ScanTarget(a.target, a.dim, p=ps[0], q=a.q, s=a.s, k=a.k)
    rep = run_scan(target, ff, gg, grid, a.tolerance, cfg.threads)
    _emit(rep.to_csv(), a.out)
    if rep.hypotheses_met and not rep.passed:
        return 1
    return 0


def cmd_bench(cfg: RunConfig) -> int:
    a = cfg.args
    lams = tuple(_int_list(a.lambdas))
    methods = tuple(Method.parse(m) for m in a.methods.split(",") if m)
    cfg_b = BenchConfig(a.dim, lams, methods, a.points, a.repeats, a.seed)
    _emit(bench_csv(run_bench(cfg_b)), a.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latavg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, fn):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--version", action="version", version=__version__)
        p.set_defaults(fn=fn)
        return p

    def threads(p):
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: LATAVG_THREADS or CPU count)")

    p = add("count", "print r_d(n), the number of x in Z^d with |x|^2 = n", cmd_count)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", type=int, required=True)

    p = add("sphere", "lattice points with |x|^2 = n", cmd_sphere)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--emit", choices=["points", "count"], default="points")
    p.add_argument("--out")

    p = add("triangles", "pairs (u, v) forming equilateral triangles with the origin", cmd_triangles)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=int, required=True)
    p.add_argument("--out")

    p = add("avg", "linear spherical and ball averages and maximal functions", cmd_avg)
    p.add_argument("--op", choices=["sphere", "ball", "dyadic", "maximal", "lacunary"], required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=int, required=True)
    p.add_argument("--norm", choices=["exact", "power", "unnorm"], default="exact")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)

    p = add("bilinear", "bilinear spherical average T_lambda(f, g)", cmd_bilinear)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=int, required=True)
    p.add_argument("--method", choices=["direct", "sliced"], default="sliced")
    p.add_argument("--norm", choices=["exact", "power", "unnorm"], default="exact")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--output", required=True)

    p = add("simplex", "k-linear simplex average", cmd_simplex)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=int, required=True)
    p.add_argument("--norm", choices=["exact", "power", "unnorm"], default="exact")
    p.add_argument("--inputs", required=True, help="comma-separated JSON files, one per function")
    p.add_argument("--output", required=True)

    p = add("verify", "randomized checks of identities and pointwise bounds", cmd_verify)
    p.add_argument("--check", required=True, help="one of " + ", ".join(CHECKS))
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--lambda-max", type=int, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report")
    threads(p)

    p = add("scan", "fit the lambda exponent of a norm inequality", cmd_scan)
    p.add_argument("--target", required=True, help="one of " + ", ".join(TARGETS + ("range-figure",)))
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--p", default="2", help="exponent; comma list p_1,...,p_k for simplex")
    p.add_argument("--q", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--lambda-min", type=int, required=True)
    p.add_argument("--lambda-max", type=int, required=True)
    p.add_argument("--grid", choices=["dyadic", "linear", "even", "odd"], default="dyadic")
    p.add_argument("--family-f", default="delta")
    p.add_argument("--family-g", default="delta")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--inv-values", default="0.125,0.25,0.375,0.5,0.625,0.75,0.875",
                   help="1/p and 1/q values for range-figure")
    p.add_argument("--out")
    threads(p)

    p = add("bench", "time direct against sliced bilinear evaluation", cmd_bench)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--lambdas", required=True, help="comma-separated radii")
    p.add_argument("--methods", default="direct,sliced")
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = RunConfig(args.command, args, resolve_threads(getattr(args, "threads", None)))
        return args.fn(cfg)
    except (ConfigError, ParameterDomainError, CapacityError, ValueError, OverflowError,
            ZeroDivisionError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
