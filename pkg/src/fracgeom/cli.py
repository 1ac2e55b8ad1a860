"""Command-line front end.

    fracgeom per --set halfline --omega -1 1 --s 0.5
    fracgeom alpha --set parabola
    fracgeom curv --set disk --point 1 0 --s 0.5
    fracgeom koch --dimf --levels 5
    fracgeom dimf --level 6
    fracgeom minimize --phi step --phi-value 20
    fracgeom asym --set disk --point 1 0 --regime s-\\>1
    fracgeom asym --demo sign-change
    fracgeom rearrange

Sets are given by preset name, by a path to a JSON file, or inline JSON.
The JSON object is ``{"variant": <name>, fields...}`` with variants

    HalfSpace      {"normal": [..], "offset": c}          points with x . normal > c
    Ball           {"center": [..], "radius": r}
    AngularCone    {"vertex": [x, y], "arcs": [[a, b], ..]}
    IntervalUnion  {"intervals": [[a, b], ..]}             "inf" / "-inf" allowed
    PolygonRegion  {"vertices": [[x, y], ..]}
    Subgraph       {"kind": "poly", "coeffs": [c0, c1, ..]} or
                   {"kind": "table", "xs": [..], "us": [..]}
    Complement     {"inner": {...}}
    SetOp          {"op": "and|or|diff|xor", "a": {...}, "b": {...}}
    Transformed    {"inner": {...}, "scale": l, "rotation": [[..]], "translation": [..]}
    Raster         {"origin": [x, y], "cell": h, "mask": [[0/1, ..], ..], "exterior": {...}}

Tables are written as CSV (header row, ``%.12g``, Unix newlines) or JSON.
In CSV mode a JSON summary line goes to standard error.  Exit status is 0
on success, 2 on invalid input (a JSON error object on standard error) and
3 on numerical failure.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys

import numpy as np

from .core import (AngularCone, Ball, BoxDomain, Complement, FracParams, HalfSpace,
                   IntervalUnion, QuadSpec, Raster, SetOp, Subgraph, set_from_dict)

__all__ = ["main", "build_parser", "PRESETS", "run"]


class ValidationError(ValueError):
    pass


class NumericFailure(RuntimeError):
    pass


def _presets():
    inf = math.inf
    return {
        "halfline": (IntervalUnion(((-inf, 0.0),)), (0.0,)),
        "interval": (IntervalUnion(((0.0, 1.0),)), (0.0,)),
        "halfplane": (HalfSpace((0.0, -1.0), 0.0), (0.0, 0.0)),
        "disk": (Ball((0.0, 0.0), 1.0), (1.0, 0.0)),
        "quarter": (AngularCone((0.0, 0.0), ((0.0, math.pi / 2),)), (1.0, 0.0)),
        "cubic": (Complement(Subgraph("poly", (0.0, 0.0, 0.0, 1.0))), (0.0, 0.0)),
        "parabola": (Complement(Subgraph("poly", (0.0, 0.0, 1.0))), (0.0, 0.0)),
        "parabola-sub": (Subgraph("poly", (0.0, 0.0, 1.0)), (0.0, 0.0)),
        "bitten-disk": (SetOp("diff", Ball((0.0, 0.0), 1.0), Ball((1.0, 0.0), 0.2)), (0.8, 0.0)),
    }


PRESETS = _presets()


# ----------------------------------------------------------------------------
# argument handling

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _common(p, rmax=False):
    p.add_argument("--s", type=float, default=0.5, help="fractional order s in (0, 1)")
    p.add_argument("--n", type=int, default=None, help="ambient dimension (default: from the set)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--tol", type=float, default=None, help="stopping / acceptance tolerance")
    p.add_argument("--threads", type=int, default=0,
                   help="worker cap; 0 uses FRACGEOM_THREADS or 1")
    p.add_argument("--samples", type=int, default=200_000, help="line samples (n = 2)")
    p.add_argument("--replicates", type=int, default=8, help="independent replicates")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default="-", help="output path, '-' for standard output")
    if rmax:
        p.add_argument("--rmax", type=float, default=1.0,
                       help="largest radius: outer ring for curvature, excluded ball for alpha")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fracgeom", description="Fractional perimeters, curvatures and "
                 "nonlocal minimal graphs.  Environment: FRACGEOM_THREADS caps workers, "
                 "FRACGEOM_PURE=1 selects the numpy kernels.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("per", help="fractional perimeter of a set in a domain")
    _common(p)
    p.add_argument("--set", required=True, help="preset, JSON file or inline JSON")
    p.add_argument("--omega", type=float, nargs="+", required=True,
                   help="box: a b (n = 1) or x0 y0 x1 y1 (n = 2)")

    p = sub.add_parser("alpha", help="contribution from infinity")
    _common(p, rmax=True)
    p.add_argument("--set", required=True)
    p.add_argument("--point", type=float, nargs="+", default=None, help="base point q")
    p.add_argument("--s-seq", type=float, nargs="+", default=None,
                   help="decreasing s sequence for the limit (default 0.2 0.1 0.05 0.025)")
    p.add_argument("--single", action="store_true", help="only alpha_s(q, rmax, E) at --s")

    p = sub.add_parser("curv", help="fractional mean curvature at a boundary point")
    _common(p, rmax=True)
    p.add_argument("--set", required=True)
    p.add_argument("--point", type=float, nargs="+", default=None)
    p.add_argument("--nodes", type=int, default=96, help="direction nodes (n = 2)")

    p = sub.add_parser("koch", help="Koch snowflake prefixes and the divergence table")
    _common(p)
    p.add_argument("--level", type=int, default=3, help="prefix level for the vertex listing")
    p.add_argument("--dimf", action="store_true", help="estimate dimF from local perimeters")
    p.add_argument("--levels", type=int, default=5, help="use prefixes 1..levels")
    p.add_argument("--s-grid", type=float, nargs="+", default=None)
    p.add_argument("--resolution", type=float, default=0.02)

    p = sub.add_parser("dimf", help="box-counting dimension (and self-similar threshold)")
    _common(p)
    p.add_argument("--level", type=int, default=6, help="Koch level when --set is absent")
    p.add_argument("--set", default=None, help="polygon JSON (PolygonRegion)")
    p.add_argument("--offsets", type=int, default=8)
    p.add_argument("--b", type=int, default=None, help="self-similar pieces per generation")
    p.add_argument("--lam", type=float, default=None, help="self-similar scale factor")

    p = sub.add_parser("minimize", help="1-D nonlocal minimal graph with exterior data")
    _common(p)
    p.add_argument("--config", default=None,
                   help="problem JSON {omega, N, collar: {L, values|profile, tail}, s, M, "
                        "obstacle, tol, max_iter, seed}")
    p.add_argument("--omega", type=float, nargs=2, default=(-1.0, 1.0))
    p.add_argument("--N", type=int, default=128)
    p.add_argument("--phi", default="zero", choices=("zero", "const", "step", "linear"))
    p.add_argument("--phi-value", type=float, default=1.0,
                   help="constant / step height / slope of the exterior data")
    p.add_argument("--M", type=float, default=None, help="truncation level (default sup|phi|)")
    p.add_argument("--theta", type=float, default=2.0, help="collar reach in diameters")
    p.add_argument("--tail", choices=("zero", "bounded"), default="zero")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--method", choices=("newton", "gd"), default="newton")

    p = sub.add_parser("asym", help="s -> 1 / s -> 0 asymptotics and the sign-change demo")
    _common(p, rmax=True)
    p.add_argument("--set", default=None)
    p.add_argument("--point", type=float, nargs="+", default=None)
    p.add_argument("--regime", choices=("s->1", "s->0"), default="s->1")
    p.add_argument("--kind", choices=("curvature", "perimeter"), default="curvature")
    p.add_argument("--omega", type=float, nargs="+", default=None)
    p.add_argument("--s-seq", type=float, nargs="+", default=None)
    p.add_argument("--nodes", type=int, default=96, help="direction nodes for curvatures")
    p.add_argument("--demo", choices=("sign-change",), default=None,
                   help="tabulate s(1-s) I_s on the bitten disk")

    p = sub.add_parser("rearrange", help="vertical rearrangement of a raster set")
    _common(p)
    p.add_argument("--set", default=None, help="Raster JSON (default: bubble fixture)")
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=64, help="cells per side of the bubble fixture")
    return ap


def _load_set(arg: str):
    if arg in PRESETS:
        return PRESETS[arg]
    try:
        if arg.lstrip().startswith("{"):
            d = json.loads(arg)
        else:
            with open(arg, encoding="utf-8") as fh:
                d = json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"unknown preset or missing file: {arg}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON set: {exc}") from None
    try:
        return set_from_dict(d), None
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"invalid set description: {exc}") from None


def _quad(a) -> QuadSpec:
    return QuadSpec(mc_samples=a.samples, replicates=a.replicates, rng_seed=a.seed,
                    threads=a.threads, gauss_nodes=getattr(a, "nodes", 96))


def _domain(vals, n):
    if vals is None:
        raise ValidationError("--omega is required")
    if len(vals) != 2 * n:
        raise ValidationError(f"--omega needs {2 * n} numbers for n = {n}")
    return BoxDomain.box(vals[:n], vals[n:])


def _point(a, default, n):
    q = a.point if a.point is not None else default
    if q is None:
        raise ValidationError("--point is required for this set")
    if len(q) != n:
        raise ValidationError(f"--point needs {n} coordinates")
    return tuple(map(float, q))


# ----------------------------------------------------------------------------
# output

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return "%.12g" % float(v)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        return float("%.12g" % f)
    return obj


class Result:
    def __init__(self, header, rows, summary):
        self.header = list(header)
        self.rows = [list(r) for r in rows]
        self.summary = summary

    def csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.header) + "\n")
        for r in self.rows:
            buf.write(",".join(_fmt(v) for v in r) + "\n")
        return buf.getvalue()

    def json(self) -> str:
        d = dict(self.summary)
        d["table"] = {"header": self.header, "rows": self.rows}
        return json.dumps(_clean(d), sort_keys=True, indent=1) + "\n"


# ----------------------------------------------------------------------------
# commands

def cmd_per(a):
    from .interaction import per_s
    E, _ = _load_set(a.set)
    n = a.n or E.dim
    rep = per_s(E, _domain(a.omega, n), FracParams(n, a.s), _quad(a))
    return Result(["s", "local", "nonlocal", "total", "est_error"],
                  [[a.s, rep.local, rep.nonlocal_, rep.total, rep.est_error]],
                  {"command": "per", "s": a.s, "n": n, "local": rep.local,
                   "nonlocal": rep.nonlocal_, "total": rep.total, "est_error": rep.est_error,
                   "truncation_radius_used": rep.truncation_radius_used,
                   "n_lines": rep.n_lines})


def cmd_alpha(a):
    from .tail import DEFAULT_S_SEQUENCE, alpha_limit, alpha_s, alpha_analytic
    E, _ = _load_set(a.set)
    n = a.n or E.dim
    quad = _quad(a)
    if a.single:
        q = _point(a, (0.0,) * n, n)
        v, e = alpha_s(q, a.rmax, E, FracParams(n, a.s), quad)
        return Result(["s", "alpha_s", "s_alpha_s", "est_error"], [[a.s, v, a.s * v, e]],
                      {"command": "alpha", "alpha_s": v, "est_error": e, "point": q,
                       "radius": a.rmax})
    seq = tuple(a.s_seq or DEFAULT_S_SEQUENCE)
    bases = None
    if a.point is not None:
        q = _point(a, None, n)
        bases = [(q, a.rmax), (tuple(np.add(q, (0.31, -0.17)[:n])), 2 * a.rmax)]
    rep = alpha_limit(E, None, seq, quad, bases)
    return Result(["s", "s_alpha_s"], rep.values,
                  {"command": "alpha", "alpha_upper": rep.alpha_upper,
                   "alpha_lower": rep.alpha_lower, "exists": rep.exists,
                   "estimates": rep.estimates, "analytic": alpha_analytic(E)})


def cmd_curv(a):
    from .curvature import curvature_pv
    E, q0 = _load_set(a.set)
    n = a.n or E.dim
    q = _point(a, q0, n)
    rhos = [a.rmax * 2.0 ** -k for k in range(8)]
    rep = curvature_pv(E, q, FracParams(n, a.s), _quad(a), rhos)
    rows = [[r, v] for r, v in rep.rho_sums]
    return Result(["rho", "ring_sum"], rows,
                  {"command": "curv", "s": a.s, "point": q, "value": rep.value,
                   "inner": rep.inner, "outer": rep.outer, "est_error": rep.est_error})


def cmd_koch(a):
    from .fractal import KOCH_DIM, dimF_estimate, koch_prefix, koch_vertices
    if not a.dimf:
        v = koch_vertices(a.level)
        return Result(["x", "y"], v.tolist(), {"command": "koch", "level": a.level,
                                               "vertices": len(v)})
    if not 3 <= a.levels <= 8:
        raise ValidationError("--levels must lie in 3..8")
    prefixes = [koch_prefix(k) for k in range(1, a.levels + 1)]
    grid = a.s_grid or [0.5, 0.6, 0.7, 0.8, 0.85]
    Om = BoxDomain.ball((0.5, math.sqrt(3) / 6), 1.0)
    rep = dimF_estimate(prefixes, Om, grid, _quad(a), a.resolution)
    return Result(["s", "level", "per_local", "increment_ratio"], rep.table,
                  {"command": "koch", "dim": rep.dim, "s_star": rep.s_star,
                   "bracket": rep.bracket, "bracketed": rep.bracketed, "ratios": rep.ratios,
                   "reference": KOCH_DIM})


def cmd_dimf(a):
    from .fractal import SelfSimilarFamily, box_counting_dim, koch_prefix, threshold_exact
    from .core import PolygonRegion
    if a.set is not None:
        E, _ = _load_set(a.set)
        if not isinstance(E, PolygonRegion):
            raise ValidationError("box counting needs a PolygonRegion")
    else:
        E = koch_prefix(a.level)
    dim, table = box_counting_dim(E, offsets=a.offsets, seed=a.seed)
    summary = {"command": "dimf", "box_dim": dim}
    if a.b is not None or a.lam is not None:
        if a.b is None or a.lam is None:
            raise ValidationError("--b and --lam go together")
        fam = SelfSimilarFamily(a.b, a.lam)
        summary["threshold"] = threshold_exact(fam)
        summary["dim_exact"] = math.log(a.b) / math.log(a.lam)
    return Result(["delta", "count"], table, summary)


def _minimize_problem(a):
    from .nmg import GridFunction1D, MinimizeOptions
    if a.config:
        try:
            with open(a.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config: {exc}") from None
    else:
        cfg = {"omega": list(a.omega), "N": a.N, "s": a.s,
               "collar": {"L": a.theta * (a.omega[1] - a.omega[0]),
                          "profile": {"kind": a.phi, "value": a.phi_value}, "tail": a.tail},
               "tol": a.tol if a.tol is not None else 1e-8, "max_iter": a.max_iter}
        if a.M is not None:
            cfg["M"] = a.M
    try:
        lo, hi = map(float, cfg["omega"])
        N = int(cfg["N"])
        s = float(cfg.get("s", a.s))
        col = cfg["collar"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"invalid problem: {exc}") from None
    theta = float(col["L"]) / (hi - lo) if "L" in col else a.theta
    tail = col.get("tail", "zero")
    h = (hi - lo) / N
    m = int(math.ceil(theta * N - 1e-9))
    if "values" in col:
        vals = col["values"]
        left, right = np.asarray(vals["left"], float), np.asarray(vals["right"], float)
        if left.size != right.size:
            raise ValidationError("collar values need equal left/right lengths")
        m = left.size
    else:
        prof = col.get("profile", {"kind": "zero"})
        kind, val = prof.get("kind", "zero"), float(prof.get("value", 1.0))
        k = np.arange(m) + 0.5
        xl, xr = lo - m * h + k * h, hi + k * h
        f = {"zero": lambda x: 0 * x, "const": lambda x: val + 0 * x,
             "step": lambda x: np.where(x < 0.5 * (lo + hi), -val, val),
             "linear": lambda x: val * x}.get(kind)
        if f is None:
            raise ValidationError(f"unknown collar profile {kind!r}")
        left, right = f(xl), f(xr)
    u = GridFunction1D(lo, hi, np.zeros(N), left, right, tail)
    M = float(cfg.get("M", max(np.max(np.abs(left)), np.max(np.abs(right)))))
    psi = cfg.get("obstacle")
    if psi is not None:
        psi = np.array([np.nan if v is None else float(v) for v in psi])
    opts = MinimizeOptions(M=M, obstacle=psi, tol=float(cfg.get("tol", 1e-8)),
                           max_iter=int(cfg.get("max_iter", 200)),
                           method=cfg.get("method", a.method), theta=min(theta, 2.0))
    return u, s, opts


def cmd_minimize(a):
    from .nmg import minimize
    u, s, opts = _minimize_problem(a)
    res = minimize(u, FracParams(1, s), opts)
    if not res.converged:
        raise NumericFailure(f"no convergence in {res.iterations} iterations "
                             f"(residual {np.max(np.abs(res.residual)):.3g})")
    rows = np.stack([res.u.centers, res.u.values], 1)
    # render -0 as 0 for byte-stable output
    rows = np.where(rows == 0, 0.0, rows)
    return Result(["x", "u"], rows.tolist(),
                  {"command": "minimize", "iterations": res.iterations, "F": res.F,
                   "residual_max": float(np.max(np.abs(res.residual))), "M": opts.M,
                   "s": s, "converged": res.converged})


def cmd_asym(a):
    from .curvature import curvature_asymptotics, curvature_pv
    from .interaction import perimeter_asymptotics
    quad = _quad(a)
    if a.demo == "sign-change":
        E, q = PRESETS["bitten-disk"]
        grid = a.s_seq or [k / 20 for k in range(1, 20)]
        rows = []
        for s in grid:
            v = curvature_pv(E, q, FracParams(2, s), quad).value
            rows.append([s, v, s * (1 - s) * v])
        return Result(["s", "I_s", "s_1ms_I_s"], rows,
                      {"command": "asym", "demo": "sign-change", "point": q,
                       "set": "bitten-disk"})
    if a.set is None:
        raise ValidationError("--set is required")
    E, q0 = _load_set(a.set)
    n = a.n or E.dim
    if a.kind == "perimeter":
        lim, err, table = perimeter_asymptotics(E, _domain(a.omega, n), a.regime, a.s_seq, quad)
    else:
        q = _point(a, q0, n)
        lim, err, table = curvature_asymptotics(E, q, a.regime, a.s_seq, n, quad)
    return Result(["s", "raw", "rescaled"], table,
                  {"command": "asym", "regime": a.regime, "kind": a.kind, "limit": lim,
                   "est_error": err})


def bubble_fixture(grid: int = 64, M: float = 1.0):
    """Lower half of (-1, 1) x (-M, M) plus a detached square above it."""
    h = 2.0 / grid
    xc = -1 + (np.arange(grid) + 0.5) * h
    yc = -M + (np.arange(int(round(2 * M / h))) + 0.5) * h
    X, Y = np.meshgrid(xc, yc)
    mask = (Y < 0) | ((np.abs(X) < 0.25) & (Y > 0.4) & (Y < 0.7))
    ext = Subgraph("table", ((-1.0, 1.0), (0.0, 0.0)))
    return Raster((-1.0, -M), h, mask, ext)


def cmd_rearrange(a):
    from .nmg import raster_perimeter_difference, rearrange_vertical
    if a.set is None:
        E = bubble_fixture(a.grid, a.M)
    else:
        E, _ = _load_set(a.set)
        if not isinstance(E, Raster):
            raise ValidationError("rearrange needs a Raster set")
    w, Es = rearrange_vertical(E, a.M)
    (x0, y0), (x1, y1) = E.window
    Om = BoxDomain.box((x0, y0), (x1, y1))
    p1, p2, d, e1, e2, de = raster_perimeter_difference(E, Es, Om, FracParams(2, a.s), _quad(a))
    xc = x0 + (np.arange(len(w)) + 0.5) * E.cell
    return Result(["x", "w"], np.stack([xc, w], 1).tolist(),
                  {"command": "rearrange", "per_E": p1, "per_E_star": p2, "difference": d,
                   "err_E": e1, "err_E_star": e2, "difference_err": de})


COMMANDS = {"per": cmd_per, "alpha": cmd_alpha, "curv": cmd_curv, "koch": cmd_koch,
            "dimf": cmd_dimf, "minimize": cmd_minimize, "asym": cmd_asym,
            "rearrange": cmd_rearrange}


def run(argv=None, stdout=None, stderr=None) -> int:
    """Parse, dispatch and write outputs; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        a = build_parser().parse_args(argv)
        if a.threads < 0 or a.samples < 1 or a.replicates < 2:
            raise ValidationError("--threads >= 0, --samples >= 1 and --replicates >= 2 required")
        res = COMMANDS[a.command](a)
    except SystemExit as exc:          # --help
        return int(exc.code or 0)
    except (ValidationError, ValueError, KeyError, TypeError) as exc:
        stderr.write(json.dumps({"error": str(exc), "kind": "validation"}, sort_keys=True) + "\n")
        return 2
    except (NumericFailure, RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        stderr.write(json.dumps({"error": str(exc), "kind": "numeric"}, sort_keys=True) + "\n")
        return 3
    text = res.csv() if a.format == "csv" else res.json()
    if a.out == "-":
        stdout.write(text)
    else:
        with open(a.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    if a.format == "csv":
        stderr.write(json.dumps(_clean(res.summary), sort_keys=True) + "\n")
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
