"""Command-line front end: ``perbif <command> ...``.

Exit codes: 0 when every check passes, 2 when a check fails, 1 on usage,
input or numeric errors.
"""

import argparse
import json
import sys
from fractions import Fraction

from . import catalog
from .bifurcation import (
    BifurcationPoint,
    SolveConfig,
    classify_singularity,
    exact_point,
    point_at_rotation,
    rationalize,
    solve,
)
from .errors import PerbifError
from .invariance import contact_orders, schwarzian, schwarzian_composition, schwarzian_product_check, verify
from .numeric import is_exact
from .strata import cobweb_data, trace_strata
from .system import PeriodicSystem, rotate


class UsageError(Exception):
    pass


def _number(text, exact):
    text = text.strip()
    try:
        q = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None
    return q if exact else float(q)


def _vector(text, exact):
    if text is None or not text.strip():
        return []
    return [_number(t, exact) for t in text.split(",")]


def _fmt(v):
    """Seven significant digits for floats, exact text for rationals."""
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, str):
        return v
    if is_exact(v):
        q = Fraction(v)
        return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
    return format(float(v), ".7g")


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _load_system(args):
    try:
        system = PeriodicSystem.from_json(args.system)
    except OSError as exc:
        raise UsageError(f"cannot read system file: {exc}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid system file {args.system}: {exc}") from None
    if getattr(args, "rotate", 0):
        system = rotate(system, args.rotate % system.p)
    if args.mode == "rational" and system.transcendental:
        raise UsageError("rational mode cannot evaluate transcendental functions; use --mode float")
    return system


def _config(args):
    kw = {}
    for name in ("residual_tol", "max_iter", "damping"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    try:
        return SolveConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------------------
# commands


def cmd_solve(args):
    system = _load_system(args)
    init = _vector(args.init, False)
    if len(init) != system.mu + 1:
        raise UsageError(f"--init needs {system.mu + 1} values (x and {system.mu} parameters), got {len(init)}")
    config = _config(args)
    point = solve(system, args.rotation, args.power, args.mu, init, config)
    if args.mode == "rational" and point.converged:
        exact = rationalize(system, point, config)
        if exact is not None:
            point = exact
        else:
            print("note: no exact rational point found near the float solution", file=sys.stderr)
    _emit(point.dumps(), args.output)
    return 0 if point.converged and point.class_mu == args.mu else 2


def _read_point(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return BifurcationPoint.from_json(json.load(fh))
    except OSError as exc:
        raise UsageError(f"cannot read point file: {exc}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid point file {path}: {exc}") from None


def _point_for(system, point, args):
    """Re-index a point when the system was rotated on the command line."""
    shift = getattr(args, "rotate", 0) % system.p
    if shift:
        point = BifurcationPoint(**{**point.__dict__, "rotation": (point.rotation - shift) % system.p})
    if args.mode == "float" and point.exact:
        point = BifurcationPoint(**{**point.__dict__, "x_star": float(point.x_star),
                                    "lambda_star": [float(v) for v in point.lambda_star]})
    if args.mode == "rational" and not point.exact:
        raise UsageError("rational mode needs exact point coordinates (strings like \"27/35\")")
    return point


def cmd_verify(args):
    system = _load_system(args)
    point = _point_for(system, _read_point(args.point), args)
    report = verify(system, point, _config(args), tol=args.tol)
    if args.format == "json":
        _emit(report.dumps(), args.output)
    else:
        _emit(report.table(), args.output)
    return 0 if report.passed else 2


def cmd_classify(args):
    system = _load_system(args)
    exact = args.mode == "rational"
    x = _number(args.x, exact)
    params = _vector(args.params, exact)
    if len(params) != system.mu:
        raise UsageError(f"--params needs {system.mu} values, got {len(params)}")
    sing = classify_singularity(system, args.rotation, args.power, x, params, args.mu_max, _config(args))
    out = {"class": sing.label, "mu": sing.mu, "leading": None if sing.leading is None else _json_num(sing.leading)}
    _emit(json.dumps(out), args.output)
    return 0


def _json_num(v):
    if is_exact(v):
        return _fmt(v)
    return float(format(float(v), ".17g"))


def _region(text, mu):
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != mu:
        raise UsageError(f"--region needs {mu} intervals lo:hi, got {len(parts)}")
    out = []
    for p in parts:
        if ":" not in p:
            raise UsageError(f"interval {p!r} is not of the form lo:hi")
        lo, hi = p.split(":", 1)
        out.append((_number(lo, False), _number(hi, False)))
    return out


def cmd_trace(args):
    system = _load_system(args)
    point = _point_for(system, _read_point(args.point), args)
    mu = args.mu or point.mu
    if args.region:
        region = _region(args.region, mu)
    else:
        region = [(float(v) - args.scale, float(v) + args.scale) for v in point.lambda_star[:mu]]
    window = tuple(_vector(args.x_window, False)) if args.x_window else None
    if window is not None and len(window) != 2:
        raise UsageError("--x-window needs two values lo,hi")
    cloud = trace_strata(system, point.rotation if args.rotation is None else args.rotation, mu, point,
                         region, args.grid, free=args.free - 1, x_window=window)
    _emit(cloud.dumps() if args.format == "json" else cloud.to_csv(), args.output)
    return 0


def cmd_cobweb(args):
    system = _load_system(args)
    exact = args.mode == "rational"
    x0 = _number(args.x0, exact)
    params = _vector(args.params, exact)
    if len(params) != system.mu:
        raise UsageError(f"--params needs {system.mu} values, got {len(params)}")
    cob = cobweb_data(system, x0, params, args.n, fiber=args.fiber, graph_samples=args.samples)
    _emit(cob.to_csv(include_graphs=not args.no_graphs), args.output)
    return 0


# ---------------------------------------------------------------------------
# built-in examples


def _row(rows, name, value, reference, ok):
    rows.append((name, _fmt(value), _fmt(reference), "PASS" if ok else "FAIL"))


def _table(title, rows):
    w0 = max(len(r[0]) for r in rows)
    w1 = max(len(r[1]) for r in rows)
    w2 = max(len(r[2]) for r in rows)
    lines = [title, f"{'check':<{w0}}  {'value':>{w1}}  {'reference':>{w2}}  status"]
    lines += [f"{a:<{w0}}  {b:>{w1}}  {c:>{w2}}  {d}" for a, b, c, d in rows]
    return "\n".join(lines)


def cmd_example1(args):
    ref = catalog.EXAMPLE1_POINT
    system = catalog.example1()
    rows = []
    pt = solve(system, 0, 1, 3, list(catalog.EXAMPLE1_INIT))
    _row(rows, "newton converged", pt.converged, True, pt.converged)
    _row(rows, "newton iterations", pt.iterations, 30, pt.iterations <= 30)
    names = ["a", "l1", "l2", "l3"]
    refs = [ref["a"], *ref["lambda"]]
    for name, v, r in zip(names, [pt.x_star, *pt.lambda_star], refs):
        _row(rows, f"{name} (float)", v, r, abs(v - float(r)) <= 1e-10)
    ex = exact_point(system, 0, 1, 3, ref["a"], list(ref["lambda"]))
    for i, r in enumerate(ex.residuals):
        _row(rows, f"residual {i} (exact)", r, 0, r == 0)
    _row(rows, "class", f"A{ex.class_mu}" if ex.class_mu else "none", "A3", ex.class_mu == 3)
    b = point_at_rotation(system, ex, 1)
    _row(rows, "b = f0(a)", b, ref["b"], b == ref["b"])
    report = verify(system, ex)
    for rec in report.rotations:
        _row(rows, f"det J (rotation {rec.rotation})", rec.det, ref["det"], rec.det == ref["det"])
        _row(rows, f"F_xxxx != 0 (rotation {rec.rotation})", rec.nondeg_value, None, rec.nondegenerate)
    _row(rows, "invariance report", report.passed, True, report.passed)
    sf = schwarzian(system.maps[0], ref["a"], list(ref["lambda"]))
    sg = schwarzian(system.maps[1], b, list(ref["lambda"]))
    _row(rows, "Sf(a)", sf, ref["sf"], sf == ref["sf"])
    _row(rows, "Sg(b)", sg, ref["sg"], sg == ref["sg"])
    check = schwarzian_product_check(system, ex)
    _row(rows, "Sf(a)*Sg(b) < 0", sf * sg, None, check.verdict == "pass")
    fparams = [float(v) for v in ref["lambda"]]
    for m, x in ((0, float(ref["a"])), (1, float(b))):
        s = schwarzian_composition(system, m, 1, x, fparams)
        _row(rows, f"S(F_{m}) at fixed point", s, 0, abs(s) <= 1e-8)
    for m, slope in enumerate(contact_orders(system, ex)):
        _row(rows, f"contact order (rotation {m})", slope, 4, abs(slope - 4) <= 0.05)
    _emit(_table("swallowtail of x^2+l1 / l3*x^3+l2*x+1 (exact arithmetic)", rows), args.output)
    return 0 if all(r[3] == "PASS" for r in rows) else 2


def cmd_example2(args):
    ref = catalog.EXAMPLE2_POINT
    system = catalog.example2()
    rows = []
    pt = solve(system, 0, 1, 3, list(catalog.EXAMPLE2_INIT))
    _row(rows, "newton converged", pt.converged, True, pt.converged)
    for name, v, r in zip(["a", "l1", "l2", "l3"], [pt.x_star, *pt.lambda_star], [ref["a"], *ref["lambda"]]):
        _row(rows, name, v, r, abs(v - r) <= 1e-4)
    b = point_at_rotation(system, pt, 1)
    _row(rows, "b = f0(a)", b, ref["b"], abs(b - ref["b"]) <= 1e-4)
    report = verify(system, pt)
    for rec, key in zip(report.rotations, ("F4", "G4")):
        _row(rows, f"residual norm (rotation {rec.rotation})", rec.residual_norm, 1e-8, rec.residual_norm <= 1e-8)
        _row(rows, f"F_xxxx (rotation {rec.rotation})", rec.nondeg_value, ref[key],
             abs(rec.nondeg_value - ref[key]) <= 1e-4 * abs(ref[key]))
        _row(rows, f"det J (rotation {rec.rotation})", rec.det, ref["det"], abs(rec.det - ref["det"]) <= 1e-3)
    _row(rows, "invariance report", report.passed, True, report.passed)
    check = schwarzian_product_check(system, pt)
    _row(rows, "Sf(a)", check.s_f, None, check.s_f < 0)
    _row(rows, "Sg(b)", check.s_g, ref["sg"], abs(check.s_g - ref["sg"]) <= 1e-9)
    _row(rows, "Sf(a)*Sg(b) < 0", check.s_f * check.s_g, None, check.verdict == "pass")
    for m, x in ((0, pt.x_star), (1, b)):
        s = schwarzian_composition(system, m, 1, x, pt.params)
        _row(rows, f"S(F_{m}) at fixed point", s, 0, abs(s) <= 1e-8)
    _emit(_table("swallowtail of -x^4+l1*x^2+x+l2 / l3*tan(x) (floating point)", rows), args.output)
    return 0 if all(r[3] == "PASS" for r in rows) else 2


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    ap = argparse.ArgumentParser(prog="perbif", description="Bifurcations of periodic one-dimensional map systems.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, need_system=True):
        if need_system:
            p.add_argument("-s", "--system", required=True, help="system JSON file (maps, mu, optional fibers)")
        p.add_argument("--mode", choices=("float", "rational"), default="float", help="scalar mode")
        p.add_argument("-o", "--output", help="write to this file instead of stdout")

    def solver_opts(p):
        p.add_argument("--residual-tol", type=float)
        p.add_argument("--max-iter", type=int)
        p.add_argument("--damping", type=float)

    p = sub.add_parser("solve", help="Newton solve of the A_mu bifurcation equations")
    common(p)
    solver_opts(p)
    p.add_argument("-j", "--rotation", type=int, default=0)
    p.add_argument("-k", "--power", type=int, default=1)
    p.add_argument("--mu", type=int, required=True)
    p.add_argument("--init", required=True, help="comma-separated x,l1,...,lmu")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check the conditions at every cyclic rotation")
    common(p)
    solver_opts(p)
    p.add_argument("--point", required=True, help="point JSON written by 'solve'")
    p.add_argument("--rotate", type=int, default=0, help="rotate the system's maps by this many places first")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("classify", help="A_mu class of a fixed point")
    common(p)
    p.add_argument("-j", "--rotation", type=int, default=0)
    p.add_argument("-k", "--power", type=int, default=1)
    p.add_argument("--x", required=True)
    p.add_argument("--params", required=True, help="comma-separated l1,...,lmu")
    p.add_argument("--mu-max", type=int, default=6)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("trace", help="fold/cusp strata around a solved point")
    common(p)
    p.add_argument("--point", required=True)
    p.add_argument("--rotate", type=int, default=0)
    p.add_argument("-j", "--rotation", type=int, default=None)
    p.add_argument("--mu", type=int, default=None)
    p.add_argument("--region", help="lo:hi per parameter, comma-separated")
    p.add_argument("--scale", type=float, default=1e-2, help="half-width of the default box")
    p.add_argument("--grid", type=int, default=32)
    p.add_argument("--free", type=int, default=1, help="index of the parameter solved for (1-based)")
    p.add_argument("--x-window", help="lo,hi for Newton seeds in x")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("cobweb", help="cobweb segments and map graphs")
    common(p)
    p.add_argument("--x0", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("-n", type=int, default=10)
    p.add_argument("--fiber", type=int, default=0)
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--no-graphs", action="store_true")
    p.set_defaults(func=cmd_cobweb)

    for name, func in (("example1", cmd_example1), ("example2", cmd_example2)):
        p = sub.add_parser(name, help=f"built-in swallowtail example {name[-1]}")
        p.add_argument("-o", "--output")
        p.set_defaults(func=func, mode="float")
    return ap


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"perbif {args.command}: {exc}", file=sys.stderr)
        return 1
    except (PerbifError, ArithmeticError, ValueError, IndexError) as exc:
        print(f"perbif {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
