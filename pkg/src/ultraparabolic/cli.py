"""Command-line entry point: ``ultraparabolic <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .problem import compatibility_check
from .problem_io import ProblemFileError, load_problem, parse_int
from .regularizer import RegularizationParams, regularized_solve
from .spectral import evaluate_series


def _int_list(text: str) -> list[int]:
    try:
        values = [parse_int(v.strip()) for v in text.split(",") if v.strip()]
    except ProblemFileError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"need a list of positive integers, got {text!r}")
    return values


def _int(text: str) -> int:
    try:
        return parse_int(text)
    except ProblemFileError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _point(text: str) -> tuple[float, float]:
    try:
        t, s = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 't,s', got {text!r}") from None
    return t, s


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc.strerror or exc}") from exc


def _rows_text(rows) -> str:
    buf = io.StringIO()
    ex.write_rows(rows, buf)
    return buf.getvalue()


def _grid(args) -> ex.GridConfig:
    return ex.GridConfig(K=args.K, M=args.M, p=args.p)


def cmd_table1(args) -> None:
    rows = ex.run_table1(_grid(args), args.m, supplementary=args.supplementary)
    if args.out and args.out != "-":
        ex.emit_csv(rows, args.out)
    else:
        _write(_rows_text(rows), None)


def cmd_diverge(args) -> None:
    result = ex.run_divergence(args.m, K=args.K)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "log_norm", "norm"])
    for m, lg in zip(result.m_values, result.log_norms):
        w.writerow([m, ex.format_number(lg), ex.format_number(math.exp(lg)) if lg < 709 else "inf"])
    _write(buf.getvalue(), args.out)
    if args.profiles:
        shown = [m for m in result.m_values if result.profiles[m] is not None]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "exact"] + [f"m={m}" for m in shown])
        for j, x in enumerate(result.x):
            w.writerow([ex.format_number(x), ex.format_number(result.exact_profile[j])]
                       + [ex.format_number(result.profiles[m][j]) for m in shown])
        _write(buf.getvalue(), args.profiles)


def cmd_sweep(args) -> None:
    result = ex.run_convergence_sweep(args.p, args.m, args.point, K=args.K)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "eps", "error"])
    for m, e, err in zip(result.m_values, result.eps, result.errors):
        w.writerow([m, ex.format_number(e), ex.format_number(err)])
    _write(buf.getvalue(), args.out)
    print(f"slope={result.slope:.6f} intercept={result.intercept:.6f} residual={result.residual:.3e}")


def cmd_solve(args) -> None:
    spec = load_problem(args.problem)
    report = compatibility_check(spec)
    if not report.passed:
        print(f"warning: data incompatible at t=s=T on modes {[n for n, _ in report.violations]}"
              f" (max residual {report.max_residual:.3g})", file=sys.stderr)
    v = regularized_solve(spec, RegularizationParams(args.p, args.eps), args.t, args.s)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if args.x is None:
        w.writerow(["n", "coefficient"])
        for n, c in v:
            w.writerow([n, ex.format_number(c)])
    else:
        w.writerow(["x", "value"])
        for x, val in zip(args.x, evaluate_series(v, args.x)):
            w.writerow([ex.format_number(x), ex.format_number(val)])
    _write(buf.getvalue(), args.out)


def cmd_surface(args) -> None:
    _write(_rows_text(ex.surface_rows(_grid(args), args.m[0])), args.out)


def cmd_profile(args) -> None:
    rows = [r for m in args.m for r in ex.profile_rows(_grid(args), m, *args.point)]
    _write(_rows_text(rows), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ultraparabolic",
        description="Filter-regularised final-value problem for u_t + u_s - u_xx = f.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def grid_flags(p, default_m):
        p.add_argument("--K", type=_int, default=100, help="space subdivisions (even)")
        p.add_argument("--M", type=_int, default=80, help="time subdivisions")
        p.add_argument("--p", type=float, default=10.0, help="filter exponent")
        p.add_argument("--m", type=_int_list, default=default_m, help="perturbation indices, e.g. 1e2,1e10")
        p.add_argument("--out", help="output CSV path (default: stdout)")

    p = sub.add_parser("table1", help="reproduce the table of absolute errors")
    grid_flags(p, [10**2, 10**10])
    p.add_argument("--supplementary", action="store_true", help="also report rows at x = pi/3")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("diverge", help="norm blow-up of the unregularised solution")
    p.add_argument("--m", type=_int_list, default=[1, 2, 3])
    p.add_argument("--K", type=_int, default=100)
    p.add_argument("--out")
    p.add_argument("--profiles", help="also write u_m(x, 1/2, 1/2) on the grid to this CSV")
    p.set_defaults(func=cmd_diverge)

    p = sub.add_parser("sweep", help="fit the convergence rate in eps")
    p.add_argument("--p", type=float, default=10.0)
    p.add_argument("--m", type=_int_list, default=[10**2, 10**4, 10**6, 10**8])
    p.add_argument("--point", type=_point, default=(0.0, 0.0), help="t,s")
    p.add_argument("--K", type=_int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("solve", help="regularised solution of a problem file at one (t, s)")
    p.add_argument("--problem", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--x", type=_float_list, help="evaluate at these x instead of printing modes")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("surface", help="(t, s) surface at x = pi/2 for one m")
    grid_flags(p, [10**10])
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("profile", help="x profiles at fixed (t, s)")
    grid_flags(p, [5 * 10**9, 7 * 10**9, 10**10])
    p.add_argument("--point", type=_point, default=(0.0, 0.0), help="t,s")
    p.set_defaults(func=cmd_profile)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with np.errstate(over="raise", invalid="raise"):
            args.func(args)
    except (ValueError, OSError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
