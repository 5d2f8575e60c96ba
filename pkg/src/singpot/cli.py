"""Command-line interface: ``singpot <command> [options]``.

Usage errors exit with status 2, numerical failures with status 1.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from typing import Sequence

from . import bounds, dualsolver, potential, specfun, tables
from .qtensor import QTensor

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _num(x: float) -> str:
    return repr(float(x) + 0.0) if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


def _triple(xs) -> str:
    return "(" + ", ".join(_num(x) for x in xs) + ")"


def _parse_matrix(text: str) -> QTensor:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"--matrix: {exc}") from exc
    if len(vals) != 6:
        raise UsageError("--matrix needs six comma-separated entries q11,q12,q13,q22,q23,q33")
    return QTensor.from_upper(vals)


def _q_from_args(args) -> QTensor:
    if args.matrix is not None:
        if args.lambda1 is not None or args.lambda2 is not None:
            raise UsageError("give either --matrix or --lambda1/--lambda2, not both")
        return _parse_matrix(args.matrix)
    if args.lambda1 is None or args.lambda2 is None:
        raise UsageError("need --lambda1 and --lambda2 (or --matrix)")
    return QTensor.from_eigenvalues(args.lambda1, args.lambda2)


def cmd_eval(args, out) -> int:
    q = _q_from_args(args)
    value = potential.evaluate(q, args.alpha)
    print(f"classification = {value.classification}", file=out)
    print(f"eigenvalues = {_triple(value.eigenvalues)}", file=out)
    print(f"f = {_num(value.f)}", file=out)
    print(f"g = {_num(value.g)}", file=out)
    print(f"psi_B = {_num(value.psi_b)}", file=out)
    if not value.finite:
        return EXIT_OK
    grad = potential.gradient_from(value)
    print(f"mu = {_triple(value.mu.mu)}", file=out)
    print(f"grad_norm = {_num(grad.norm)}", file=out)
    print(f"radial = {_num(grad.radial)}", file=out)
    print(f"tangential = {_num(grad.tangential)}", file=out)
    return EXIT_OK


def cmd_solve(args, out) -> int:
    l1, l2 = args.lambda1, args.lambda2
    lam = sorted((l1, l2, -l1 - l2))
    res = dualsolver.solve_multipliers(lam, args.tol, args.max_iter)
    print(f"eigenvalues = {_triple(lam)}", file=out)
    print(f"mu = {_triple(res.mu.mu)}", file=out)
    print(f"nu = {_triple((res.nu.nu1, res.nu.nu2))}", file=out)
    print(f"residual = {_num(res.residual)}", file=out)
    print(f"relative_residual = {_num(res.relative_residual)}", file=out)
    print(f"iterations = {res.iterations}", file=out)
    print(f"condition_estimate = {_num(res.condition_estimate)}", file=out)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    reports, summary = bounds.run_suite(args.suite)
    if args.out:
        text = bounds.reports_to_json(reports) if args.out.endswith(".json") else bounds.reports_to_csv(reports)
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    names = sorted({r.name for r in reports})
    n_fail = 0
    for name in names:
        group = [r for r in reports if r.name == name]
        held = sum(r.holds is True for r in group)
        failed = sum(r.holds is False for r in group)
        skipped = sum(r.holds is None for r in group)
        n_fail += failed
        worst = min((r.slack for r in group if r.in_regime), default=math.nan)
        print(f"{name}: {held} held, {failed} failed, {skipped} outside regime, min slack {_num(worst)}", file=out)
    for suite, info in summary.items():
        for key, val in info.items():
            shown = _num(val) if isinstance(val, float) else val
            print(f"{suite}.{key} = {shown}", file=out)
    print("verify: " + ("PASS" if n_fail == 0 else f"FAIL ({n_fail} in-regime failures)"), file=out)
    return EXIT_OK if n_fail == 0 else EXIT_NUMERIC


def cmd_constants(args, out) -> int:
    c = specfun.compute_constants()
    print(f"c_f_lower = {_num(bounds.C_F_LOWER)}", file=out)
    print(f"c_grad_lower = {_num(c.c_grad_lower)}", file=out)
    print(f"c_grad_upper = {_num(c.c_grad_upper)}", file=out)
    print(f"inf_ratio = {_num(c.inf_ratio)} at xi = {_num(c.inf_at)}", file=out)
    print(f"sup_ratio = {_num(c.sup_ratio)} at xi = {_num(c.sup_at)}", file=out)
    return EXIT_OK


def cmd_table(args, out) -> int:
    try:
        table = tables.build_table(args.n, args.eta, workers=args.workers)
    except tables.TableError as exc:
        raise UsageError(str(exc)) from exc
    tables.save_table(table, args.out)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(tables.table_to_csv(table))
    print(f"wrote {table.n_nodes} nodes (n = {table.n}, eta = {_num(table.eta)}) to {args.out}", file=out)
    return EXIT_OK


def cmd_query(args, out) -> int:
    try:
        table = tables.load_table(args.table)
    except OSError as exc:
        raise UsageError(f"cannot read table: {exc}") from exc
    f = tables.interpolate_f(table, args.lambda1, args.lambda2, args.method)
    g = tables.interpolate_g(table, args.lambda1, args.lambda2, args.method)
    print(f"f = {_num(f)}", file=out)
    print(f"g = {_num(g)}", file=out)
    return EXIT_OK


PLOT_COLUMNS = ("epsilon", "delta", "f", "g", "upper", "lower", "grad_norm", "grad_norm_eps")


def cmd_plotdata(args, out) -> int:
    pts = bounds.sweep_family(args.path, args.points)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PLOT_COLUMNS)
    for p in sorted(pts, key=lambda p: p.epsilon):
        l1, l2 = p.lam[0], p.lam[1]
        row = (p.epsilon, p.delta, p.f, p.g, bounds.thm11_upper(l1, l2), bounds.thm11_lower(l1, l2), p.grad_norm, p.grad_norm * p.epsilon)
        w.writerow([repr(float(x)) for x in row])
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(buf.getvalue())
    print(f"wrote {len(pts)} rows to {args.out}", file=out)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="singpot", description="Singular bulk potential evaluation and bound checks.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    e = sub.add_parser("eval", help="evaluate f, g, psi_B and the gradient")
    e.add_argument("--lambda1", type=float)
    e.add_argument("--lambda2", type=float)
    e.add_argument("--matrix", help="q11,q12,q13,q22,q23,q33")
    e.add_argument("--alpha", type=float, default=0.0)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("solve", help="solve for the multipliers")
    s.add_argument("--lambda1", type=float, required=True)
    s.add_argument("--lambda2", type=float, required=True)
    s.add_argument("--tol", type=float, default=dualsolver.DEFAULT_TOL)
    s.add_argument("--max-iter", type=int, default=dualsolver.DEFAULT_MAX_ITER)
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="run a bound-verification suite")
    v.add_argument("--suite", choices=bounds.SUITES + ("all",), default="all")
    v.add_argument("--out", help="report file (.csv or .json)")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("constants", help="print the blowup constants")
    c.set_defaults(func=cmd_constants)

    t = sub.add_parser("table", help="build an interpolation table of g")
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--eta", type=float, default=tables.DEFAULT_ETA)
    t.add_argument("--out", required=True)
    t.add_argument("--csv", help="also write a CSV export")
    t.add_argument("--workers", type=int, default=1)
    t.set_defaults(func=cmd_table)

    q = sub.add_parser("query", help="interpolate f from a table")
    q.add_argument("--table", required=True)
    q.add_argument("--lambda1", type=float, required=True)
    q.add_argument("--lambda2", type=float, required=True)
    q.add_argument("--method", choices=tables.METHODS, default="bilinear")
    q.set_defaults(func=cmd_query)

    d = sub.add_parser("plotdata", help="columns along a path family for plotting")
    d.add_argument("--path", choices=bounds.FAMILIES, required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--points", type=int, default=40)
    d.set_defaults(func=cmd_plotdata)
    return p


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=err)
        return EXIT_USAGE
    except (dualsolver.SolverError, tables.TableError, tables.NodeSolveError, bounds.OutOfRegime, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
