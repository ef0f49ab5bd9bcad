"""Command line front end.

Exit codes: 0 success, 1 failed check or failed verification, 2 bad
configuration (message names the offending field), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .direct import direct_solve
from .errors import (CompatibilityError, ExpansionOrderError, ExprDomainError,
                     ExprSyntaxError, GraphConfigError, KernelRangeError,
                     StabilityError)
from .expansion import build_expansion
from .graph import check_compatibility_C1, check_compatibility_C2
from .grid import make_direct_grid, make_expansion_grids
from .harness import (NORM_NOTE, convergence_sweep, load_config,
                      validate_config, write_field_csvs, write_plot_csv,
                      write_report_csv, write_residuals_csv, write_trace_csv)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _cmd_check(args) -> int:
    rc = validate_config(load_config(args.config))
    r1 = check_compatibility_C1(rc.spec)
    r2 = check_compatibility_C2(rc.spec)
    for line in r1.lines():
        print("C1 " + line)
    for line in r2.lines():
        print("C2 " + line + ("" if "FAIL" not in line else " (informational)"))
    print(f"first-order fit: {'PASS' if r1.passed else 'FAIL'}; "
          f"second-order fit: {'PASS' if r2.passed else 'FAIL'} (informational)")
    return EXIT_OK if r1.passed else EXIT_CHECK_FAILED


def _cmd_solve(args) -> int:
    rc = validate_config(load_config(args.config))
    if not (0.0 < args.eps < 1.0):
        raise GraphConfigError("eps: must lie in (0,1)")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = make_direct_grid(rc.spec, args.eps, rc.n_per_edge, rc.cfl)
    fld = direct_solve(rc.spec, args.eps, grid, cfl=rc.cfl)
    paths = write_field_csvs(out, fld)
    write_trace_csv(out / "trace.csv", grid.times(), fld.sigma)
    for p in paths:
        print(f"wrote {p}")
    print(f"wrote {out / 'trace.csv'}")
    return EXIT_OK


def _term_csv(path: Path, x: np.ndarray, t: np.ndarray, u: np.ndarray,
              xname: str) -> None:
    sx = max(1, -((len(x) - 1) // -256))
    st = max(1, -((len(t) - 1) // -256))
    xs, ts, us = x[::sx], t[::st], u[::sx, ::st]
    col_x = np.repeat(xs, len(ts))
    col_t = np.tile(ts, len(xs))
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{xname},t,value\n")
        np.savetxt(fh, np.column_stack([col_x, col_t, us.ravel()]),
                   fmt="%.17g", delimiter=",", newline="\n")


def _cmd_expand(args) -> int:
    rc = validate_config(load_config(args.config))
    p = rc.p if args.p is None else args.p
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grids = make_expansion_grids(rc.spec, rc.n_per_edge, rc.cfl)
    es = build_expansion(rc.spec, p, grids)
    t = grids.times
    n = 0
    for loc, e in enumerate(es.g0_base.edge_ids):
        _term_csv(out / f"term_U_s0_edge{e}.csv", grids.g0.x_nodes(loc), t,
                  es.g0_base.edges[loc], "x")
        n += 1
    for (r, l), fld in sorted(es.g0_corr.items()):
        for loc, e in enumerate(fld.edge_ids):
            _term_csv(out / f"term_U_s{r}_sub{l}_edge{e}.csv",
                      grids.g0.x_nodes(loc), t, fld.edges[loc], "x")
            n += 1
    for (s, e), term in sorted(es.edge_terms.items()):
        _term_csv(out / f"term_u_s{s}_edge{e}.csv", term.x_nodes, t,
                  term.values, "x")
        n += 1
    for (P, e), fld in sorted(es.vertex_layers.items()):
        _term_csv(out / f"term_v_P{P}_edge{e}.csv", fld.grid.xi_nodes(), t,
                  fld.values, "xi")
        n += 1
    for (s, e), fld in sorted(es.boundary_layers.items()):
        _term_csv(out / f"term_w_s{s}_edge{e}.csv", fld.grid.xi_nodes(), t,
                  fld.values, "xi")
        n += 1
    print(f"wrote {n} term CSVs to {out} (decimated to <=257 samples per axis)")
    return EXIT_OK


def _cmd_verify(args) -> int:
    rc = validate_config(load_config(args.config))
    p = rc.p if args.p is None else args.p
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    print(f"note: {NORM_NOTE}")
    rep = convergence_sweep(rc.spec, p, rc.epsilons, rc.n_per_edge, rc.cfl,
                            rc.margin)
    write_report_csv(out / "report.csv", rep)
    write_residuals_csv(out / "residuals.csv", rep.residual_reports)
    write_plot_csv(out / "plot.csv", rep)
    for eps, tr in zip(rep.epsilons, rep.errors):
        print(f"eps={eps:g}: linf={tr.linf:.6e} l2={tr.l2:.6e} h1x={tr.h1x:.6e}")
    print(f"fitted order {rep.fitted_order:.4f} vs theoretical "
          f"{rep.theoretical_order:.4f} (margin {rep.margin:g}); "
          f"flux remainder order {rep.nu_fitted_order:.4f}")
    if not rep.conclusive:
        print(f"inconclusive: refinement estimate {rep.refine_estimate:.3e} "
              f"exceeds 10% of the smallest error")
    print(f"result: {'PASS' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_CHECK_FAILED


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="starwaves",
        description="Wave propagation on a star graph with degenerating "
                    "edge stiffness: direct solver, boundary-layer series, "
                    "and convergence verification.")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="run data compatibility checks")
    c.add_argument("config")
    c.set_defaults(func=_cmd_check)

    s = sub.add_parser("solve", help="direct finite-difference solve")
    s.add_argument("config")
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--out", default=".")
    s.set_defaults(func=_cmd_solve)

    e = sub.add_parser("expand", help="build the series terms, write CSVs")
    e.add_argument("config")
    e.add_argument("--p", type=int, default=None)
    e.add_argument("--out", default=".")
    e.set_defaults(func=_cmd_expand)

    v = sub.add_parser("verify", help="convergence sweep against the "
                                      "predicted rate")
    v.add_argument("config")
    v.add_argument("--p", type=int, default=None)
    v.add_argument("--out", default=".")
    v.set_defaults(func=_cmd_verify)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GraphConfigError, ExprSyntaxError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StabilityError, CompatibilityError, KernelRangeError,
            ExpansionOrderError, ExprDomainError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
