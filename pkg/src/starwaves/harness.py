"""Norms, convergence sweeps, config validation, and CSV report writers.

The sweep measures L-infinity, L2 over the space-time cylinder, and an
H1-in-x surrogate.  The underlying estimate controls a stronger norm whose
second derivatives are only locally bounded for weak solutions, so the
report header states the surrogate explicitly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .direct import Field, direct_solve
from .errors import ExprSyntaxError, GraphConfigError
from .expr import Expr, Var, parse
from .graph import Edge, ProblemSpec, StarGraph
from .grid import Grid, coarsen, make_direct_grid, make_expansion_grids
from .expansion import (ExpansionSet, ResidualReport, assemble_partial_sum,
                        build_expansion, residuals)

__all__ = [
    "NormTriple",
    "norms",
    "FitResult",
    "fit_order",
    "ConvergenceReport",
    "convergence_sweep",
    "RunConfig",
    "load_config",
    "validate_config",
    "write_report_csv",
    "write_residuals_csv",
    "write_field_csvs",
    "write_trace_csv",
    "write_plot_csv",
]

NORM_NOTE = ("norms are L-infinity, L2 and an H1-in-x surrogate over the "
             "space-time cylinder; the underlying estimate bounds a stronger "
             "norm that is not grid-measurable for weak solutions")


@dataclass(frozen=True)
class NormTriple:
    linf: float
    l2: float
    h1x: float


def _weights(n: int, h: float) -> np.ndarray:
    w = np.full(n + 1, h)
    w[0] = w[-1] = h / 2.0
    return w


def norms(f1: Field, f2: Field) -> NormTriple:
    """Trapezoid-weighted discrete norms of f1 - f2 over all edges and time."""
    g1, g2 = f1.grid, f2.grid
    if (g1.lengths != g2.lengths or g1.n_cells != g2.n_cells
            or g1.dt != g2.dt or g1.steps != g2.steps):
        raise ValueError("fields live on different grids")
    wt = _weights(g1.steps, g1.dt)
    linf = 0.0
    l2sq = 0.0
    h1sq = 0.0
    for e in range(len(g1.lengths)):
        d = f1.edges[e] - f2.edges[e]
        h = g1.h(e)
        wx = _weights(g1.n_cells[e], h)
        linf = max(linf, float(np.max(np.abs(d))))
        l2sq += float(np.einsum("x,t,xt->", wx, wt, d * d))
        dx = np.gradient(d, h, axis=0, edge_order=2)
        h1sq += float(np.einsum("x,t,xt->", wx, wt, dx * dx))
    return NormTriple(linf, math.sqrt(l2sq), math.sqrt(l2sq + h1sq))


@dataclass(frozen=True)
class FitResult:
    order: float
    constant: float
    residual: float


def fit_order(eps: tuple[float, ...], err: tuple[float, ...]) -> FitResult:
    """Least-squares slope of log err against log eps.

    Exact (to roundoff) when err is a pure power law.
    """
    if len(eps) < 3:
        raise ValueError("need at least 3 points for an order fit")
    if any(x <= 0 for x in eps) or any(x <= 0 for x in err):
        raise ValueError("eps and errors must be positive for a log-log fit")
    le = np.log(np.asarray(eps, dtype=float))
    lr = np.log(np.asarray(err, dtype=float))
    A = np.column_stack([le, np.ones_like(le)])
    coef, *_ = np.linalg.lstsq(A, lr, rcond=None)
    resid = float(np.max(np.abs(A @ coef - lr)))
    return FitResult(float(coef[0]), float(math.exp(coef[1])), resid)


@dataclass(frozen=True)
class ConvergenceReport:
    p: int
    epsilons: tuple[float, ...]
    errors: tuple[NormTriple, ...]
    fitted_order: float
    fit_constant: float
    fit_residual: float
    theoretical_order: float
    margin: float
    conclusive: bool
    refine_estimate: float
    passed: bool
    residual_reports: tuple[ResidualReport, ...]
    nu_fitted_order: float
    note: str = NORM_NOTE


def convergence_sweep(spec: ProblemSpec, p: int, epsilons: tuple[float, ...],
                      n_per_edge: int = 640, cfl: float = 0.9,
                      margin: float = 0.3, cache: dict | None = None,
                      expansion: ExpansionSet | None = None) -> ConvergenceReport:
    """Direct solve vs assembled series for each eps, with an order fit.

    A nested-grid refinement estimate at the smallest eps guards the
    measurement: if the direct solver's own error is not well below the
    smallest asymptotic error, the sweep is declared inconclusive and the
    pass flag stays false regardless of the fitted order.
    """
    eps_list = tuple(float(x) for x in epsilons)
    if len(eps_list) < 3:
        raise GraphConfigError("epsilons: need at least 3 values for a sweep")
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise GraphConfigError("epsilons: values must be strictly decreasing")
    if len(spec.graph.exponents) < 2:
        raise GraphConfigError(
            "graph has no degenerate subgraph: there is no rate to verify")
    if cache is None:
        cache = {}
    if expansion is None or expansion.order != p:
        grids = make_expansion_grids(spec, n_per_edge, cfl)
        expansion = build_expansion(spec, p, grids)

    triples: list[NormTriple] = []
    res_reports: list[ResidualReport] = []
    for eps in eps_list:
        got = cache.get(eps)
        if got is None:
            grid = make_direct_grid(spec, eps, n_per_edge, cfl)
            ref = direct_solve(spec, eps, grid, cfl=cfl)
            cache[eps] = (grid, ref)
        else:
            grid, ref = got
        asm = assemble_partial_sum(expansion, eps, grid)
        triples.append(norms(ref, asm))
        res_reports.append(residuals(expansion, eps, assembled=asm))

    eps_min = eps_list[-1]
    key = (eps_min, "coarse")
    got = cache.get(key)
    if got is None:
        grid_f, ref_f = cache[eps_min]
        grid_c = coarsen(grid_f)
        ref_c = direct_solve(spec, eps_min, grid_c, cfl=cfl)
        cache[key] = (grid_c, ref_c)
    else:
        grid_c, ref_c = got
        grid_f, ref_f = cache[eps_min]
    sub = Field(grid_c, [u[::2, ::2] for u in ref_f.edges], ref_f.sigma[::2])
    refine_est = norms(sub, ref_c).l2 / 3.0
    conclusive = refine_est <= 0.1 * min(t.l2 for t in triples)

    fit = fit_order(eps_list, tuple(t.l2 for t in triples))
    nu_fit = fit_order(eps_list, tuple(r.sup_nu for r in res_reports))
    m1 = spec.graph.exponents[1]
    theo = (p + 0.5) * m1
    passed = conclusive and fit.order >= theo - margin
    return ConvergenceReport(p, eps_list, tuple(triples), fit.order,
                             fit.constant, fit.residual, theo, margin,
                             conclusive, refine_est, passed,
                             tuple(res_reports), nu_fit.order)


# -- configuration ----------------------------------------------------------

_TOP_KEYS = {"graph", "q", "f", "phi", "psi", "mu", "T", "epsilons", "p",
             "grid", "margin"}
_GRAPH_KEYS = {"edges", "exponents"}
_EDGE_KEYS = {"length", "subgraph"}
_GRID_KEYS = {"n_per_edge", "cfl"}


@dataclass(frozen=True)
class RunConfig:
    spec: ProblemSpec
    epsilons: tuple[float, ...]
    p: int
    n_per_edge: int
    cfl: float
    margin: float


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise GraphConfigError(f"cannot read config: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise GraphConfigError("config: top level must be an object")
    return cfg


def _reject_unknown(d: dict, allowed: set, path: str) -> None:
    for k in d:
        if k not in allowed:
            raise GraphConfigError(f"{path}{k}: unknown key")


def _num(d: dict, key: str, path: str, required: bool = True, default=None):
    if key not in d:
        if required:
            raise GraphConfigError(f"{path}{key}: missing")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise GraphConfigError(f"{path}{key}: expected a number")
    return float(v)


def _int(d: dict, key: str, path: str, required: bool = True, default=None):
    if key not in d:
        if required:
            raise GraphConfigError(f"{path}{key}: missing")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise GraphConfigError(f"{path}{key}: expected an integer")
    return v


def _uses(ast: Expr, name: str) -> bool:
    if isinstance(ast, Var):
        return ast.name == name
    return any(_uses(c, name) for c in getattr(ast, "__dict__", {}).values()
               if isinstance(c, Expr))


def _expr_list(cfg: dict, key: str, n: int, path: str,
               forbid: str | None = None) -> tuple[Expr, ...]:
    if key not in cfg:
        raise GraphConfigError(f"{path}{key}: missing")
    v = cfg[key]
    if not isinstance(v, list) or len(v) != n:
        raise GraphConfigError(f"{path}{key}: expected a list of {n} strings")
    out = []
    for i, s in enumerate(v):
        if not isinstance(s, str):
            raise GraphConfigError(f"{path}{key}[{i}]: expected a string")
        try:
            ast = parse(s)
        except ExprSyntaxError as exc:
            raise GraphConfigError(f"{path}{key}[{i}]: {exc}") from exc
        if forbid and _uses(ast, forbid):
            raise GraphConfigError(
                f"{path}{key}[{i}]: must not depend on {forbid}")
        out.append(ast)
    return tuple(out)


def validate_config(cfg: dict) -> RunConfig:
    """Typed view of a config dict; any violation names the exact field."""
    _reject_unknown(cfg, _TOP_KEYS, "")
    if "graph" not in cfg or not isinstance(cfg["graph"], dict):
        raise GraphConfigError("graph: missing or not an object")
    gd = cfg["graph"]
    _reject_unknown(gd, _GRAPH_KEYS, "graph.")
    if "edges" not in gd or not isinstance(gd["edges"], list) or not gd["edges"]:
        raise GraphConfigError("graph.edges: expected a non-empty list")
    edges = []
    for i, ed in enumerate(gd["edges"]):
        if not isinstance(ed, dict):
            raise GraphConfigError(f"graph.edges[{i}]: expected an object")
        _reject_unknown(ed, _EDGE_KEYS, f"graph.edges[{i}].")
        length = _num(ed, "length", f"graph.edges[{i}].")
        sub = _int(ed, "subgraph", f"graph.edges[{i}].")
        if length <= 0:
            raise GraphConfigError(f"graph.edges[{i}].length: must be positive")
        if sub < 0:
            raise GraphConfigError(f"graph.edges[{i}].subgraph: must be >= 0")
        edges.append(Edge(length, sub))
    if "exponents" not in gd or not isinstance(gd["exponents"], list):
        raise GraphConfigError("graph.exponents: expected a list of integers")
    expo = []
    for i, m in enumerate(gd["exponents"]):
        if isinstance(m, bool) or not isinstance(m, int):
            raise GraphConfigError(f"graph.exponents[{i}]: expected an integer")
        expo.append(m)
    try:
        graph = StarGraph(tuple(edges), tuple(expo))
    except GraphConfigError as exc:
        raise GraphConfigError(f"graph: {exc}") from exc

    n = graph.n_edges
    q = _expr_list(cfg, "q", n, "", forbid="t")
    f = _expr_list(cfg, "f", n, "")
    phi = _expr_list(cfg, "phi", n, "", forbid="t")
    psi = _expr_list(cfg, "psi", n, "", forbid="t")
    mu = _expr_list(cfg, "mu", n, "", forbid="x")
    T = _num(cfg, "T", "")
    if T <= 0:
        raise GraphConfigError("T: must be positive")

    eps_raw = cfg.get("epsilons", [0.4, 0.2, 0.1, 0.05])
    if not isinstance(eps_raw, list) or not eps_raw:
        raise GraphConfigError("epsilons: expected a non-empty list")
    eps = []
    for i, x in enumerate(eps_raw):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise GraphConfigError(f"epsilons[{i}]: expected a number")
        if not (0.0 < float(x) < 1.0):
            raise GraphConfigError(f"epsilons[{i}]: must lie in (0,1)")
        eps.append(float(x))

    p = _int(cfg, "p", "", required=False, default=1)
    if p < 0:
        raise GraphConfigError("p: must be >= 0")
    grid_d = cfg.get("grid", {})
    if not isinstance(grid_d, dict):
        raise GraphConfigError("grid: expected an object")
    _reject_unknown(grid_d, _GRID_KEYS, "grid.")
    n_per_edge = _int(grid_d, "n_per_edge", "grid.", required=False, default=640)
    if n_per_edge < 8:
        raise GraphConfigError("grid.n_per_edge: must be >= 8")
    cfl = _num(grid_d, "cfl", "grid.", required=False, default=0.9)
    if not (0.0 < cfl <= 1.0):
        raise GraphConfigError("grid.cfl: must lie in (0,1]")
    margin = _num(cfg, "margin", "", required=False, default=0.3)
    if margin < 0:
        raise GraphConfigError("margin: must be >= 0")

    try:
        spec = ProblemSpec(graph, q, f, phi, psi, mu, T)
    except GraphConfigError as exc:
        raise GraphConfigError(str(exc)) from exc
    return RunConfig(spec, tuple(eps), p, n_per_edge, cfl, margin)


# -- CSV writers -------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_lines(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + "\n", newline="\n")


def write_report_csv(path: str | Path, rep: ConvergenceReport) -> None:
    lines = ["epsilon,err_linf,err_l2,err_h1x,fitted_order,theoretical_order,pass"]
    flag = "true" if rep.passed else "false"
    for eps, t in zip(rep.epsilons, rep.errors):
        lines.append(",".join([_fmt(eps), _fmt(t.linf), _fmt(t.l2), _fmt(t.h1x),
                               _fmt(rep.fitted_order),
                               _fmt(rep.theoretical_order), flag]))
    _write_lines(Path(path), lines)


def write_residuals_csv(path: str | Path, reports: tuple[ResidualReport, ...]) -> None:
    lines = ["epsilon,sup_h,sup_nu"]
    for r in reports:
        sup_h = r.sup_h if r.sup_h is not None else float("nan")
        lines.append(",".join([_fmt(r.eps), _fmt(sup_h), _fmt(r.sup_nu)]))
    _write_lines(Path(path), lines)


def write_field_csvs(outdir: str | Path, fld: Field) -> list[Path]:
    outdir = Path(outdir)
    paths = []
    times = fld.grid.times()
    for e in range(len(fld.grid.lengths)):
        x = fld.grid.x_nodes(e)
        u = fld.edges[e]
        tau = np.repeat(x, len(times))
        tt = np.tile(times, len(x))
        data = np.column_stack([tau, tt, u.ravel()])
        path = outdir / f"field_{e}.csv"
        with open(path, "w", newline="\n") as fh:
            fh.write("tau,t,u\n")
            np.savetxt(fh, data, fmt="%.17g", delimiter=",", newline="\n")
        paths.append(path)
    return paths


def write_trace_csv(path: str | Path, times: np.ndarray, sigma: np.ndarray) -> None:
    lines = ["t,sigma"]
    for t, s in zip(times, sigma):
        lines.append(_fmt(t) + "," + _fmt(s))
    _write_lines(Path(path), lines)


def write_plot_csv(path: str | Path, rep: ConvergenceReport) -> None:
    lines = ["log10_eps,log10_err_l2,fitted_log10_err_l2"]
    c10 = math.log10(rep.fit_constant)
    for eps, t in zip(rep.epsilons, rep.errors):
        le = math.log10(eps)
        lines.append(",".join([_fmt(le), _fmt(math.log10(t.l2)),
                               _fmt(c10 + rep.fitted_order * le)]))
    _write_lines(Path(path), lines)
