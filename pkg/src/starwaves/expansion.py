"""Recursion orchestration and assembly of the truncated series.

Terms are produced in increasing eps-power phases.  Within one phase the
unit-speed corrections are built before the center layers, because the
layer traces read the corrections' vertex values; the whole order is
recorded in a build log and replayed by an assertion pass.

Center layers are indexed by the eps power P they carry rather than by the
per-subgraph step index.  For a single degenerate subgraph the two
indexings coincide.  With several subgraphs the unit-speed side contains
correction powers that are not multiples of every subgraph's exponent; a
power-indexed layer with the matching trace is built on each degenerate
edge for every such power, so the assembled sum stays continuous at the
central vertex to roundoff instead of only asymptotically.  Traces sum the
corrections truncated at the requested order, for the same reason.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .direct import Field
from .errors import CompatibilityError, ExpansionOrderError, GraphConfigError
from .expr import Const, Expr
from .graph import ProblemSpec, check_compatibility_C1, restrict_to_g0
from .grid import ExpansionGrids, Grid
from .layers import (LayerField, QuarterPlaneProblem, boundary_flux, qp_solve,
                     sample_physical)
from .limit import (EdgeODESolution, G0Problem, solve_cauchy_recursive,
                    solve_degenerate_edge, solve_g0)

__all__ = [
    "LambdaSet",
    "lambda_set",
    "ExpansionSet",
    "build_expansion",
    "assemble_partial_sum",
    "residuals",
    "ResidualReport",
    "verify_schedule",
]

MAX_ORDER = 4


@dataclass(frozen=True)
class LambdaSet:
    """Pairs (n, i) with n * m_i = power, i = 1..k, ordered by i."""

    power: int
    pairs: tuple[tuple[int, int], ...]


def lambda_set(m: tuple[int, ...], p: int) -> LambdaSet:
    """Exact integer solutions of n * m_i = p for the exponent list m_1..m_k."""
    if p < 1:
        raise ValueError(f"power must be >= 1, got {p}")
    pairs = tuple((p // mi, i) for i, mi in enumerate(m, start=1) if p % mi == 0)
    return LambdaSet(p, pairs)


@dataclass
class ExpansionSet:
    """Every term of one build, write-once, indexed by family and key."""

    spec: ProblemSpec
    order: int
    grids: ExpansionGrids
    g0_base: Field
    g0_corr: dict[tuple[int, int], Field]
    edge_terms: dict[tuple[int, int], EdgeODESolution]
    vertex_layers: dict[tuple[int, int], LayerField]
    boundary_layers: dict[tuple[int, int], LayerField]
    powers: tuple[int, ...]
    build_log: tuple[tuple, ...]
    _splines: dict = field(default_factory=dict, repr=False)

    def layer_powers(self, e: int) -> tuple[int, ...]:
        return tuple(sorted(P for (P, ee) in self.vertex_layers if ee == e))


def verify_schedule(log: tuple[tuple, ...]) -> None:
    """Replay a build log; every dependency must precede its consumer."""
    seen: set = set()
    for key, deps in log:
        for d in deps:
            if d not in seen:
                raise RuntimeError(f"schedule violation: {key} consumed unbuilt {d}")
        if key in seen:
            raise RuntimeError(f"schedule violation: {key} built twice")
        seen.add(key)


def _taylor_derivatives(q: Expr, x0: float, rmax: int) -> list[float]:
    """q^(r)(x0) for r = 1..rmax, stopping early once the derivative dies."""
    out: list[float] = []
    dq = q
    for _ in range(rmax):
        if isinstance(dq, Const) and dq.value == 0.0:
            out.append(0.0)
            continue
        try:
            dq = dq.diff("x")
        except ValueError as exc:
            raise ExpansionOrderError(
                "Taylor depth of q exceeds the supported differentiation order") from exc
        out.append(float(dq.evaluate(x0, 0.0)))
    return out


def _edge_stencil_flux(term: EdgeODESolution) -> np.ndarray:
    h = float(term.x_nodes[1] - term.x_nodes[0])
    v = term.values
    return (-3.0 * v[0, :] + 4.0 * v[1, :] - v[2, :]) / (2.0 * h)


def _zero_g0_spec(spec_g0: ProblemSpec) -> ProblemSpec:
    z = Const(0.0)
    n = spec_g0.graph.n_edges
    return ProblemSpec(spec_g0.graph, spec_g0.q, (z,) * n, (z,) * n, (z,) * n,
                       (z,) * n, spec_g0.T)


def build_expansion(spec: ProblemSpec, p: int, grids: ExpansionGrids) -> ExpansionSet:
    """Compute all terms up to order p in dependency order.

    Raises when C1 compatibility fails or p exceeds the practical bound
    (grid differentiation error compounds through the edge recursion).
    """
    if not (0 <= p <= MAX_ORDER):
        raise ExpansionOrderError(f"order must lie in 0..{MAX_ORDER}, got {p}")
    report = check_compatibility_C1(spec)
    if not report.passed:
        names = ", ".join(it.name for it in report.failures())
        raise CompatibilityError(f"C1 compatibility failed: {names}")

    g = spec.graph
    mlist = g.exponents[1:]
    times = grids.times
    log: list[tuple] = []

    spec_g0, g0_ids = restrict_to_g0(spec)
    U0 = solve_g0(G0Problem(spec_g0, None), grids.g0, edge_ids=g0_ids)
    log.append((("U", 0, 0), ()))
    corr_spec = _zero_g0_spec(spec_g0)

    edge_terms: dict[tuple[int, int], EdgeODESolution] = {}
    for e in g.gstar_edges():
        u0 = solve_degenerate_edge(spec.q[e], spec.f[e], spec.phi[e], spec.psi[e],
                                   grids.u_nodes[e], times, e)
        edge_terms[(0, e)] = u0
        log.append((("u", 0, e), ()))
        for s in range(1, p + 1):
            if s % 2:
                edge_terms[(s, e)] = EdgeODESolution.zero(s, u0.x_nodes, times, e)
            else:
                edge_terms[(s, e)] = solve_cauchy_recursive(spec.q[e],
                                                            edge_terms[(s - 2, e)])
            log.append((("u", s, e), ((("u", s - 2, e),) if s >= 2 else ())))

    p_plus = tuple(sorted({r * mi for r in range(1, p + 1) for mi in mlist}))
    p_max = p_plus[-1] if p_plus else 0
    layer_pows: dict[int, tuple[int, ...]] = {}
    for e in g.gstar_edges():
        m = g.m(e)
        base = set(p_plus) | {0}
        # upward closure under +m so source chains stay inside the built set
        grown: set[int] = set()
        for P in range(p_max + 1):
            if P in base or (P - m) in grown:
                grown.add(P)
        layer_pows[e] = tuple(sorted(grown))

    g0_corr: dict[tuple[int, int], Field] = {}
    vertex_layers: dict[tuple[int, int], LayerField] = {}

    def build_vertex_layer(P: int, e: int) -> None:
        m = g.m(e)
        trace = np.zeros(len(times))
        deps: list[tuple] = []
        if P == 0:
            trace = U0.sigma - edge_terms[(0, e)].values[0, :]
            deps += [("U", 0, 0), ("u", 0, e)]
        else:
            for r, l in lambda_set(mlist, P).pairs:
                if r <= p:
                    trace = trace + g0_corr[(r, l)].sigma
                    deps.append(("U", r, l))
            if P % m == 0 and P // m <= p:
                trace = trace - edge_terms[(P // m, e)].values[0, :]
                deps.append(("u", P // m, e))
        rmax = P // m
        dq = _taylor_derivatives(spec.q[e], 0.0, rmax)
        sources = []
        fac = 1.0
        for r in range(1, rmax + 1):
            fac *= r
            prev = vertex_layers.get((P - r * m, e))
            if prev is None:
                continue
            sources.append((-dq[r - 1] / fac, r, prev))
            deps.append(("v", P - r * m, e))
        theta = float(spec.q[e].evaluate(0.0, 0.0))
        prob = QuarterPlaneProblem(theta, trace, tuple(sources), f"v[P={P},e={e}]")
        vertex_layers[(P, e)] = qp_solve(prob, grids.layer)
        log.append((("v", P, e), tuple(deps)))

    for e in g.gstar_edges():
        build_vertex_layer(0, e)

    for P in p_plus:
        for r, l in lambda_set(mlist, P).pairs:
            if r > p:
                continue
            nu = np.zeros(len(times))
            deps = []
            for e in g.edges_in(l):
                if r >= 2:
                    nu -= _edge_stencil_flux(edge_terms[(r - 2, e)])
                    deps.append(("u", r - 2, e))
                nu -= boundary_flux(vertex_layers[((r - 1) * mlist[l - 1], e)])
                deps.append(("v", (r - 1) * mlist[l - 1], e))
            g0_corr[(r, l)] = solve_g0(G0Problem(corr_spec, nu), grids.g0,
                                       edge_ids=g0_ids)
            log.append((("U", r, l), tuple(deps)))
        for e in g.gstar_edges():
            if P in layer_pows[e] and P > 0:
                build_vertex_layer(P, e)

    boundary_layers: dict[tuple[int, int], LayerField] = {}
    for e in g.gstar_edges():
        L = g.edges[e].length
        mu_row = np.broadcast_to(
            np.asarray(spec.mu[e].evaluate(0.0, times), dtype=float), times.shape)
        theta = float(spec.q[e].evaluate(L, 0.0))
        for s in range(0, p + 1):
            if s == 0:
                trace = mu_row - edge_terms[(0, e)].values[-1, :]
            else:
                trace = -edge_terms[(s, e)].values[-1, :]
            deps = [("u", s, e)]
            dq = _taylor_derivatives(spec.q[e], L, s)
            sources = []
            fac = 1.0
            for r in range(1, s + 1):
                fac *= r
                prev = boundary_layers.get((s - r, e))
                if prev is None or prev.is_zero:
                    continue
                csign = -1.0 if r % 2 == 0 else 1.0
                sources.append((csign * dq[r - 1] / fac, r, prev))
                deps.append(("w", s - r, e))
            prob = QuarterPlaneProblem(theta, trace, tuple(sources), f"w[s={s},e={e}]")
            boundary_layers[(s, e)] = qp_solve(prob, grids.layer)
            log.append((("w", s, e), tuple(deps)))

    verify_schedule(tuple(log))
    return ExpansionSet(spec, p, grids, U0, g0_corr, edge_terms, vertex_layers,
                        boundary_layers, p_plus, tuple(log))


def _spline_of(es: ExpansionSet, kind: str, key, x_nodes: np.ndarray,
               values: np.ndarray) -> RectBivariateSpline:
    tag = (kind, key)
    sp = es._splines.get(tag)
    if sp is None:
        sp = RectBivariateSpline(x_nodes, es.grids.times, values, kx=3, ky=3, s=0)
        es._splines[tag] = sp
    return sp


class _Pow:
    """Integer powers of eps, computed once each so weights stay bit-stable."""

    def __init__(self, eps: float):
        self.eps = eps
        self.cache: dict[int, float] = {}

    def __getitem__(self, P: int) -> float:
        v = self.cache.get(P)
        if v is None:
            v = self.eps ** int(P)
            self.cache[P] = v
        return v


def _powers_of(es: ExpansionSet, eps: float) -> _Pow:
    return _Pow(eps)


def assemble_partial_sum(es: ExpansionSet, eps: float, grid: Grid) -> Field:
    """Evaluate the truncated series on an evaluation grid as a Field.

    The vertex trace and the Dirichlet rows agree with the per-edge values
    at grid nodes to roundoff by construction (shared time grid plus spline
    restriction identities); this is a node contract, not a continuum one.
    """
    spec = es.spec
    g = spec.graph
    if not (0 < eps < 1):
        raise ValueError(f"eps must lie in (0,1), got {eps}")
    if len(grid.lengths) != g.n_edges:
        raise GraphConfigError("evaluation grid does not match the graph")
    for e in g.gstar_edges():
        m = g.m(e)
        if grid.h(e) > eps ** m / 8.0 * (1.0 + 1e-12):
            raise GraphConfigError(
                f"grid too coarse on edge {e}: h={grid.h(e):.3e} > eps^{m}/8")
        if g.edges[e].length / eps ** m <= spec.T:
            raise GraphConfigError(
                f"eps={eps} too large: layers overlap across edge {e}")
    t_eval = grid.times()
    ew = _powers_of(es, eps)

    edges: list[np.ndarray] = []
    for e in range(g.n_edges):
        x_eval = grid.x_nodes(e)
        if g.edges[e].subgraph == 0:
            loc = es.g0_base.edge_ids.index(e)
            xg = es.grids.g0.x_nodes(loc)
            V = _spline_of(es, "U", (0, 0, e), xg, es.g0_base.edges[loc])(
                x_eval, t_eval, grid=True)
            for (r, l), fld in sorted(es.g0_corr.items()):
                V = V + ew[r * g.exponents[l]] * _spline_of(
                    es, "U", (r, l, e), xg, fld.edges[loc])(x_eval, t_eval, grid=True)
        else:
            i = g.edges[e].subgraph
            m = g.exponents[i]
            L = g.edges[e].length
            V = np.zeros((len(x_eval), len(t_eval)))
            for s in range(0, es.order + 1):
                term = es.edge_terms[(s, e)]
                if term.is_zero:
                    continue
                V = V + ew[s * m] * _spline_of(es, "u", (s, e), term.x_nodes,
                                               term.values)(x_eval, t_eval, grid=True)
            for P in es.layer_powers(e):
                fld = es.vertex_layers[(P, e)]
                V = V + ew[P] * sample_physical(fld, eps, m, L, x_eval, t_eval)
            for s in range(0, es.order + 1):
                fld = es.boundary_layers[(s, e)]
                if fld.is_zero:
                    continue
                V = V + ew[s * m] * sample_physical(fld, eps, m, L, x_eval, t_eval,
                                                    folded=True)
        edges.append(V)

    loc0 = 0
    e0 = es.g0_base.edge_ids[loc0]
    xg = es.grids.g0.x_nodes(loc0)
    sigma = _spline_of(es, "U", (0, 0, e0), xg, es.g0_base.edges[loc0])(
        np.array([0.0]), t_eval, grid=True)[0]
    for (r, l), fld in sorted(es.g0_corr.items()):
        sigma = sigma + ew[r * g.exponents[l]] * _spline_of(
            es, "U", (r, l, e0), xg, fld.edges[loc0])(
                np.array([0.0]), t_eval, grid=True)[0]
    return Field(grid, edges, sigma)


@dataclass(frozen=True)
class ResidualReport:
    eps: float
    order: int
    nu_samples: np.ndarray
    sup_nu: float
    nu_floor: float
    sup_h: float | None
    h_floor: float | None
    note: str


def residuals(es: ExpansionSet, eps: float,
              assembled: Field | None = None) -> ResidualReport:
    """Defect of the truncated series in the vertex flux balance and the PDE.

    The flux remainder is measured semi-analytically: each stored term
    contributes through a one-sided stencil on its own grid, weighted by
    its eps power, so the measurement floor is set by the term solvers and
    not by an extra interpolation step.  The PDE defect needs an assembled
    field and is reported together with its discretization floor caveat.
    """
    spec = es.spec
    g = spec.graph
    ew = _powers_of(es, eps)

    def stencil(u: np.ndarray, h: float, stride: int) -> np.ndarray:
        i = stride
        return (-3.0 * u[0, :] + 4.0 * u[i, :] - u[2 * i, :]) / (2.0 * h * stride)

    def flux_sum(stride: int) -> np.ndarray:
        nu = np.zeros(len(es.grids.times))
        g0grid = es.grids.g0
        for loc in range(len(es.g0_base.edges)):
            h = g0grid.h(loc)
            nu = nu + stencil(es.g0_base.edges[loc], h, stride)
            for (r, l), fld in es.g0_corr.items():
                w = ew[r * g.exponents[l]]
                nu = nu + w * stencil(fld.edges[loc], h, stride)
        for e in g.gstar_edges():
            m = g.m(e)
            for s in range(0, es.order + 1):
                term = es.edge_terms[(s, e)]
                if term.is_zero:
                    continue
                h = float(term.x_nodes[1] - term.x_nodes[0])
                nu = nu + ew[2 * m] * ew[s * m] * stencil(term.values, h, stride)
            for P in es.layer_powers(e):
                fld = es.vertex_layers[(P, e)]
                if fld.is_zero:
                    continue
                nu = nu + ew[m] * ew[P] * boundary_flux(fld, stride=stride)
        return nu

    nu = flux_sum(1)
    sup_nu = float(np.max(np.abs(nu)))
    nu_floor = float(np.max(np.abs(flux_sum(2) - nu))) / 3.0

    sup_h = None
    h_floor = None
    note = "flux residual only; pass an assembled field for the PDE defect"
    if assembled is not None:
        sup_h, h_floor = _pde_defect(spec, eps, assembled)
        note = ("PDE defect computed with second-order stencils on the "
                "evaluation grid; the floor column estimates the stencils' "
                "own truncation error from a stride-2 recomputation")
    return ResidualReport(eps, es.order, nu, sup_nu, nu_floor, sup_h, h_floor,
                          note)


def _pde_defect(spec: ProblemSpec, eps: float, fld: Field) -> tuple[float, float]:
    from .graph import b_eps

    grid = fld.grid
    dt = grid.dt
    worst = 0.0
    floor = 0.0
    times = grid.times()

    def defect(u, h, dtv, x, ts, b, qx, fe):
        q = qx[1:-1, None]
        f = np.asarray(fe.evaluate(x[1:-1, None], ts[None, 1:-1]))
        utt = (u[1:-1, 2:] - 2.0 * u[1:-1, 1:-1] + u[1:-1, :-2]) / (dtv * dtv)
        uxx = (u[2:, 1:-1] - 2.0 * u[1:-1, 1:-1] + u[:-2, 1:-1]) / (h * h)
        return utt - b * uxx + q * u[1:-1, 1:-1] - f

    for e in range(spec.graph.n_edges):
        u = fld.edges[e]
        h = grid.h(e)
        x = grid.x_nodes(e)
        b = b_eps(spec, eps, e)
        qx = np.asarray(spec.q[e].evaluate(x, 0.0))
        r = defect(u, h, dt, x, times, b, qx, spec.f[e])
        worst = max(worst, float(np.max(np.abs(r))))
        if grid.n_cells[e] % 2 == 0 and grid.steps % 2 == 0:
            rc = defect(u[::2, ::2], 2 * h, 2 * dt, x[::2], times[::2], b,
                        qx[::2], spec.f[e])
            floor = max(floor, float(np.max(np.abs(rc - r[1::2, 1::2]))) / 3.0)
    return worst, floor
