"""Solvers for the eps-independent subproblems.

Two families: the hyperbolic problem on the unit-speed subgraph with an
optional Kirchhoff source (shared marcher with the reference solver), and
the per-edge ODE hierarchy on the degenerate edges, solved in closed form
through the extended trigonometric kernels plus a Simpson convolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .direct import Field, _march
from .errors import CompatibilityError
from .expr import Expr
from .graph import ProblemSpec
from .grid import Grid, check_cfl
from .kernels import cs, sn

__all__ = [
    "G0Problem",
    "EdgeODESolution",
    "solve_g0",
    "solve_degenerate_edge",
    "solve_cauchy_recursive",
    "vertex_trace",
    "simpson_weights",
]

KIRCHHOFF_C1_TOL = 1e-6


@dataclass(frozen=True)
class G0Problem:
    """Problem on the unit-speed subgraph with Kirchhoff right-hand side nu.

    spec must already be restricted to that subgraph (see restrict_to_g0).
    nu is sampled on the time grid; None means the homogeneous condition.
    """

    spec: ProblemSpec
    nu: np.ndarray | None = None


def solve_g0(prob: G0Problem, grid: Grid, cfl: float = 1.0, check: bool = True,
             edge_ids: tuple[int, ...] = ()) -> Field:
    """March the unit-speed subgraph; the vertex equation carries nu.

    With nu = None this is the same code path as direct_solve at b = 1,
    producing machine-identical values.
    """
    spec = prob.spec
    if check:
        slopes = sum(float(spec.phi[e].diff("x").evaluate(0.0, 0.0))
                     for e in range(spec.graph.n_edges))
        nu0 = 0.0 if prob.nu is None else float(prob.nu[0])
        if abs(slopes - nu0) > KIRCHHOFF_C1_TOL:
            raise CompatibilityError(
                f"slope sum {slopes:.3e} does not match nu(0)={nu0:.3e}")
    check_cfl(spec, 0.5, grid, cfl)  # eps is irrelevant at b = 1
    b = np.ones(spec.graph.n_edges)
    fld = _march(spec, grid, b, prob.nu)
    if edge_ids:
        fld.edge_ids = edge_ids
    return fld


def vertex_trace(fld: Field) -> np.ndarray:
    """Restriction of the field to the central vertex (the shared array)."""
    return fld.sigma


@dataclass
class EdgeODESolution:
    """Grid values of one term of the degenerate-edge hierarchy."""

    values: np.ndarray  # (len(x_nodes), len(times))
    order: int
    x_nodes: np.ndarray
    times: np.ndarray
    edge: int

    @classmethod
    def zero(cls, order: int, x_nodes: np.ndarray, times: np.ndarray,
             edge: int) -> "EdgeODESolution":
        return cls(np.zeros((len(x_nodes), len(times))), order, x_nodes, times, edge)

    @property
    def is_zero(self) -> bool:
        return not self.values.any()


def simpson_weights(n: int, dt: float) -> np.ndarray:
    """Quadrature weights for int_0^{t_n} on nodes 0..n.

    Composite Simpson for even n; for odd n >= 3 the last three intervals
    use the 3/8 rule; n = 1 falls back to the trapezoid.  n = 0 gives an
    empty integral.
    """
    if n < 0:
        raise ValueError("negative interval count")
    w = np.zeros(n + 1)
    if n == 0:
        return w
    if n == 1:
        w[:2] = 0.5 * dt
        return w
    m = n if n % 2 == 0 else n - 3
    if m > 0:
        w[0] += dt / 3.0
        w[m] += dt / 3.0
        w[1:m:2] += 4.0 * dt / 3.0
        w[2:m:2] += 2.0 * dt / 3.0
    if n % 2:
        w[m:] += np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * dt / 8.0)
    return w


def _convolve_sn(src: np.ndarray, SN: np.ndarray, dt: float) -> np.ndarray:
    """out[:, n] = int_0^{t_n} src(x, tau) sn(q(x), t_n - tau) dtau.

    src and SN share the (x, time) grid; uniform steps let SN be reused as
    SN[:, n - j] with no interpolation.
    """
    nx, nt = src.shape
    out = np.zeros((nx, nt))
    for n in range(1, nt):
        w = simpson_weights(n, dt)
        out[:, n] = np.einsum("xj,xj,j->x", src[:, :n + 1], SN[:, n::-1], w)
    return out


def solve_degenerate_edge(q: Expr, f: Expr, phi: Expr, psi: Expr,
                          x_nodes: np.ndarray, times: np.ndarray,
                          edge: int = 0) -> EdgeODESolution:
    """Leading term on a degenerate edge, pointwise in x.

    u0 = phi cs(q, t) + psi sn(q, t) + int_0^t f(x, tau) sn(q, t - tau) dtau.
    """
    dt = float(times[1] - times[0])
    Q = np.asarray(q.evaluate(x_nodes, 0.0), dtype=float)[:, None]
    tt = np.asarray(times, dtype=float)[None, :]
    vals = (np.asarray(phi.evaluate(x_nodes, 0.0), dtype=float)[:, None] * cs(Q, tt)
            + np.asarray(psi.evaluate(x_nodes, 0.0), dtype=float)[:, None] * sn(Q, tt))
    F = np.asarray(f.evaluate(x_nodes[:, None], times[None, :]), dtype=float)
    if F.any():
        vals = vals + _convolve_sn(F, sn(Q, tt), dt)
    return EdgeODESolution(vals, 0, np.asarray(x_nodes, dtype=float),
                           np.asarray(times, dtype=float), edge)


def _dxx(values: np.ndarray, h: float) -> np.ndarray:
    """Second x-derivative: centered inside, fourth-order one-sided ends."""
    if values.shape[0] < 6:
        raise ValueError("need at least 6 spatial nodes for the end stencils")
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - 2.0 * values[1:-1] + values[:-2]) / (h * h)
    c = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / (12.0 * h * h)
    out[0] = np.tensordot(c, values[:6], axes=1)
    out[-1] = np.tensordot(c, values[:-7:-1], axes=1)
    return out


def solve_cauchy_recursive(q: Expr, prev: EdgeODESolution) -> EdgeODESolution:
    """Term of order prev.order + 2 from the source d^2_x of the previous one.

    Odd orders are identically zero and their successors inherit the zero
    without computation.
    """
    s = prev.order + 2
    if prev.order % 2 or prev.is_zero:
        return EdgeODESolution.zero(s, prev.x_nodes, prev.times, prev.edge)
    dt = float(prev.times[1] - prev.times[0])
    h = float(prev.x_nodes[1] - prev.x_nodes[0])
    Q = np.asarray(q.evaluate(prev.x_nodes, 0.0), dtype=float)[:, None]
    SN = sn(Q, prev.times[None, :])
    src = _dxx(prev.values, h)
    vals = _convolve_sn(src, SN, dt)
    return EdgeODESolution(vals, s, prev.x_nodes, prev.times, prev.edge)
