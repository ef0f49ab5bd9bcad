"""Reference solver for the full problem on the graph at fixed eps.

Mass-lumped piecewise-linear elements with explicit leapfrog time stepping.
Continuity at the central vertex and the Dirichlet data at the boundary
vertices are enforced exactly at every step: all edges share one trace
array sigma, and the boundary row is written from mu up front.

The same marcher serves the limit solver (unit stiffness plus a Kirchhoff
source), which keeps the two paths machine-identical where they overlap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GraphConfigError
from .graph import ProblemSpec, b_eps, check_compatibility_C1
from .grid import Grid, check_cfl

__all__ = ["Field", "direct_solve", "energy"]


@dataclass
class Field:
    """Per-edge space-time values with a shared vertex trace.

    edges[e] has shape (n_cells[e] + 1, steps + 1); row 0 mirrors sigma.
    edge_ids maps local edge positions to ids in the originating graph
    (identity for whole-graph solves).
    """

    grid: Grid
    edges: list[np.ndarray]
    sigma: np.ndarray
    edge_ids: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.edge_ids:
            self.edge_ids = tuple(range(len(self.edges)))

    def vertex_values(self) -> np.ndarray:
        return self.sigma


def _march(spec: ProblemSpec, grid: Grid, b: np.ndarray,
           nu: np.ndarray | None) -> Field:
    """Leapfrog march with stiffness b[e] per edge and Kirchhoff source nu.

    The lumped vertex equation reads
        M_a sigma'' = sum_e b_e (u_{e,1} - sigma)/h_e - q_a sigma + f_a - nu
    with M_a = sum_e h_e/2 and q_a, f_a lumped the same way.  The first
    step is a Taylor start built from the discrete spatial operator, which
    keeps the march self-consistent.
    """
    g = spec.graph
    ne = g.n_edges
    M = grid.steps
    dt = grid.dt
    times = grid.times()

    xs = [grid.x_nodes(e) for e in range(ne)]
    hs = [grid.h(e) for e in range(ne)]
    Q = [spec.q[e].evaluate(xs[e], 0.0) for e in range(ne)]
    F = [spec.f[e].evaluate(xs[e][:, None], times[None, :]) for e in range(ne)]
    U = [np.empty((grid.n_cells[e] + 1, M + 1)) for e in range(ne)]

    phi = [spec.phi[e].evaluate(xs[e], 0.0) for e in range(ne)]
    psi = [spec.psi[e].evaluate(xs[e], 0.0) for e in range(ne)]
    mu = [np.broadcast_to(np.asarray(spec.mu[e].evaluate(0.0, times), dtype=float),
                          times.shape) for e in range(ne)]

    mass_a = sum(hs[e] / 2.0 for e in range(ne))
    q_a = sum(hs[e] / 2.0 * Q[e][0] for e in range(ne))
    f_a = sum(hs[e] / 2.0 * F[e][0, :] for e in range(ne))
    nu_arr = np.zeros(M + 1) if nu is None else np.asarray(nu, dtype=float)
    if nu_arr.shape != (M + 1,):
        raise GraphConfigError("Kirchhoff source must be sampled on the time grid")

    sigma = np.empty(M + 1)
    sigma[0] = phi[0][0]

    def vertex_accel(n: int) -> float:
        flux = sum(b[e] * (U[e][1, n] - sigma[n]) / hs[e] for e in range(ne))
        return (flux - q_a * sigma[n] + f_a[n] - nu_arr[n]) / mass_a

    # t = 0 rows and the Taylor start
    for e in range(ne):
        U[e][:, 0] = phi[e]
        U[e][-1, :] = mu[e]
        lap = np.empty_like(phi[e])
        lap[1:-1] = (phi[e][2:] - 2.0 * phi[e][1:-1] + phi[e][:-2]) / hs[e] ** 2
        lap[0] = lap[-1] = 0.0  # vertex and boundary rows are overwritten below
        interior = phi[e] + dt * psi[e] + 0.5 * dt * dt * (
            b[e] * lap - Q[e] * phi[e] + F[e][:, 0])
        U[e][1:-1, 1] = interior[1:-1]
    sigma[1] = sigma[0] + dt * psi[0][0] + 0.5 * dt * dt * vertex_accel(0)
    for e in range(ne):
        U[e][0, 0] = sigma[0]
        U[e][0, 1] = sigma[1]
        U[e][-1, 1] = mu[e][1]

    for n in range(1, M):
        sigma[n + 1] = 2.0 * sigma[n] - sigma[n - 1] + dt * dt * vertex_accel(n)
        for e in range(ne):
            u = U[e]
            lap = (u[2:, n] - 2.0 * u[1:-1, n] + u[:-2, n]) / hs[e] ** 2
            u[1:-1, n + 1] = (2.0 * u[1:-1, n] - u[1:-1, n - 1] + dt * dt * (
                b[e] * lap - Q[e][1:-1] * u[1:-1, n] + F[e][1:-1, n]))
            u[0, n + 1] = sigma[n + 1]
    return Field(grid, U, sigma)


def direct_solve(spec: ProblemSpec, eps: float, grid: Grid, cfl: float = 1.0,
                 check: bool = True) -> Field:
    """Solve the perturbed problem at fixed eps on the given grid.

    Refuses to run when the C1 compatibility check fails (pass check=False
    to march anyway, e.g. for deliberately rough data).
    """
    if check:
        report = check_compatibility_C1(spec)
        if not report.passed:
            names = ", ".join(it.name for it in report.failures())
            raise GraphConfigError(f"C1 compatibility failed: {names}")
    check_cfl(spec, eps, grid, cfl)
    b = np.array([b_eps(spec, eps, e) for e in range(spec.graph.n_edges)])
    return _march(spec, grid, b, None)


def energy(fld: Field, spec: ProblemSpec, eps: float, n: int) -> float:
    """Discrete energy 1/2 sum_e int (u_t^2 + b u_x^2 + q u^2) at step n.

    Trapezoid weights in space; derivatives are centered second order with
    one-sided ends (np.gradient with edge_order=2).
    """
    grid = fld.grid
    M = grid.steps
    if not (0 <= n <= M):
        raise ValueError(f"time index {n} outside 0..{M}")
    total = 0.0
    for e in range(len(fld.edges)):
        u = fld.edges[e]
        h = grid.h(e)
        x = grid.x_nodes(e)
        b = b_eps(spec, eps, e)
        q = spec.q[e].evaluate(x, 0.0)
        if n == 0:
            ut = (-3.0 * u[:, 0] + 4.0 * u[:, 1] - u[:, 2]) / (2.0 * grid.dt)
        elif n == M:
            ut = (3.0 * u[:, M] - 4.0 * u[:, M - 1] + u[:, M - 2]) / (2.0 * grid.dt)
        else:
            ut = (u[:, n + 1] - u[:, n - 1]) / (2.0 * grid.dt)
        ux = np.gradient(u[:, n], h, edge_order=2)
        dens = ut * ut + b * ux * ux + q * u[:, n] ** 2
        w = np.full(len(x), h)
        w[0] = w[-1] = h / 2.0
        total += float(w @ dens)
    return 0.5 * total
