"""Quarter-plane solvers for the boundary layer hierarchies.

Layers live in fast coordinates where the wave speed is 1.  The grid puts
the leapfrog exactly on characteristics (spatial step equals dt), which
buys two exact properties: the zero-order-free scheme reproduces
d'Alembert solutions to roundoff, and the numerical support never runs
ahead of the physical front, so values stay identically zero for xi > t.

Both layer families use this module; the family attached to the far
vertices is solved in the folded coordinate xi = -z >= 0, with the odd
powers of the Taylor sources sign-flipped by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import RectBivariateSpline

from .errors import GraphConfigError
from .grid import LayerGrid
from .kernels import dt_kernel, phi_entire

__all__ = [
    "QuarterPlaneProblem",
    "LayerField",
    "qp_solve",
    "qp_oracle_below_characteristic",
    "boundary_flux",
    "evaluate_physical",
    "sample_physical",
]

TRACE_START_TOL = 1e-6


@dataclass(frozen=True)
class QuarterPlaneProblem:
    """One layer problem: d^2_t v - d^2_xi v + theta v = sources, trace g.

    sources collects (coefficient, power, lower-order layer) triples and is
    evaluated as sum_r c_r xi^r rho_r(xi, t) on the shared grid.  g is the
    Dirichlet trace at xi = 0, sampled on the time grid; all layers start
    from rest.
    """

    theta: float
    trace: np.ndarray | None
    sources: tuple[tuple[float, int, "LayerField"], ...] = ()
    label: str = ""


@dataclass
class LayerField:
    """Layer values on [0, L] x [0, T] in fast coordinates."""

    values: np.ndarray  # (n_xi + 1, steps + 1)
    grid: LayerGrid
    label: str = ""
    _spline: RectBivariateSpline | None = field(default=None, repr=False)

    def spline(self) -> RectBivariateSpline:
        if self._spline is None:
            self._spline = RectBivariateSpline(
                self.grid.xi_nodes(), self.grid.times(), self.values, kx=3, ky=3, s=0)
        return self._spline

    @property
    def is_zero(self) -> bool:
        return not self.values.any()


def _source_matrix(prob: QuarterPlaneProblem, grid: LayerGrid) -> np.ndarray | None:
    if not prob.sources:
        return None
    xi = grid.xi_nodes()
    S = np.zeros((grid.n_xi + 1, grid.steps + 1))
    for c, r, rho in prob.sources:
        if rho.grid is not grid and (rho.grid.n_xi != grid.n_xi
                                     or rho.grid.dt != grid.dt
                                     or rho.grid.steps != grid.steps):
            raise GraphConfigError("source layers must share the target grid")
        if r < 1:
            raise GraphConfigError("Taylor source powers start at 1")
        if c == 0.0 or rho.is_zero:
            continue
        S += (c * xi ** r)[:, None] * rho.values
    return S if S.any() else None


def qp_solve(prob: QuarterPlaneProblem, grid: LayerGrid,
             initial: tuple[np.ndarray, np.ndarray] | None = None) -> LayerField:
    """Leapfrog at unit Courant number with Dirichlet trace at xi = 0.

    The far boundary carries homogeneous Dirichlet data; the true solution
    vanishes there because the grid is built with L >= T + margin, so the
    condition is exact rather than artificial.  The nonnegative part of
    theta is integrated by time averaging, which keeps the scheme stable
    without shrinking the step; a negative part stays explicit (growth is
    then physical).

    initial is a test-only mode: rows (v(., 0), v_t(., 0)) for comparison
    against the integral-representation oracle.
    """
    if grid.L + 1e-9 < grid.steps * grid.dt + 2.0:
        raise GraphConfigError("layer grid too short: support could reach the far end")
    n, M = grid.n_xi, grid.steps
    dt = grid.dt
    V = np.zeros((n + 1, M + 1))
    g = prob.trace
    if g is not None:
        g = np.asarray(g, dtype=float)
        if g.shape != (M + 1,):
            raise GraphConfigError("trace must be sampled on the layer time grid")
        if abs(g[0]) > TRACE_START_TOL:
            raise GraphConfigError(
                f"layer trace {prob.label or '?'} does not vanish at t=0: {g[0]:.3e}")
    S = _source_matrix(prob, grid)

    th_p = max(prob.theta, 0.0)
    th_m = min(prob.theta, 0.0)
    a = 0.5 * dt * dt * th_p

    if initial is not None:
        alpha, beta = (np.asarray(r, dtype=float) for r in initial)
        V[:, 0] = alpha
        lap = np.zeros_like(alpha)
        lap[1:-1] = (alpha[2:] - 2.0 * alpha[1:-1] + alpha[:-2]) / (dt * dt)
        s0 = S[:, 0] if S is not None else 0.0
        V[1:-1, 1] = (alpha + dt * beta + 0.5 * dt * dt * (
            lap - prob.theta * alpha + s0))[1:-1]
    elif S is not None:
        V[1:-1, 1] = 0.5 * dt * dt * S[1:-1, 0]
    if g is not None:
        V[0, 0] = g[0]
        V[0, 1] = g[1]

    for m in range(1, M):
        rhs = V[2:, m] + V[:-2, m] - (1.0 + a) * V[1:-1, m - 1] \
            - dt * dt * th_m * V[1:-1, m]
        if S is not None:
            rhs = rhs + dt * dt * S[1:-1, m]
        V[1:-1, m + 1] = rhs / (1.0 + a)
        if g is not None:
            V[0, m + 1] = g[m + 1]
    return LayerField(V, grid, prob.label)


def boundary_flux(fld: LayerField, stride: int = 1) -> np.ndarray:
    """One-sided second-order d_xi v(0, t) per time level.

    stride widens the stencil to stride*h for floor estimation.
    """
    if fld.values.shape[0] < 2 * stride + 1:
        raise ValueError("need at least 3 spatial nodes")
    v = fld.values
    return ((-3.0 * v[0, :] + 4.0 * v[stride, :] - v[2 * stride, :])
            / (2.0 * fld.grid.dt * stride))


def qp_oracle_below_characteristic(theta: float, alpha: Callable[[float], float],
                                   beta: Callable[[float], float],
                                   s: float, t: float, tol: float = 1e-10) -> float:
    """Closed-form solution value strictly below the leading characteristic.

    Valid for s - t > 0, where the trace at xi = 0 has no influence and
    v(s,t) = (alpha(s+t) + alpha(s-t))/2
            + 1/2 int_{s-t}^{s+t} (k beta + d_t k alpha) dy.
    The tabulated kernel is written for the opposite sign convention of the
    zero-order term, so it is evaluated at -theta here.
    """
    if s - t <= 0:
        raise ValueError(f"representation requires s - t > 0, got s={s}, t={t}")
    half = 0.5 * (alpha(s + t) + alpha(s - t))
    if t == 0:
        return half

    def integrand(y: float) -> float:
        k = phi_entire(-theta * ((s - y) ** 2 - t * t))
        dk = dt_kernel(-theta, t, s, y)
        return k * beta(y) + dk * alpha(y)

    val, _ = quad(integrand, s - t, s + t, epsabs=tol, epsrel=tol, limit=200)
    return half + 0.5 * val


def evaluate_physical(fld: LayerField, eps: float, m: int, edge_length: float,
                      tau: float, t: float, folded: bool = False) -> float:
    """Layer value at arclength tau and time t on an edge of exponent m.

    The fast coordinate is eps^-m tau for center layers and
    eps^-m (edge_length - tau) for folded (far-vertex) layers; points past
    the grid are zero by the support property.
    """
    if not (0.0 <= tau <= edge_length):
        raise ValueError(f"tau={tau} outside [0, {edge_length}]")
    xi = (edge_length - tau if folded else tau) / eps ** m
    if xi > fld.grid.L:
        return 0.0
    return float(fld.spline()(xi, t, grid=False))


def sample_physical(fld: LayerField, eps: float, m: int, edge_length: float,
                    taus: np.ndarray, times: np.ndarray,
                    folded: bool = False) -> np.ndarray:
    """Grid of layer values at physical coordinates, zero beyond support."""
    taus = np.asarray(taus, dtype=float)
    xi = (edge_length - taus if folded else taus) / eps ** m
    out = np.zeros((len(taus), len(times)))
    inside = xi <= fld.grid.L
    if not inside.any():
        return out
    xin = xi[inside]
    if folded:
        # spline evaluation wants ascending coordinates
        vals = fld.spline()(xin[::-1], times, grid=True)[::-1]
    else:
        vals = fld.spline()(xin, times, grid=True)
    out[inside] = vals
    return out
