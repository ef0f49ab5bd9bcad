"""Space-time grids for the graph solvers and the expansion pipeline.

All solvers on one graph share a single time step.  Expansion terms
additionally share the exact time array (the same float values), which is
what lets vertex traces of different term families cancel to roundoff when
the partial sum is assembled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphConfigError, StabilityError
from .graph import ProblemSpec, b_eps

__all__ = [
    "Grid",
    "LayerGrid",
    "ExpansionGrids",
    "make_direct_grid",
    "coarsen",
    "make_expansion_grids",
    "check_cfl",
]

MIN_CELLS = 8
MIN_EXPANSION_CELLS = 200
LAYER_MARGIN = 2.0


@dataclass(frozen=True)
class Grid:
    """Uniform per-edge spatial grids with one shared time step."""

    lengths: tuple[float, ...]
    n_cells: tuple[int, ...]
    dt: float
    steps: int

    def __post_init__(self) -> None:
        if len(self.lengths) != len(self.n_cells):
            raise GraphConfigError("lengths and n_cells must align")
        for n in self.n_cells:
            if n < MIN_CELLS:
                raise GraphConfigError(f"need at least {MIN_CELLS} cells per edge, got {n}")
        if self.dt <= 0 or self.steps < 2:
            raise GraphConfigError("need a positive dt and at least 2 steps")

    @property
    def T(self) -> float:
        return self.dt * self.steps

    def h(self, e: int) -> float:
        return self.lengths[e] / self.n_cells[e]

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1)

    def x_nodes(self, e: int) -> np.ndarray:
        return np.linspace(0.0, self.lengths[e], self.n_cells[e] + 1)


@dataclass(frozen=True)
class LayerGrid:
    """Fast-coordinate grid at unit Courant number: the spatial step is dt."""

    n_xi: int
    dt: float
    steps: int

    @property
    def L(self) -> float:
        return self.dt * self.n_xi

    def xi_nodes(self) -> np.ndarray:
        return self.dt * np.arange(self.n_xi + 1)

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1)


def check_cfl(spec: ProblemSpec, eps: float, grid: Grid, cfl: float = 1.0) -> None:
    """Raise unless dt <= cfl * min_e h_e / sqrt(b_e)."""
    bound = min(grid.h(e) / math.sqrt(b_eps(spec, eps, e))
                for e in range(spec.graph.n_edges))
    if grid.dt > cfl * bound * (1.0 + 1e-12):
        raise StabilityError(
            f"dt={grid.dt:.6e} exceeds the stability bound {cfl * bound:.6e}")


def _even_ceil(x: float) -> int:
    n = math.ceil(x - 1e-12)
    return n + (n % 2)


def make_direct_grid(spec: ProblemSpec, eps: float, n_per_edge: int, cfl: float) -> Grid:
    """Grid for a reference solve at fixed eps.

    Degenerate edges are refined so that h resolves the thinnest layer
    probed there (h <= eps^m / 8); cell counts and the step count are kept
    even so a 2x-coarse companion grid shares every other node.
    """
    if not (0 < cfl <= 1):
        raise GraphConfigError(f"cfl must lie in (0, 1], got {cfl}")
    g = spec.graph
    n_cells = []
    for e in range(g.n_edges):
        n = n_per_edge
        m = g.m(e)
        if m > 0:
            n = max(n, _even_ceil(8.0 * g.edges[e].length / eps ** m))
        n_cells.append(n + (n % 2))
    lengths = tuple(g.edges[e].length for e in range(g.n_edges))
    bound = min(lengths[e] / n_cells[e] / math.sqrt(b_eps(spec, eps, e))
                for e in range(g.n_edges))
    steps = _even_ceil(spec.T / (cfl * bound))
    grid = Grid(lengths, tuple(n_cells), spec.T / steps, steps)
    check_cfl(spec, eps, grid, cfl)
    return grid


def coarsen(grid: Grid) -> Grid:
    """Companion grid with half the resolution; nodes nest exactly."""
    for n in grid.n_cells:
        if n % 2:
            raise GraphConfigError("cell counts must be even to coarsen")
    if grid.steps % 2:
        raise GraphConfigError("step count must be even to coarsen")
    return Grid(grid.lengths, tuple(n // 2 for n in grid.n_cells),
                2.0 * grid.dt, grid.steps // 2)


@dataclass(frozen=True)
class ExpansionGrids:
    """Shared grids for every term of one expansion build.

    The layer grid reuses the master dt as its spatial step, putting the
    leapfrog exactly on characteristics; its time axis is the master one.
    """

    spec: ProblemSpec
    g0: Grid
    g0_edge_ids: tuple[int, ...]
    u_nodes: dict[int, np.ndarray]
    layer: LayerGrid
    times: np.ndarray = field(repr=False)

    @property
    def dt(self) -> float:
        return self.g0.dt


def make_expansion_grids(spec: ProblemSpec, n_per_edge: int, cfl: float) -> ExpansionGrids:
    if not (0 < cfl <= 1):
        raise GraphConfigError(f"cfl must lie in (0, 1], got {cfl}")
    g = spec.graph
    g0_ids = g.g0_edges()
    if not g0_ids:
        raise GraphConfigError("the expansion needs at least one unit-speed edge")
    n0 = max(n_per_edge, MIN_EXPANSION_CELLS)
    n0 += n0 % 2
    lengths = tuple(g.edges[e].length for e in g0_ids)
    h_min = min(L / n0 for L in lengths)
    steps = _even_ceil(spec.T / (cfl * h_min))
    dt = spec.T / steps
    g0_grid = Grid(lengths, (n0,) * len(g0_ids), dt, steps)

    u_nodes: dict[int, np.ndarray] = {}
    n_star = max(MIN_EXPANSION_CELLS, n0 // 2)
    for e in g.gstar_edges():
        u_nodes[e] = np.linspace(0.0, g.edges[e].length, n_star + 1)

    n_xi = math.ceil((spec.T + LAYER_MARGIN) / dt)
    layer = LayerGrid(n_xi, dt, steps)
    return ExpansionGrids(spec, g0_grid, g0_ids, u_nodes, layer, dt * np.arange(steps + 1))
