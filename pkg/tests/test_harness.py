import copy
import json
import math

import numpy as np
import pytest

from starwaves.direct import Field, direct_solve
from starwaves.errors import GraphConfigError
from starwaves.expansion import ResidualReport
from starwaves.grid import Grid, make_direct_grid
from starwaves.harness import (NORM_NOTE, ConvergenceReport, NormTriple,
                               convergence_sweep, fit_order, load_config,
                               norms, validate_config, write_field_csvs,
                               write_plot_csv, write_report_csv,
                               write_residuals_csv, write_trace_csv)

from .helpers import REFERENCE_CONFIG, star_spec, two_edge_g0_spec


def flat_field(lengths, n, dt, steps, value=0.0):
    grid = Grid(tuple(lengths), (n,) * len(lengths), dt, steps)
    edges = [np.full((n + 1, steps + 1), value) for _ in lengths]
    return Field(grid, edges, edges[0][0, :])


def test_norms_zero_and_constant_offset():
    f1 = flat_field((1.0, 1.0), 16, 0.05, 30, value=0.7)
    same = flat_field((1.0, 1.0), 16, 0.05, 30, value=0.7)
    z = norms(f1, same)
    assert z.linf == 0.0 and z.l2 == 0.0 and z.h1x == 0.0
    # constant offset c: linf = c, l2 = c sqrt(sum_e len_e * T), h1x = l2
    c = 0.25
    f2 = flat_field((1.0, 1.0), 16, 0.05, 30, value=0.7 + c)
    t = norms(f1, f2)
    assert t.linf == pytest.approx(c, rel=1e-14)
    assert t.l2 == pytest.approx(c * math.sqrt(2.0 * 1.5), rel=1e-13)
    assert t.h1x == pytest.approx(t.l2, rel=1e-13)


def test_norms_grid_mismatch():
    f1 = flat_field((1.0,), 16, 0.05, 30)
    f2 = flat_field((1.0,), 32, 0.05, 30)
    with pytest.raises(ValueError, match="different grids"):
        norms(f1, f2)


def interp_error(n: int) -> NormTriple:
    # smooth mode against the linear interpolant of its 2x-coarser sampling
    dt, steps = 0.05, 20
    grid = Grid((1.0,), (n,), dt, steps)
    x = grid.x_nodes(0)
    t = grid.times()
    u = np.sin(np.pi * x)[:, None] * np.cos(t)[None, :]
    xc = x[::2]
    ui = np.empty_like(u)
    for j in range(len(t)):
        ui[:, j] = np.interp(x, xc, u[::2, j])
    return norms(Field(grid, [u], u[0, :]), Field(grid, [ui], ui[0, :]))


def test_norms_resolve_interpolation_order():
    e1, e2 = interp_error(64), interp_error(128)
    assert 3.4 < e1.l2 / e2.l2 < 4.6
    assert 3.4 < e1.linf / e2.linf < 4.6
    assert e1.h1x >= e1.l2


def test_norms_see_gradient_content():
    # difference c*x: the h1x surrogate picks up the pure gradient part
    dt, steps, n = 0.05, 30, 64
    grid = Grid((1.0,), (n,), dt, steps)
    x = grid.x_nodes(0)
    base = np.zeros((n + 1, steps + 1))
    lin = 0.5 * np.broadcast_to(x[:, None], base.shape)
    t = norms(Field(grid, [base], base[0, :]), Field(grid, [lin], lin[0, :]))
    T = dt * steps
    assert t.linf == pytest.approx(0.5, rel=1e-13)
    # trapezoid quadrature of x^2 carries an h^2/6 bias, so compare loosely
    assert t.l2 == pytest.approx(0.5 * math.sqrt(T / 3), rel=3e-3)
    # the gradient of 0.5*x is exact for the second-order stencil
    assert t.h1x ** 2 - t.l2 ** 2 == pytest.approx(0.25 * T, rel=1e-12)


def test_fit_order_exact_power_law():
    eps = (0.4, 0.2, 0.1, 0.05)
    err = tuple(2.0 * x ** 1.5 for x in eps)
    fit = fit_order(eps, err)
    assert fit.order == pytest.approx(1.5, abs=1e-12)
    assert fit.constant == pytest.approx(2.0, rel=1e-12)
    assert fit.residual < 1e-13
    with pytest.raises(ValueError, match="at least 3"):
        fit_order((0.4, 0.2), (1.0, 0.5))
    with pytest.raises(ValueError, match="positive"):
        fit_order((0.4, 0.2, 0.1), (1.0, 0.0, 0.1))


def test_sweep_input_validation():
    spec = star_spec()
    with pytest.raises(GraphConfigError, match="at least 3"):
        convergence_sweep(spec, 0, (0.4, 0.2))
    with pytest.raises(GraphConfigError, match="decreasing"):
        convergence_sweep(spec, 0, (0.2, 0.4, 0.1))
    flat = two_edge_g0_spec()
    with pytest.raises(GraphConfigError, match="no degenerate subgraph"):
        convergence_sweep(flat, 0, (0.4, 0.2, 0.1))


def small_sweep(cache=None):
    spec = star_spec(exponents=(0, 1), subgraphs=(0, 1, 1))
    return convergence_sweep(spec, 0, (0.6, 0.45, 0.3), n_per_edge=48,
                             cfl=0.9, cache=cache)


def test_sweep_report_structure_and_determinism(tmp_path):
    rep1 = small_sweep()
    rep2 = small_sweep()
    assert rep1.p == 0 and rep1.theoretical_order == 0.5
    assert len(rep1.errors) == 3 == len(rep1.residual_reports)
    assert rep1.note == NORM_NOTE
    assert rep1.refine_estimate > 0.0
    assert rep1.fitted_order == rep2.fitted_order
    assert rep1.errors == rep2.errors
    for a, b in [(tmp_path / "r1.csv", tmp_path / "r2.csv")]:
        write_report_csv(a, rep1)
        write_report_csv(b, rep2)
        assert a.read_bytes() == b.read_bytes()
    p1 = tmp_path / "p1.csv"
    write_plot_csv(p1, rep1)
    first = p1.read_text().splitlines()
    assert first[0] == "log10_eps,log10_err_l2,fitted_log10_err_l2"
    assert len(first) == 4


def test_sweep_cache_reuse():
    cache: dict = {}
    rep1 = small_sweep(cache)
    assert set(cache) == {0.6, 0.45, 0.3, (0.3, "coarse")}
    rep2 = small_sweep(cache)
    assert rep1.errors == rep2.errors
    assert rep1.refine_estimate == rep2.refine_estimate


def synthetic_report() -> ConvergenceReport:
    eps = (0.4, 0.2, 0.1)
    errors = tuple(NormTriple(2 * x, x, 1.5 * x) for x in eps)
    res = tuple(ResidualReport(x, 1, np.array([0.0, x]), x, x / 30,
                               None, None, "note") for x in eps)
    return ConvergenceReport(1, eps, errors, 1.5, 2.0, 1e-15, 1.5, 0.3,
                             True, 1e-5, True, res, 2.0)


def test_report_csv_format(tmp_path):
    rep = synthetic_report()
    path = tmp_path / "report.csv"
    write_report_csv(path, rep)
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "epsilon,err_linf,err_l2,err_h1x,fitted_order,theoretical_order,pass"
    assert len(lines) == 4
    cells = lines[1].split(",")
    # .17g round-trips doubles exactly
    assert float(cells[0]) == 0.4 and cells[0] == "0.40000000000000002"
    assert cells[-1] == "true"
    assert float(cells[4]) == 1.5


def test_residuals_csv_nan_for_missing_defect(tmp_path):
    rep = synthetic_report()
    path = tmp_path / "residuals.csv"
    write_residuals_csv(path, rep.residual_reports)
    lines = path.read_text().splitlines()
    assert lines[0] == "epsilon,sup_h,sup_nu"
    assert lines[1].split(",")[1] == "nan"


def test_field_and_trace_csvs(tmp_path):
    spec = two_edge_g0_spec(q="1", phi="cos(pi*x/2)")
    grid = make_direct_grid(spec, 0.5, 8, 0.9)
    fld = direct_solve(spec, 0.5, grid, cfl=0.9)
    paths = write_field_csvs(tmp_path, fld)
    assert [p.name for p in paths] == ["field_0.csv", "field_1.csv"]
    lines = paths[0].read_text().splitlines()
    assert lines[0] == "tau,t,u"
    assert len(lines) == 1 + fld.edges[0].size
    tau0, t0, u0 = (float(c) for c in lines[1].split(","))
    assert tau0 == 0.0 and t0 == 0.0 and u0 == pytest.approx(1.0)
    trace = tmp_path / "trace.csv"
    write_trace_csv(trace, grid.times(), fld.sigma)
    tl = trace.read_text().splitlines()
    assert tl[0] == "t,sigma"
    assert len(tl) == grid.steps + 2


def test_reference_config_loads_and_validates():
    cfg = load_config(REFERENCE_CONFIG)
    run = validate_config(cfg)
    assert run.p == 1 and run.n_per_edge == 640
    assert run.cfl == 0.9 and run.margin == 0.3
    assert run.epsilons == (0.4, 0.2, 0.1, 0.05)
    assert run.spec.T == 1.5
    assert run.spec.graph.exponents == (0, 1, 2)


def test_load_config_errors(tmp_path):
    with pytest.raises(GraphConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(GraphConfigError, match="not valid JSON"):
        load_config(bad)
    lst = tmp_path / "list.json"
    lst.write_text("[1, 2]")
    with pytest.raises(GraphConfigError, match="top level"):
        load_config(lst)


@pytest.fixture()
def base_cfg():
    return json.loads(REFERENCE_CONFIG.read_text())


def reject(cfg, pattern):
    with pytest.raises(GraphConfigError, match=pattern):
        validate_config(cfg)


def test_validate_config_rejections(base_cfg):
    cases = [
        (lambda c: c.__setitem__("extra", 1), "extra: unknown key"),
        (lambda c: c["grid"].__setitem__("foo", 1), r"grid\.foo: unknown key"),
        (lambda c: c["graph"]["edges"][0].__setitem__("x", 1),
         r"graph\.edges\[0\]\.x: unknown key"),
        (lambda c: c["graph"]["edges"][0].__setitem__("length", -1),
         r"length: must be positive"),
        (lambda c: c["graph"]["edges"][1].__setitem__("subgraph", -2),
         r"subgraph: must be >= 0"),
        (lambda c: c["graph"].__setitem__("exponents", [0, 1, True]),
         r"exponents\[2\]: expected an integer"),
        (lambda c: c["graph"].__setitem__("exponents", [1, 2, 3]), "^graph: "),
        (lambda c: c["q"].__setitem__(1, "1 +"), r"q\[1\]:"),
        (lambda c: c["q"].__setitem__(0, "1 + t"), r"q\[0\]: must not depend on t"),
        (lambda c: c["phi"].__setitem__(0, "sin(t)"),
         r"phi\[0\]: must not depend on t"),
        (lambda c: c["mu"].__setitem__(2, "x"), r"mu\[2\]: must not depend on x"),
        (lambda c: c.__setitem__("mu", ["0", "0"]), r"mu: expected a list of 3"),
        (lambda c: c.__setitem__("T", -1.0), "T: must be positive"),
        (lambda c: c.pop("T"), "T: missing"),
        (lambda c: c.__setitem__("epsilons", [0.4, 1.5, 0.1]),
         r"epsilons\[1\]: must lie in \(0,1\)"),
        (lambda c: c.__setitem__("epsilons", "0.4"), "epsilons: expected"),
        (lambda c: c.__setitem__("p", -1), "p: must be >= 0"),
        (lambda c: c.__setitem__("p", 1.5), "p: expected an integer"),
        (lambda c: c["grid"].__setitem__("n_per_edge", 4),
         r"n_per_edge: must be >= 8"),
        (lambda c: c["grid"].__setitem__("cfl", 1.5), r"cfl: must lie in \(0,1\]"),
        (lambda c: c.__setitem__("margin", -0.1), "margin: must be >= 0"),
        (lambda c: c.__setitem__("f", ["0", True, "0"]),
         r"f\[1\]: expected a string"),
    ]
    for mutate, pattern in cases:
        cfg = copy.deepcopy(base_cfg)
        mutate(cfg)
        reject(cfg, pattern)


def test_validate_config_defaults(base_cfg):
    for key in ("epsilons", "p", "grid", "margin"):
        base_cfg.pop(key, None)
    run = validate_config(base_cfg)
    assert run.epsilons == (0.4, 0.2, 0.1, 0.05)
    assert run.p == 1 and run.n_per_edge == 640
    assert run.cfl == 0.9 and run.margin == 0.3
