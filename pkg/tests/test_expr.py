import math
import random

import numpy as np
import pytest

from starwaves.errors import ExprDomainError, ExprSyntaxError
from starwaves.expr import Const, parse


def test_basic_arithmetic():
    assert parse("2 + 3*4").evaluate(0.0, 0.0) == 14.0
    assert parse("(2 + 3)*4").evaluate(0.0, 0.0) == 20.0
    assert parse("2^3^2").evaluate(0.0, 0.0) == 64.0  # left-assoc chain
    assert parse("-x^2").evaluate(3.0, 0.0) == -9.0
    assert parse("7/2").evaluate(0.0, 0.0) == 3.5


def test_variables_and_constants():
    assert parse("x").evaluate(2.5, 0.0) == 2.5
    assert parse("t").evaluate(0.0, 1.25) == 1.25
    assert parse("2*pi").evaluate(0.0, 0.0) == pytest.approx(2 * math.pi, rel=1e-15)
    assert parse("e").evaluate(0.0, 0.0) == pytest.approx(math.e, rel=1e-15)
    assert parse("cos(pi)").evaluate(0.0, 0.0) == pytest.approx(-1.0, abs=1e-15)


def test_reference_config_expressions():
    f = parse("sin(t)*(1 + x)")
    assert f.evaluate(1.0, 0.5) == pytest.approx(math.sin(0.5) * 2.0, rel=1e-15)
    phi = parse("cos(pi*x/2)")
    assert phi.evaluate(1.0, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert phi.evaluate(0.0, 0.0) == 1.0


def test_scientific_notation():
    assert parse("1e-3").evaluate(0, 0) == 1e-3
    assert parse("2.5E2").evaluate(0, 0) == 250.0


def test_integer_exponents_only():
    with pytest.raises(ExprSyntaxError):
        parse("x^2.5")
    with pytest.raises(ExprSyntaxError):
        parse("x^(2)")
    with pytest.raises(ExprSyntaxError):
        parse("x^t")
    assert parse("x^-2").evaluate(2.0, 0.0) == 0.25


def test_syntax_errors_carry_offset():
    with pytest.raises(ExprSyntaxError) as ei:
        parse("x +")
    assert ei.value.offset == 3
    with pytest.raises(ExprSyntaxError):
        parse("foo(x)")
    with pytest.raises(ExprSyntaxError):
        parse("1 2")
    with pytest.raises(ExprSyntaxError):
        parse("(x")
    with pytest.raises(ExprSyntaxError):
        parse("")


def test_domain_errors():
    with pytest.raises(ExprDomainError):
        parse("1/x").evaluate(0.0, 0.0)
    with pytest.raises(ExprDomainError):
        parse("sqrt(x)").evaluate(-1.0, 0.0)
    with pytest.raises(ExprDomainError):
        parse("x^-2").evaluate(0.0, 0.0)
    # arrays hit the same guards
    with pytest.raises(ExprDomainError):
        parse("sqrt(x)").evaluate(np.array([1.0, -1.0]), 0.0)


def test_numpy_broadcasting():
    f = parse("x*t + 1")
    x = np.linspace(0, 1, 5)[:, None]
    t = np.linspace(0, 2, 7)[None, :]
    out = f.evaluate(x, t)
    assert out.shape == (5, 7)
    assert np.allclose(out, x * t + 1.0)
    c = parse("3").evaluate(x, t)
    assert c.shape == (5, 7) and np.all(c == 3.0)


def test_differentiation():
    f = parse("x^2*sin(t)")
    fx = f.diff("x")
    assert fx.evaluate(3.0, 0.5) == pytest.approx(6.0 * math.sin(0.5), rel=1e-14)
    ft = f.diff("t")
    assert ft.evaluate(3.0, 0.5) == pytest.approx(9.0 * math.cos(0.5), rel=1e-14)
    assert parse("x^3").diff_n("x", 3).evaluate(0.0, 0.0) == 6.0
    assert isinstance(parse("x^3").diff_n("x", 4), Const)
    g = parse("sqrt(x)").diff("x")
    assert g.evaluate(4.0, 0.0) == pytest.approx(0.25, rel=1e-14)
    assert parse("cosh(x)").diff("x").evaluate(1.0, 0.0) == pytest.approx(
        math.sinh(1.0), rel=1e-14)


def test_diff_order_cap():
    with pytest.raises(ValueError):
        parse("sin(x)").diff_n("x", 13)
    # order 12 is still allowed
    assert parse("x^2").diff_n("x", 12).evaluate(1.0, 0.0) == 0.0


FUNCS = ["sin", "cos", "exp", "sqrt", "cosh", "sinh"]


def _random_expr(rng: random.Random, depth: int) -> str:
    if depth <= 0:
        return rng.choice(["x", "t", "pi",
                           format(rng.uniform(0.1, 3.0), ".3f")])
    kind = rng.randrange(6)
    a = _random_expr(rng, depth - 1)
    b = _random_expr(rng, depth - 1)
    if kind == 0:
        return f"({a} + {b})"
    if kind == 1:
        return f"({a} - {b})"
    if kind == 2:
        return f"({a} * {b})"
    if kind == 3:
        # keep denominators away from zero
        return f"({a} / ({b} + 4))"
    if kind == 4:
        fn = rng.choice(FUNCS)
        if fn == "sqrt":
            return f"sqrt(({a})^2 + 1)"
        if fn == "exp":
            return f"exp(({a}) / 20)"
        return f"{fn}({a})"
    return f"({a})^{rng.randrange(1, 4)}"


def test_parse_print_round_trip_property():
    """str(parse(s)) parses back to the same function (200 random trees)."""
    rng = random.Random(20240817)
    pts = [(0.3, 0.7), (1.1, 0.2), (0.9, 1.4)]
    for _ in range(200):
        src = _random_expr(rng, rng.randrange(1, 4))
        ast = parse(src)
        back = parse(str(ast))
        for x, t in pts:
            v1 = ast.evaluate(x, t)
            v2 = back.evaluate(x, t)
            assert v1 == pytest.approx(v2, rel=1e-12, abs=1e-12), src


def test_derivative_matches_finite_differences_property():
    rng = random.Random(7)
    h = 1e-6
    for _ in range(200):
        src = _random_expr(rng, rng.randrange(1, 3))
        ast = parse(src)
        dx = ast.diff("x")
        x, t = rng.uniform(0.2, 1.5), rng.uniform(0.2, 1.5)
        fd = (ast.evaluate(x + h, t) - ast.evaluate(x - h, t)) / (2 * h)
        an = dx.evaluate(x, t)
        scale = max(1.0, abs(an))
        assert abs(fd - an) <= 2e-5 * scale, src


def test_derivative_of_reference_mu_shape():
    # velocity compatibility uses d/dt of the boundary data
    mu = parse("0")
    assert mu.diff("t").evaluate(0.0, 0.7) == 0.0
    ramp = parse("t^2/2")
    assert ramp.diff("t").evaluate(0.0, 0.7) == pytest.approx(0.7)
