"""Symbolic expressions in the variables x and t.

A tiny closed-form expression language backs all user-supplied coefficient
and data functions.  Keeping the representation symbolic (rather than
accepting opaque callables) lets the rest of the package differentiate data
exactly, which the compatibility checks and the recursive corrector
construction both need.

Grammar accepted by :func:`parse`::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | power
    power   := atom ('^' signed_int)*
    atom    := number | 'pi' | 'e' | 'x' | 't' | func '(' expr ')' | '(' expr ')'
    func    := sin | cos | exp | sqrt | cosh | sinh

Exponents are restricted to integer literals so that repeated
differentiation stays inside the language.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ExprDomainError, ExprSyntaxError

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Neg",
    "Call",
    "parse",
    "const",
    "var",
    "add",
    "sub",
    "mul",
    "div",
    "pow_int",
    "neg",
    "call",
]

MAX_DIFF_ORDER = 12

_FUNCTIONS = ("sin", "cos", "exp", "sqrt", "cosh", "sinh")

_NUMPY_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "cosh": np.cosh,
    "sinh": np.sinh,
}


@dataclass(frozen=True)
class Expr:
    """Base node.  Subclasses are immutable and hashable."""

    def evaluate(self, x, t):
        """Evaluate with numpy broadcasting over ``x`` and ``t``."""
        raise NotImplementedError

    def diff(self, wrt: str) -> "Expr":
        """Exact partial derivative with respect to ``'x'`` or ``'t'``."""
        raise NotImplementedError

    def diff_n(self, wrt: str, n: int) -> "Expr":
        if n < 0 or n > MAX_DIFF_ORDER:
            raise ValueError(f"derivative order {n} outside [0, {MAX_DIFF_ORDER}]")
        e: Expr = self
        for _ in range(n):
            e = e.diff(wrt)
        return e

    def is_zero(self) -> bool:
        return isinstance(self, Const) and self.value == 0.0

    def __call__(self, x, t):
        return self.evaluate(x, t)


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def evaluate(self, x, t):
        shape = np.broadcast(np.asarray(x), np.asarray(t)).shape
        if shape == ():
            return float(self.value)
        return np.full(shape, self.value)

    def diff(self, wrt: str) -> Expr:
        return Const(0.0)

    def __str__(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Var(Expr):
    name: str  # 'x' or 't'

    def evaluate(self, x, t):
        base = x if self.name == "x" else t
        shape = np.broadcast(np.asarray(x), np.asarray(t)).shape
        if shape == ():
            return float(base)
        return np.broadcast_to(np.asarray(base, dtype=float), shape).copy()

    def diff(self, wrt: str) -> Expr:
        return Const(1.0 if wrt == self.name else 0.0)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Add(Expr):
    a: Expr
    b: Expr

    def evaluate(self, x, t):
        return self.a.evaluate(x, t) + self.b.evaluate(x, t)

    def diff(self, wrt: str) -> Expr:
        return add(self.a.diff(wrt), self.b.diff(wrt))

    def __str__(self) -> str:
        return f"({self.a} + {self.b})"


@dataclass(frozen=True)
class Sub(Expr):
    a: Expr
    b: Expr

    def evaluate(self, x, t):
        return self.a.evaluate(x, t) - self.b.evaluate(x, t)

    def diff(self, wrt: str) -> Expr:
        return sub(self.a.diff(wrt), self.b.diff(wrt))

    def __str__(self) -> str:
        return f"({self.a} - {self.b})"


@dataclass(frozen=True)
class Mul(Expr):
    a: Expr
    b: Expr

    def evaluate(self, x, t):
        return self.a.evaluate(x, t) * self.b.evaluate(x, t)

    def diff(self, wrt: str) -> Expr:
        return add(mul(self.a.diff(wrt), self.b), mul(self.a, self.b.diff(wrt)))

    def __str__(self) -> str:
        return f"({self.a} * {self.b})"


@dataclass(frozen=True)
class Div(Expr):
    a: Expr
    b: Expr

    def evaluate(self, x, t):
        denom = self.b.evaluate(x, t)
        if np.any(np.asarray(denom) == 0.0):
            raise ExprDomainError(f"division by zero in {self}")
        return self.a.evaluate(x, t) / denom

    def diff(self, wrt: str) -> Expr:
        num = sub(mul(self.a.diff(wrt), self.b), mul(self.a, self.b.diff(wrt)))
        return div(num, mul(self.b, self.b))

    def __str__(self) -> str:
        return f"({self.a} / {self.b})"


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def evaluate(self, x, t):
        b = self.base.evaluate(x, t)
        if self.exponent < 0 and np.any(np.asarray(b) == 0.0):
            raise ExprDomainError(f"zero raised to negative power in {self}")
        return b ** self.exponent

    def diff(self, wrt: str) -> Expr:
        # d(b^n) = n * b^(n-1) * b'
        return mul(
            mul(Const(float(self.exponent)), pow_int(self.base, self.exponent - 1)),
            self.base.diff(wrt),
        )

    def __str__(self) -> str:
        return f"({self.base}^{self.exponent})"


@dataclass(frozen=True)
class Neg(Expr):
    a: Expr

    def evaluate(self, x, t):
        return -self.a.evaluate(x, t)

    def diff(self, wrt: str) -> Expr:
        return neg(self.a.diff(wrt))

    def __str__(self) -> str:
        return f"(-{self.a})"


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr

    def evaluate(self, x, t):
        v = self.arg.evaluate(x, t)
        if self.func == "sqrt" and np.any(np.asarray(v) < 0.0):
            raise ExprDomainError(f"sqrt of negative value in {self}")
        return _NUMPY_FUNCS[self.func](v)

    def diff(self, wrt: str) -> Expr:
        inner = self.arg.diff(wrt)
        if self.func == "sin":
            outer: Expr = call("cos", self.arg)
        elif self.func == "cos":
            outer = neg(call("sin", self.arg))
        elif self.func == "exp":
            outer = self
        elif self.func == "cosh":
            outer = call("sinh", self.arg)
        elif self.func == "sinh":
            outer = call("cosh", self.arg)
        elif self.func == "sqrt":
            outer = div(Const(0.5), call("sqrt", self.arg))
        else:  # pragma: no cover - constructor guards the function list
            raise ValueError(f"unknown function {self.func}")
        return mul(outer, inner)

    def __str__(self) -> str:
        return f"{self.func}({self.arg})"


# --- smart constructors ---------------------------------------------------
#
# These fold constants so that repeated differentiation does not blow up the
# tree.  Folding must not hide a domain error: 0 / u and 0 ^ negative are
# left unfolded.


def const(v: float) -> Const:
    return Const(float(v))


def var(name: str) -> Var:
    if name not in ("x", "t"):
        raise ValueError(f"unknown variable {name!r}")
    return Var(name)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if a.is_zero():
        return b
    if b.is_zero():
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if b.is_zero():
        return a
    if a.is_zero():
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if a.is_zero() or b.is_zero():
        return Const(0.0)
    if isinstance(a, Const) and a.value == 1.0:
        return b
    if isinstance(b, Const) and b.value == 1.0:
        return a
    if isinstance(a, Const) and a.value == -1.0:
        return neg(b)
    if isinstance(b, Const) and b.value == -1.0:
        return neg(a)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const):
        if b.value == 0.0:
            raise ExprDomainError("division by constant zero")
        if isinstance(a, Const):
            return Const(a.value / b.value)
        if b.value == 1.0:
            return a
    # 0 / u is NOT folded: u may vanish at evaluation points and the
    # division must then raise, matching unfolded semantics.
    return Div(a, b)


def pow_int(base: Expr, exponent: int) -> Expr:
    if exponent == 0:
        # u^0 == 1 for any u under integer-power semantics, including u == 0.
        return Const(1.0)
    if exponent == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0.0 and exponent < 0:
            raise ExprDomainError("zero raised to negative power")
        return Const(base.value ** exponent)
    return Pow(base, exponent)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def call(func: str, arg: Expr) -> Expr:
    if func not in _FUNCTIONS:
        raise ValueError(f"unknown function {func!r}")
    if isinstance(arg, Const):
        v = arg.value
        if func == "sqrt" and v < 0.0:
            raise ExprDomainError("sqrt of negative constant")
        return Const(float(_NUMPY_FUNCS[func](v)))
    return Call(func, arg)


# --- parser ---------------------------------------------------------------


@dataclass
class _Tok:
    kind: str  # 'num', 'name', 'op'
    text: str
    pos: int


def _tokenize(s: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i = 0
    n = len(s)
    while i < n:
        c = s[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and s[i + 1].isdigit()):
            j = i
            seen_dot = False
            seen_exp = False
            while j < n:
                cj = s[j]
                if cj.isdigit():
                    j += 1
                elif cj == "." and not seen_dot and not seen_exp:
                    seen_dot = True
                    j += 1
                elif cj in "eE" and not seen_exp and j > i and (s[j - 1].isdigit() or s[j - 1] == "."):
                    # exponent marker only if followed by digits or sign+digits
                    k = j + 1
                    if k < n and s[k] in "+-":
                        k += 1
                    if k < n and s[k].isdigit():
                        seen_exp = True
                        j = k + 1
                        while j < n and s[j].isdigit():
                            j += 1
                    else:
                        break
                else:
                    break
            toks.append(_Tok("num", s[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (s[j].isalnum() or s[j] == "_"):
                j += 1
            toks.append(_Tok("name", s[i:j], i))
            i = j
            continue
        if c in "+-*/^()":
            toks.append(_Tok("op", c, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", i)
    return toks


@dataclass
class _Parser:
    toks: list[_Tok]
    src_len: int
    pos: int = 0

    def peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self) -> _Tok:
        t = self.peek()
        if t is None:
            raise ExprSyntaxError("unexpected end of expression", self.src_len)
        self.pos += 1
        return t

    def expect_op(self, text: str) -> None:
        t = self.peek()
        if t is None or t.kind != "op" or t.text != text:
            where = t.pos if t is not None else self.src_len
            raise ExprSyntaxError(f"expected {text!r}", where)
        self.pos += 1

    def parse_expr(self) -> Expr:
        e = self.parse_term()
        while True:
            t = self.peek()
            if t is not None and t.kind == "op" and t.text in "+-":
                self.pos += 1
                rhs = self.parse_term()
                e = add(e, rhs) if t.text == "+" else sub(e, rhs)
            else:
                return e

    def parse_term(self) -> Expr:
        e = self.parse_factor()
        while True:
            t = self.peek()
            if t is not None and t.kind == "op" and t.text in "*/":
                self.pos += 1
                rhs = self.parse_factor()
                e = mul(e, rhs) if t.text == "*" else div(e, rhs)
            else:
                return e

    def parse_factor(self) -> Expr:
        t = self.peek()
        if t is not None and t.kind == "op" and t.text == "-":
            self.pos += 1
            return neg(self.parse_factor())
        return self.parse_power()

    def parse_power(self) -> Expr:
        e = self.parse_atom()
        while True:
            t = self.peek()
            if t is not None and t.kind == "op" and t.text == "^":
                self.pos += 1
                e = pow_int(e, self.parse_int_literal())
            else:
                return e

    def parse_int_literal(self) -> int:
        sign = 1
        t = self.peek()
        if t is not None and t.kind == "op" and t.text in "+-":
            self.pos += 1
            if t.text == "-":
                sign = -1
            t = self.peek()
        if t is None:
            raise ExprSyntaxError("expected integer exponent", self.src_len)
        if t.kind != "num" or any(ch in t.text for ch in ".eE"):
            raise ExprSyntaxError("exponent must be an integer literal", t.pos)
        self.pos += 1
        return sign * int(t.text)

    def parse_atom(self) -> Expr:
        t = self.next()
        if t.kind == "num":
            return const(float(t.text))
        if t.kind == "name":
            if t.text == "pi":
                return const(math.pi)
            if t.text == "e":
                return const(math.e)
            if t.text in ("x", "t"):
                return var(t.text)
            if t.text in _FUNCTIONS:
                self.expect_op("(")
                arg = self.parse_expr()
                self.expect_op(")")
                return call(t.text, arg)
            raise ExprSyntaxError(f"unknown name {t.text!r}", t.pos)
        if t.kind == "op" and t.text == "(":
            e = self.parse_expr()
            self.expect_op(")")
            return e
        raise ExprSyntaxError(f"unexpected token {t.text!r}", t.pos)


def parse(s: str) -> Expr:
    """Parse an expression string into an :class:`Expr` tree.

    Raises :class:`ExprSyntaxError` with the failing character offset on
    malformed input.
    """
    toks = _tokenize(s)
    p = _Parser(toks, len(s))
    e = p.parse_expr()
    rest = p.peek()
    if rest is not None:
        raise ExprSyntaxError(f"trailing input {rest.text!r}", rest.pos)
    return e
