"""Scalar expression trees over chart coordinates and their order-3 jets.

Expressions are immutable trees built from constants, coordinates ``x0..x{m-1}``,
named parameters, ``+ - * /``, non-negative integer powers and ``exp``,
``sin``, ``cos``.  They can be parsed from text, printed back, evaluated to a
float (or to any number type with a matching math library, e.g. ``mpmath``),
and evaluated to a :class:`Jet3`, the truncated Taylor expansion of order 3
used by the curvature engine.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    CoordinateRangeError,
    EvaluationError,
    ExprSyntaxError,
    UnboundParameterError,
    UnknownIdentifierError,
)

__all__ = [
    "ScalarExpr", "Const", "Coord", "Param", "Sum", "Prod", "Neg", "Quot",
    "Pow", "Exp", "Sin", "Cos", "as_expr", "parse_expr", "to_string",
    "evaluate", "eval_jet", "Jet3", "coordinates_used", "parameters_used",
]


# --------------------------------------------------------------------------
# Nodes
# --------------------------------------------------------------------------

class ScalarExpr:
    """Base class of expression nodes; supports arithmetic operators."""

    __slots__ = ()

    def __add__(self, other):
        return Sum(self, as_expr(other))

    def __radd__(self, other):
        return Sum(as_expr(other), self)

    def __sub__(self, other):
        return Sum(self, Neg(as_expr(other)))

    def __rsub__(self, other):
        return Sum(as_expr(other), Neg(self))

    def __mul__(self, other):
        return Prod(self, as_expr(other))

    def __rmul__(self, other):
        return Prod(as_expr(other), self)

    def __truediv__(self, other):
        return Quot(self, as_expr(other))

    def __rtruediv__(self, other):
        return Quot(as_expr(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, n):
        return Pow(self, n)

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True, eq=True, repr=True)
class Const(ScalarExpr):
    value: float


@dataclass(frozen=True)
class Coord(ScalarExpr):
    index: int


@dataclass(frozen=True)
class Param(ScalarExpr):
    name: str


@dataclass(frozen=True)
class Sum(ScalarExpr):
    left: ScalarExpr
    right: ScalarExpr


@dataclass(frozen=True)
class Prod(ScalarExpr):
    left: ScalarExpr
    right: ScalarExpr


@dataclass(frozen=True)
class Quot(ScalarExpr):
    left: ScalarExpr
    right: ScalarExpr


@dataclass(frozen=True)
class Neg(ScalarExpr):
    arg: ScalarExpr


@dataclass(frozen=True)
class Pow(ScalarExpr):
    base: ScalarExpr
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent < 0:
            raise ValueError(f"exponent must be a non-negative int, got {self.exponent!r}")


@dataclass(frozen=True)
class Exp(ScalarExpr):
    arg: ScalarExpr


@dataclass(frozen=True)
class Sin(ScalarExpr):
    arg: ScalarExpr


@dataclass(frozen=True)
class Cos(ScalarExpr):
    arg: ScalarExpr


_FUNCTIONS = {"exp": Exp, "sin": Sin, "cos": Cos}


def as_expr(value) -> ScalarExpr:
    if isinstance(value, ScalarExpr):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Const(float(value))
    raise TypeError(f"cannot convert {type(value).__name__} to an expression")


def coordinates_used(e: ScalarExpr) -> set[int]:
    if isinstance(e, Coord):
        return {e.index}
    return set().union(*(coordinates_used(c) for c in _children(e)))


def parameters_used(e: ScalarExpr) -> set[str]:
    if isinstance(e, Param):
        return {e.name}
    return set().union(*(parameters_used(c) for c in _children(e)))


def _children(e):
    if isinstance(e, (Sum, Prod, Quot)):
        return (e.left, e.right)
    if isinstance(e, (Neg, Exp, Sin, Cos)):
        return (e.arg,)
    if isinstance(e, Pow):
        return (e.base,)
    return ()


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)
_COORD_RE = re.compile(r"x(\d+)$")
_PARAM_RE = re.compile(r"[a-z][a-z0-9_]*$")


def _tokenize(text: str):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            while text[pos].isspace():
                pos += 1
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), _byte_offset(text, start)))
        pos = m.end()
    tokens.append(("end", "", len(text.encode("utf-8"))))
    return tokens


def _byte_offset(text, pos):
    return len(text[:pos].encode("utf-8"))


class _Parser:
    # expr  := term (('+'|'-') term)*
    # term  := unary (('*'|'/') unary)*
    # unary := '-' unary | power
    # power := atom ('^' INT)*
    # atom  := NUM | NAME | FUNC '(' expr ')' | '(' expr ')'

    def __init__(self, text, dim, params):
        self.tokens = _tokenize(text)
        self.i = 0
        self.dim = dim
        self.params = set(params)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, off = self.take()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", off)

    def parse(self):
        e = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", off)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = Sum(e, rhs) if op == "+" else Sum(e, Neg(rhs))
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            e = Prod(e, rhs) if op == "*" else Quot(e, rhs)
        return e

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        e = self.atom()
        while self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            kind, text, off = self.take()
            if kind != "num" or not text.isdigit():
                raise ExprSyntaxError("exponent must be a non-negative integer literal", off)
            e = Pow(e, int(text))
        return e

    def atom(self):
        kind, text, off = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _FUNCTIONS[text](arg)
            m = _COORD_RE.match(text)
            if m:
                idx = int(m.group(1))
                if idx >= self.dim:
                    raise CoordinateRangeError(
                        f"coordinate {text} out of range for dimension {self.dim}", off)
                return Coord(idx)
            if _PARAM_RE.match(text) and text in self.params:
                return Param(text)
            raise UnknownIdentifierError(f"unknown identifier {text!r}", off)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", off)


def parse_expr(text: str, dim: int, params: Sequence[str] = ()) -> ScalarExpr:
    """Parse ``text`` into an expression over ``dim`` coordinates.

    Raises :class:`ExprSyntaxError` (with a byte offset) on malformed input,
    :class:`UnknownIdentifierError` for names that are neither coordinates,
    functions nor declared parameters, and :class:`CoordinateRangeError` for
    ``x<i>`` with ``i >= dim``.
    """
    for name in params:
        if not _PARAM_RE.match(name) or _COORD_RE.match(name) or name in _FUNCTIONS:
            raise ValueError(f"invalid parameter name {name!r}")
    return _Parser(text, dim, params).parse()


# --------------------------------------------------------------------------
# Printer
# --------------------------------------------------------------------------

_PREC = {Sum: 1, Prod: 2, Quot: 2, Neg: 3, Pow: 4}


def _prec(e):
    return _PREC.get(type(e), 5)


def to_string(e: ScalarExpr) -> str:
    """Print ``e`` with minimal parentheses; ``parse_expr`` inverts it."""
    if isinstance(e, Const):
        if e.value < 0 or math.isnan(e.value):
            return f"({e.value!r})"
        return repr(e.value)
    if isinstance(e, Coord):
        return f"x{e.index}"
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Sum):
        left = _wrap(e.left, _prec(e.left) < 1)
        if isinstance(e.right, Neg):
            return f"{left} - {_wrap(e.right.arg, _prec(e.right.arg) <= 1)}"
        return f"{left} + {_wrap(e.right, _prec(e.right) <= 1)}"
    if isinstance(e, (Prod, Quot)):
        op = "*" if isinstance(e, Prod) else "/"
        return f"{_wrap(e.left, _prec(e.left) < 2)}{op}{_wrap(e.right, _prec(e.right) <= 2)}"
    if isinstance(e, Neg):
        return f"-{_wrap(e.arg, _prec(e.arg) < 3)}"
    if isinstance(e, Pow):
        return f"{_wrap(e.base, _prec(e.base) < 4)}^{e.exponent}"
    for name, cls in _FUNCTIONS.items():
        if isinstance(e, cls):
            return f"{name}({to_string(e.arg)})"
    raise TypeError(f"unknown node {e!r}")


def _wrap(e, parens):
    s = to_string(e)
    return f"({s})" if parens else s


# --------------------------------------------------------------------------
# Plain evaluation
# --------------------------------------------------------------------------

def evaluate(e: ScalarExpr, point: Sequence, bindings: Mapping[str, float] | None = None,
             lib=math):
    """Evaluate ``e`` at ``point``.

    ``lib`` supplies ``exp``, ``sin`` and ``cos``; pass :mod:`mpmath` together
    with ``mpf`` coordinates for high-precision evaluation.
    """
    bindings = bindings or {}

    def ev(node):
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Coord):
            return point[node.index]
        if isinstance(node, Param):
            try:
                return bindings[node.name]
            except KeyError:
                raise UnboundParameterError(f"parameter {node.name!r} is not bound") from None
        if isinstance(node, Sum):
            return ev(node.left) + ev(node.right)
        if isinstance(node, Prod):
            return ev(node.left) * ev(node.right)
        if isinstance(node, Quot):
            den = ev(node.right)
            if den == 0:
                raise EvaluationError(f"division by zero in {to_string(node)}")
            return ev(node.left) / den
        if isinstance(node, Neg):
            return -ev(node.arg)
        if isinstance(node, Pow):
            return ev(node.base) ** node.exponent
        if isinstance(node, Exp):
            return lib.exp(ev(node.arg))
        if isinstance(node, Sin):
            return lib.sin(ev(node.arg))
        if isinstance(node, Cos):
            return lib.cos(ev(node.arg))
        raise TypeError(f"unknown node {node!r}")

    return ev(e)


# --------------------------------------------------------------------------
# Jets
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _index_tables(m):
    pairs = [(a, b) for a in range(m) for b in range(a, m)]
    triples = [(a, b, c) for a in range(m) for b in range(a, m) for c in range(b, m)]
    pos2 = np.empty((m, m), dtype=np.intp)
    for k, (a, b) in enumerate(pairs):
        pos2[a, b] = pos2[b, a] = k
    pos3 = np.empty((m, m, m), dtype=np.intp)
    for k, (a, b, c) in enumerate(triples):
        for i, j, l in {(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)}:
            pos3[i, j, l] = k
    pa = tuple(np.array(t, dtype=np.intp) for t in zip(*pairs)) if pairs else ()
    ta = tuple(np.array(t, dtype=np.intp) for t in zip(*triples)) if triples else ()
    return pos2, pos3, pa, ta


def _sym3(u1, v2):
    """u_a v_bc + u_b v_ac + u_c v_ab."""
    t = np.einsum("a,bc->abc", u1, v2)
    return t + t.transpose(1, 0, 2) + t.transpose(1, 2, 0)


class Jet3:
    """Order-3 truncated Taylor expansion of a scalar in ``m`` variables.

    Mixed partials are stored once (packed upper-triangular storage of
    sizes ``m(m+1)/2`` and ``m(m+1)(m+2)/6``); :attr:`hessian` and
    :attr:`third` return the full symmetric arrays.  Coefficients are the
    partial derivatives themselves, not Taylor coefficients.
    """

    __slots__ = ("value", "gradient", "_h", "_t")

    def __init__(self, value, gradient, hessian_packed, third_packed):
        self.value = float(value)
        self.gradient = np.asarray(gradient, dtype=float)
        self._h = np.asarray(hessian_packed, dtype=float)
        self._t = np.asarray(third_packed, dtype=float)

    @property
    def dim(self):
        return self.gradient.shape[0]

    @property
    def hessian_packed(self):
        return self._h

    @property
    def third_packed(self):
        return self._t

    @property
    def hessian(self):
        pos2 = _index_tables(self.dim)[0]
        return self._h[pos2]

    @property
    def third(self):
        pos3 = _index_tables(self.dim)[1]
        return self._t[pos3]

    def partial(self, *idx):
        """Derivative with respect to the coordinates ``idx`` (order <= 3)."""
        if len(idx) == 0:
            return self.value
        if len(idx) == 1:
            return self.gradient[idx[0]]
        if len(idx) == 2:
            return self.hessian[idx[0], idx[1]]
        if len(idx) == 3:
            return self.third[idx[0], idx[1], idx[2]]
        raise ValueError("jets carry derivatives up to order 3 only")

    @classmethod
    def constant(cls, value, m):
        _, _, pa, ta = _index_tables(m)
        return cls(value, np.zeros(m), np.zeros(len(pa[0]) if pa else 0),
                   np.zeros(len(ta[0]) if ta else 0))

    @classmethod
    def variable(cls, value, index, m):
        jet = cls.constant(value, m)
        jet.gradient[index] = 1.0
        return jet

    @classmethod
    def from_dense(cls, value, gradient, hessian, third):
        m = len(gradient)
        _, _, pa, ta = _index_tables(m)
        h = hessian[pa] if pa else np.zeros(0)
        t = third[ta] if ta else np.zeros(0)
        return cls(value, gradient, h, t)

    def __repr__(self):
        return f"Jet3(value={self.value!r}, gradient={self.gradient.tolist()!r}, ...)"

    # arithmetic -------------------------------------------------------

    def __add__(self, other):
        other = _lift(other, self.dim)
        return Jet3(self.value + other.value, self.gradient + other.gradient,
                    self._h + other._h, self._t + other._t)

    __radd__ = __add__

    def __neg__(self):
        return Jet3(-self.value, -self.gradient, -self._h, -self._t)

    def __sub__(self, other):
        return self + (-_lift(other, self.dim))

    def __rsub__(self, other):
        return _lift(other, self.dim) + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Jet3(self.value * other, self.gradient * other, self._h * other, self._t * other)
        u, v = self, other
        g = u.value * v.gradient + v.value * u.gradient
        uh, vh = u.hessian, v.hessian
        h = u.value * vh + v.value * uh + np.outer(u.gradient, v.gradient) + np.outer(v.gradient, u.gradient)
        t = (u.value * v.third + v.value * u.third
             + _sym3(u.gradient, vh) + _sym3(v.gradient, uh))
        return Jet3.from_dense(u.value * v.value, g, h, t)

    __rmul__ = __mul__

    def compose(self, f0, f1, f2, f3):
        """Chain rule: jet of ``f(self)`` given ``f`` and its first three derivatives at ``self.value``."""
        g1 = self.gradient
        h1 = self.hessian
        g = f1 * g1
        h = f1 * h1 + f2 * np.outer(g1, g1)
        t = (f1 * self.third + f2 * _sym3(g1, h1)
             + f3 * np.einsum("a,b,c->abc", g1, g1, g1))
        return Jet3.from_dense(f0, g, h, t)

    def reciprocal(self):
        x = self.value
        if x == 0:
            raise EvaluationError("division by zero")
        return self.compose(1 / x, -1 / x**2, 2 / x**3, -6 / x**4)

    def __truediv__(self, other):
        other = _lift(other, self.dim)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return _lift(other, self.dim) * self.reciprocal()

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        x = self.value
        coeffs = [1.0, float(n), float(n * (n - 1)), float(n * (n - 1) * (n - 2))]
        derivs = [c * x ** (n - k) if n - k >= 0 else 0.0 for k, c in enumerate(coeffs)]
        return self.compose(*derivs)

    def exp(self):
        e = math.exp(self.value)
        return self.compose(e, e, e, e)

    def sin(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self.compose(s, c, -s, -c)

    def cos(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self.compose(c, -s, -c, s)


def _lift(x, m):
    if isinstance(x, Jet3):
        return x
    return Jet3.constant(float(x), m)


def eval_jet(e: ScalarExpr, point: Sequence[float], bindings: Mapping[str, float] | None = None) -> Jet3:
    """Evaluate ``e`` and its partial derivatives up to order 3 at ``point``."""
    point = np.asarray(point, dtype=float)
    m = point.shape[0]
    bindings = bindings or {}

    def ev(node):
        if isinstance(node, Const):
            return Jet3.constant(node.value, m)
        if isinstance(node, Coord):
            if node.index >= m:
                raise EvaluationError(f"coordinate x{node.index} out of range for a {m}-point")
            return Jet3.variable(point[node.index], node.index, m)
        if isinstance(node, Param):
            try:
                return Jet3.constant(bindings[node.name], m)
            except KeyError:
                raise UnboundParameterError(f"parameter {node.name!r} is not bound") from None
        if isinstance(node, Sum):
            return ev(node.left) + ev(node.right)
        if isinstance(node, Prod):
            return ev(node.left) * ev(node.right)
        if isinstance(node, Quot):
            den = ev(node.right)
            if den.value == 0:
                raise EvaluationError(f"division by zero in {to_string(node)} at {point.tolist()}")
            return ev(node.left) * den.reciprocal()
        if isinstance(node, Neg):
            return -ev(node.arg)
        if isinstance(node, Pow):
            return ev(node.base) ** node.exponent
        if isinstance(node, Exp):
            return ev(node.arg).exp()
        if isinstance(node, Sin):
            return ev(node.arg).sin()
        if isinstance(node, Cos):
            return ev(node.arg).cos()
        raise TypeError(f"unknown node {node!r}")

    return ev(e)
