"""Expression trees: parsing, evaluation, exact symbolic differentiation.

Grammar (precedence high to low, binary ops left-associative):

    atom   := number | variable | '(' expr ')' | func '(' expr ')'
    power  := atom ('^' integer)*
    unary  := '-' unary | power
    term   := unary (('*' | '/') unary)*
    expr   := term (('+' | '-') term)*

Variables are x1..xn and y1..ym; funcs are sin, cos, exp.  Pow exponents
are nonnegative integer literals, which keeps every tree twice
differentiable.  Constants are stored as exact fractions with power-of-ten
denominators so pretty-printing round-trips structurally.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    EvaluationDomainError,
    ExactArithmeticError,
    NonFiniteResultError,
    ParseError,
)

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5

_FUNCS = ("sin", "cos", "exp")


class Expr:
    """Immutable expression-tree node."""

    prec = _PREC_ATOM

    def variables(self):
        """Set of variable indices appearing in the tree."""
        out = set()
        self._collect_vars(out)
        return out

    def _collect_vars(self, out):
        pass

    def __repr__(self):
        return f"{type(self).__name__}({to_text(self)!r})"


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: Fraction

    prec = _PREC_ATOM


@dataclass(frozen=True, repr=False)
class Var(Expr):
    name: str
    index: int  # position in the joint (x, y) point vector

    prec = _PREC_ATOM

    def _collect_vars(self, out):
        out.add(self.index)


@dataclass(frozen=True, repr=False)
class Unary(Expr):
    op: str  # 'neg', 'sin', 'cos', 'exp'
    arg: Expr

    @property
    def prec(self):
        return _PREC_NEG if self.op == "neg" else _PREC_ATOM

    def _collect_vars(self, out):
        self.arg._collect_vars(out)


@dataclass(frozen=True, repr=False)
class Binary(Expr):
    op: str  # 'add', 'sub', 'mul', 'div'
    left: Expr
    right: Expr

    @property
    def prec(self):
        return _PREC_ADD if self.op in ("add", "sub") else _PREC_MUL

    def _collect_vars(self, out):
        self.left._collect_vars(out)
        self.right._collect_vars(out)


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    base: Expr
    exponent: int  # integer >= 0

    prec = _PREC_POW

    def _collect_vars(self, out):
        self.base._collect_vars(out)


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


# ---------------------------------------------------------------------------
# Smart constructors: constant folding only, no deeper rewriting.

def const(v) -> Const:
    return Const(Fraction(v))


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if isinstance(a, Const) and a.value == 0:
        return b
    if isinstance(b, Const) and b.value == 0:
        return a
    return Binary("add", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if isinstance(b, Const) and b.value == 0:
        return a
    return Binary("sub", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if isinstance(a, Const):
        if a.value == 0:
            return ZERO
        if a.value == 1:
            return b
    if isinstance(b, Const):
        if b.value == 0:
            return ZERO
        if b.value == 1:
            return a
    return Binary("mul", a, b)


def div(a: Expr, b: Expr) -> Expr:
    # No folding: folding 1/3 would create a constant with no exact decimal
    # form, breaking the structural round-trip of the pretty-printer.
    if isinstance(a, Const) and a.value == 0 and not (isinstance(b, Const) and b.value == 0):
        return ZERO
    if isinstance(b, Const) and b.value == 1:
        return a
    return Binary("div", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def power(base: Expr, exponent: int) -> Expr:
    if exponent < 0:
        raise ValueError("pow exponent must be a nonnegative integer")
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        return Const(base.value ** exponent)
    return Pow(base, exponent)


def unary(op: str, arg: Expr) -> Expr:
    if op == "neg":
        return neg(arg)
    if op not in _FUNCS:
        raise ValueError(f"unknown unary op {op!r}")
    return Unary(op, arg)


# ---------------------------------------------------------------------------
# Tokenizer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            off = len(text) - len(stripped)
            raise ParseError(off, "token", repr(stripped[0]))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def var_name_to_index(name: str, n: int, m: int):
    """Map x1..xn / y1..ym to a joint index, or None if not a variable name."""
    mt = re.fullmatch(r"([xy])([1-9]\d*)", name)
    if mt is None:
        return None
    idx = int(mt.group(2))
    if mt.group(1) == "x":
        return idx - 1 if idx <= n else None
    return n + idx - 1 if idx <= m else None


def index_to_var_name(index: int, n: int) -> str:
    return f"x{index + 1}" if index < n else f"y{index - n + 1}"


class _Parser:
    def __init__(self, text, n, m):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.n = n
        self.m = m

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected):
        kind, value, offset = self.peek()
        found = "end of input" if kind == "end" else repr(value)
        raise ParseError(offset, expected, found)

    def expect_op(self, op):
        kind, value, _ = self.peek()
        if kind != "op" or value != op:
            self.fail(repr(op))
        return self.advance()

    def parse(self):
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail("end of input")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.advance()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.advance()[1]
            rhs = self.unary()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return neg(self.unary())
        return self.power()

    def power(self):
        e = self.atom()
        while self.peek()[:2] == ("op", "^"):
            self.advance()
            kind, value, offset = self.peek()
            if kind != "num" or not re.fullmatch(r"\d+", value):
                self.fail("nonnegative integer exponent")
            self.advance()
            e = power(e, int(value))
        return e

    def atom(self):
        kind, value, offset = self.peek()
        if kind == "num":
            self.advance()
            return Const(Fraction(value))
        if kind == "name":
            self.advance()
            if value in _FUNCS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Unary(value, arg)
            idx = var_name_to_index(value, self.n, self.m)
            if idx is None:
                raise ParseError(offset, "declared variable or function", repr(value))
            return Var(value, idx)
        if kind == "op" and value == "(":
            self.advance()
            e = self.expr()
            self.expect_op(")")
            return e
        self.fail("operand")


def parse(text: str, n: int, m: int) -> Expr:
    """Parse expression text over variables x1..xn, y1..ym."""
    if not text or not text.strip():
        raise ParseError(0, "operand", "empty input")
    return _Parser(text, n, m).parse()


# ---------------------------------------------------------------------------
# Pretty printer

def _fraction_text(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    # Denominators are products of 2s and 5s by construction; render the
    # exact decimal expansion.
    den = v.denominator
    k2 = k5 = 0
    while den % 2 == 0:
        den //= 2
        k2 += 1
    while den % 5 == 0:
        den //= 5
        k5 += 1
    if den != 1:
        raise ValueError(f"constant {v} has no exact decimal form")
    k = max(k2, k5)
    scaled = abs(v.numerator) * 10 ** k // v.denominator
    digits = str(scaled).rjust(k + 1, "0")
    body = f"{digits[:-k]}.{digits[-k:]}"
    return "-" + body if v.numerator < 0 else body


def _wrap(child: Expr, text: str, min_prec: int) -> str:
    return f"({text})" if child.prec < min_prec else text


def to_text(e: Expr) -> str:
    """Render an expression; to_text -> parse is the structural identity."""
    if isinstance(e, Const):
        return _fraction_text(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        inner = to_text(e.arg)
        if e.op == "neg":
            return "-" + _wrap(e.arg, inner, _PREC_NEG)
        return f"{e.op}({inner})"
    if isinstance(e, Pow):
        base = to_text(e.base)
        return f"{_wrap(e.base, base, _PREC_ATOM)}^{e.exponent}"
    if isinstance(e, Binary):
        lt = to_text(e.left)
        rt = to_text(e.right)
        if e.op == "add":
            return f"{_wrap(e.left, lt, _PREC_ADD)} + {_wrap(e.right, rt, _PREC_ADD)}"
        if e.op == "sub":
            return f"{_wrap(e.left, lt, _PREC_ADD)} - {_wrap(e.right, rt, _PREC_ADD + 1)}"
        if e.op == "mul":
            return f"{_wrap(e.left, lt, _PREC_MUL)}*{_wrap(e.right, rt, _PREC_MUL)}"
        return f"{_wrap(e.left, lt, _PREC_MUL)}/{_wrap(e.right, rt, _PREC_MUL + 1)}"
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# Evaluation

def evaluate(e: Expr, point, exact: bool = False):
    """Evaluate at a joint (x, y) point.

    With exact=True all arithmetic is rational; transcendental nodes raise
    ExactArithmeticError.  In float mode, division by zero raises
    EvaluationDomainError and non-finite results raise NonFiniteResultError.
    """
    val = _eval(e, point, exact)
    if not exact and not math.isfinite(val):
        raise NonFiniteResultError(f"non-finite value {val} for {to_text(e)}")
    return val


def _eval(e, point, exact):
    if isinstance(e, Const):
        return e.value if exact else float(e.value)
    if isinstance(e, Var):
        v = point[e.index]
        return Fraction(v) if exact else float(v)
    if isinstance(e, Unary):
        a = _eval(e.arg, point, exact)
        if e.op == "neg":
            return -a
        if exact:
            raise ExactArithmeticError(f"{e.op} has no exact rational value")
        fn = {"sin": math.sin, "cos": math.cos, "exp": math.exp}[e.op]
        try:
            return fn(a)
        except OverflowError as err:
            raise NonFiniteResultError(str(err)) from err
    if isinstance(e, Pow):
        return _eval(e.base, point, exact) ** e.exponent
    if isinstance(e, Binary):
        a = _eval(e.left, point, exact)
        b = _eval(e.right, point, exact)
        if e.op == "add":
            return a + b
        if e.op == "sub":
            return a - b
        if e.op == "mul":
            return a * b
        if b == 0:
            raise EvaluationDomainError(f"division by zero in {to_text(e)}")
        return a / b
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# Differentiation: total on the grammar, exact table rules.

def differentiate(e: Expr, index: int) -> Expr:
    """Exact partial derivative with respect to the joint variable index."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == index else ZERO
    if isinstance(e, Unary):
        da = differentiate(e.arg, index)
        if e.op == "neg":
            return neg(da)
        if e.op == "sin":
            return mul(Unary("cos", e.arg), da)
        if e.op == "cos":
            return neg(mul(Unary("sin", e.arg), da))
        return mul(Unary("exp", e.arg), da)
    if isinstance(e, Pow):
        if e.exponent == 0:
            return ZERO
        db = differentiate(e.base, index)
        return mul(mul(const(e.exponent), power(e.base, e.exponent - 1)), db)
    if isinstance(e, Binary):
        da = differentiate(e.left, index)
        db = differentiate(e.right, index)
        if e.op == "add":
            return add(da, db)
        if e.op == "sub":
            return sub(da, db)
        if e.op == "mul":
            return add(mul(da, e.right), mul(e.left, db))
        num = sub(mul(da, e.right), mul(e.left, db))
        return div(num, power(e.right, 2))
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# Smooth scalar/vector fields backed by expression trees.

class SmoothFunction:
    """Vector of expression trees over the joint (x, y) variables."""

    def __init__(self, components, n: int, m: int):
        self.components = tuple(components)
        self.n = n
        self.m = m
        self._grad_cache = {}

    @classmethod
    def from_text(cls, texts, n, m):
        if isinstance(texts, str):
            texts = [texts]
        return cls([parse(t, n, m) for t in texts], n, m)

    @property
    def codim(self):
        return len(self.components)

    @property
    def is_scalar(self):
        return len(self.components) == 1

    def value(self, point, exact=False):
        vals = [evaluate(c, point, exact) for c in self.components]
        return vals[0] if self.is_scalar else vals

    def partial(self, comp: int, index: int) -> Expr:
        key = (comp, index)
        if key not in self._grad_cache:
            self._grad_cache[key] = differentiate(self.components[comp], index)
        return self._grad_cache[key]

    def gradient(self, point, exact=False):
        """Jacobian rows (codim x (n+m)) evaluated at point."""
        d = self.n + self.m
        return [
            [evaluate(self.partial(c, j), point, exact) for j in range(d)]
            for c in range(len(self.components))
        ]

    def grad_exprs(self, indices):
        """Symbolic gradient of a scalar function over the given indices."""
        if not self.is_scalar:
            raise ValueError("grad_exprs requires a scalar function")
        return [self.partial(0, j) for j in indices]
