"""Coefficient-function expressions over chart coordinates.

Grammar (whitespace insignificant)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | base ('^' ['-'] natural)?
    base   := number | ident | '(' expr ')' | func '(' expr ')'
    ident  := 'x' natural          (1-based coordinate index)
    func   := exp | sin | cos | ln

A negative integer exponent is rewritten as ``1 / base^n`` at parse time, so
every ``Pow`` node carries a nonnegative exponent and every denominator is an
explicit ``Div`` node (see :meth:`Expression.guards`).

Expressions evaluate on plain floats and on :class:`~scl.jet.Jet` values with
the same code path.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .jet import Jet, jcos, jet_variables, jexp, jlog, jsin

MAX_ORDER = 6

__all__ = [
    "Expression",
    "Const",
    "Var",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Neg",
    "Func",
    "ExprSyntaxError",
    "EvaluationError",
    "DivisionByZeroError",
    "DomainError",
    "MAX_ORDER",
    "parse",
    "as_expression",
    "eval_scalar",
    "eval_jet",
    "partial",
]


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, source: str = "", position: int = 0):
        self.source = source
        self.position = position
        marker = f"\n  {source}\n  {' ' * position}^" if source else ""
        super().__init__(f"{message} (at column {position + 1}){marker}")


class EvaluationError(ArithmeticError):
    pass


class DivisionByZeroError(EvaluationError, ZeroDivisionError):
    pass


class DomainError(EvaluationError, ValueError):
    pass


def _lift(x) -> "Expression":
    if isinstance(x, Expression):
        return x
    if isinstance(x, (int, float, np.floating, np.integer)):
        return Const(float(x))
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


class Expression:
    """Base class of the immutable expression tree."""

    __slots__ = ()

    def evaluate(self, values: Sequence):
        raise NotImplementedError

    def children(self) -> tuple["Expression", ...]:
        return ()

    def variables(self) -> frozenset[int]:
        out: set[int] = set()
        for c in self.children():
            out |= c.variables()
        return frozenset(out)

    def guards(self) -> list["Expression"]:
        """Denominators that must not vanish where the expression is used."""
        out = []
        for c in self.children():
            out.extend(c.guards())
        return out

    def is_zero(self) -> bool:
        return isinstance(self, Const) and self.value == 0.0

    # operator sugar for building fields programmatically
    def __add__(self, o):
        return Add(self, _lift(o))

    def __radd__(self, o):
        return Add(_lift(o), self)

    def __sub__(self, o):
        return Sub(self, _lift(o))

    def __rsub__(self, o):
        return Sub(_lift(o), self)

    def __mul__(self, o):
        return Mul(self, _lift(o))

    def __rmul__(self, o):
        return Mul(_lift(o), self)

    def __truediv__(self, o):
        return Div(self, _lift(o))

    def __rtruediv__(self, o):
        return Div(_lift(o), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, n: int):
        if n < 0:
            return Div(Const(1.0), Pow(self, -n))
        return Pow(self, n)


@dataclass(frozen=True, eq=True)
class Const(Expression):
    value: float

    def evaluate(self, values):
        return self.value

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True, eq=True)
class Var(Expression):
    index: int  # 0-based

    def evaluate(self, values):
        return values[self.index]

    def variables(self):
        return frozenset({self.index})

    def __str__(self):
        return f"x{self.index + 1}"


@dataclass(frozen=True, eq=True)
class Add(Expression):
    left: Expression
    right: Expression

    def children(self):
        return (self.left, self.right)

    def evaluate(self, values):
        return self.left.evaluate(values) + self.right.evaluate(values)

    def __str__(self):
        return f"({self.left} + {self.right})"


@dataclass(frozen=True, eq=True)
class Sub(Expression):
    left: Expression
    right: Expression

    def children(self):
        return (self.left, self.right)

    def evaluate(self, values):
        return self.left.evaluate(values) - self.right.evaluate(values)

    def __str__(self):
        return f"({self.left} - {self.right})"


@dataclass(frozen=True, eq=True)
class Mul(Expression):
    left: Expression
    right: Expression

    def children(self):
        return (self.left, self.right)

    def evaluate(self, values):
        return self.left.evaluate(values) * self.right.evaluate(values)

    def __str__(self):
        return f"{self.left}*{self.right}"


@dataclass(frozen=True, eq=True)
class Div(Expression):
    left: Expression
    right: Expression

    def children(self):
        return (self.left, self.right)

    def guards(self):
        return [self.right] + super().guards()

    def evaluate(self, values):
        num = self.left.evaluate(values)
        den = self.right.evaluate(values)
        try:
            return num / den
        except ZeroDivisionError:
            raise DivisionByZeroError(f"denominator {self.right} vanishes") from None

    def __str__(self):
        return f"{self.left}/({self.right})"


@dataclass(frozen=True, eq=True)
class Pow(Expression):
    base: Expression
    exponent: int

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("Pow exponents are nonnegative; use Div for reciprocals")

    def children(self):
        return (self.base,)

    def evaluate(self, values):
        b = self.base.evaluate(values)
        if isinstance(b, Jet):
            return b ** self.exponent
        return float(b) ** self.exponent

    def __str__(self):
        return f"({self.base})^{self.exponent}"


@dataclass(frozen=True, eq=True)
class Neg(Expression):
    operand: Expression

    def children(self):
        return (self.operand,)

    def evaluate(self, values):
        return -self.operand.evaluate(values)

    def __str__(self):
        return f"-({self.operand})"


_SCALAR_FUNCS = {"exp": math.exp, "sin": math.sin, "cos": math.cos, "ln": math.log}
_JET_FUNCS = {"exp": jexp, "sin": jsin, "cos": jcos, "ln": jlog}


@dataclass(frozen=True, eq=True)
class Func(Expression):
    name: str
    arg: Expression

    def __post_init__(self):
        if self.name not in _SCALAR_FUNCS:
            raise ValueError(f"unknown function {self.name!r}")

    def children(self):
        return (self.arg,)

    def evaluate(self, values):
        a = self.arg.evaluate(values)
        if isinstance(a, Jet):
            if self.name == "ln" and np.any(a.coeffs[..., 0] <= 0):
                raise DomainError(f"ln of nonpositive value {a.value}")
            return _JET_FUNCS[self.name](a)
        if self.name == "ln" and a <= 0:
            raise DomainError(f"ln of nonpositive value {a}")
        return _SCALAR_FUNCS[self.name](a)

    def __str__(self):
        return f"{self.name}({self.arg})"


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, source: str, dim: int, aliases: Mapping[str, int] | None):
        self.src = source
        self.dim = dim
        self.aliases = dict(aliases or {})
        self.toks = []
        pos = 0
        while pos < len(source):
            if source[pos:].strip() == "":
                break
            m = _TOKEN.match(source, pos)
            if not m or m.end() == pos:
                bad = pos + len(source[pos:]) - len(source[pos:].lstrip())
                raise ExprSyntaxError(f"unexpected character {source[bad]!r}", source, bad)
            kind = m.lastgroup
            start = m.start(kind)
            self.toks.append((kind, m.group(kind), start))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.src))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, op):
        kind, text, pos = self.take()
        if text != op:
            found = "end of input" if kind is None else repr(text)
            raise ExprSyntaxError(f"expected {op!r}, found {found}", self.src, pos)

    def parse(self) -> Expression:
        if not self.toks:
            raise ExprSyntaxError("empty expression", self.src, 0)
        e = self.expr()
        kind, text, pos = self.peek()
        if kind is not None:
            raise ExprSyntaxError(f"unexpected {text!r}", self.src, pos)
        return e

    def expr(self):
        left = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self):
        left = self.factor()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            right = self.factor()
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def factor(self):
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.factor())
        base = self.base()
        if self.peek()[1] == "^":
            self.take()
            negative = False
            if self.peek()[1] == "-":
                self.take()
                negative = True
            kind, text, pos = self.take()
            if kind != "num" or not text.isdigit():
                raise ExprSyntaxError("exponent must be a natural number", self.src, pos)
            n = int(text)
            return Div(Const(1.0), Pow(base, n)) if negative else Pow(base, n)
        return base

    def base(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text in _SCALAR_FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(text, arg)
            if text in self.aliases:
                idx = self.aliases[text]
            elif re.fullmatch(r"x\d+", text):
                idx = int(text[1:]) - 1
                if idx < 0:
                    raise ExprSyntaxError("coordinates are numbered from x1", self.src, pos)
            else:
                raise ExprSyntaxError(f"unknown identifier {text!r}", self.src, pos)
            if idx >= self.dim:
                raise ExprSyntaxError(
                    f"variable {text} out of range for dimension {self.dim}", self.src, pos
                )
            return Var(idx)
        if text == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind is None else repr(text)
        raise ExprSyntaxError(f"expected a number, variable or '(', found {found}", self.src, pos)


def parse(source: str, dim: int, aliases: Mapping[str, int] | None = None) -> Expression:
    """Parse `source` into an Expression over `dim` chart coordinates.

    `aliases` optionally maps extra identifier names (e.g. ``t``) to 0-based
    coordinate indices.
    """
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    return _Parser(source, dim, aliases).parse()


def as_expression(e, dim: int, aliases: Mapping[str, int] | None = None) -> Expression:
    if isinstance(e, Expression):
        if e.variables() and max(e.variables()) >= dim:
            raise ValueError(f"expression {e} uses a variable beyond dimension {dim}")
        return e
    if isinstance(e, str):
        return parse(e, dim, aliases)
    return _lift(e)


def _check_point(e: Expression, point) -> list[float]:
    pt = [float(v) for v in point]
    used = e.variables()
    if used and max(used) >= len(pt):
        raise ValueError(f"point has {len(pt)} coordinates but expression uses x{max(used) + 1}")
    return pt


def eval_scalar(e: Expression, point) -> float:
    pt = _check_point(e, point)
    try:
        return float(e.evaluate(pt))
    except ZeroDivisionError as exc:
        if isinstance(exc, DivisionByZeroError):
            raise
        raise DivisionByZeroError(str(exc)) from None
    except OverflowError as exc:
        raise EvaluationError(str(exc)) from None


def eval_jet(e: Expression, point, order: int, max_order: int = MAX_ORDER) -> Jet:
    """Taylor jet of `e` at `point`, truncated at `order`."""
    if order > max_order:
        raise ValueError(f"jet order {order} exceeds the configured maximum {max_order}")
    pt = _check_point(e, point)
    xs = jet_variables(pt, order)
    try:
        out = e.evaluate(xs)
    except ZeroDivisionError as exc:
        if isinstance(exc, DivisionByZeroError):
            raise
        raise DivisionByZeroError(str(exc)) from None
    if not isinstance(out, Jet):
        return Jet.constant(out, len(pt), order, pt)
    return out


def partial(e: Expression, point, alpha: Sequence[int], max_order: int = MAX_ORDER) -> float:
    """d^alpha e at `point`."""
    return eval_jet(e, point, sum(alpha), max_order).partial(alpha)
