"""Recursive-descent parser for map expressions in ``x`` and ``mu``.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ('-')? power
    power  := atom ('^' integer)?
    atom   := number | 'x' | 'mu' | '(' expr ')'

Unary minus binds looser than ``^``, so ``-x^2`` is ``-(x^2)``.
Parsed trees are compiled to plain Python lambdas, which also accept numpy
arrays.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Union

from .errors import ParseError

__all__ = [
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "MapExpr",
    "parse_expression",
]

VARIABLES = ("x", "mu")

_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_INTEGER = re.compile(r"\d+")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


Node = Union[Num, Var, Neg, BinOp, Pow]


def _to_text(node: Node) -> str:
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        inner = _to_text(node.operand)
        if isinstance(node.operand, (Num, Var, Pow)):
            return f"-{inner}"
        return f"-({inner})"
    if isinstance(node, Pow):
        base = _to_text(node.base)
        if not isinstance(node.base, (Num, Var)):
            base = f"({base})"
        return f"{base}^{node.exponent}"
    return f"({_to_text(node.left)} {node.op} {_to_text(node.right)})"


def _to_python(node: Node) -> str:
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_to_python(node.operand)})"
    if isinstance(node, Pow):
        return f"({_to_python(node.base)}**{node.exponent})"
    return f"({_to_python(node.left)} {node.op} {_to_python(node.right)})"


def _variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return _variables(node.operand)
    if isinstance(node, Pow):
        return _variables(node.base)
    return _variables(node.left) | _variables(node.right)


@dataclass(frozen=True)
class MapExpr:
    """A parsed expression tree together with its source text."""

    ast: Node
    source: str = ""

    @property
    def uses_mu(self) -> bool:
        return "mu" in _variables(self.ast)

    def to_text(self) -> str:
        return _to_text(self.ast)

    def __str__(self) -> str:
        return self.source or self.to_text()

    def compile(self) -> Callable:
        """Return ``fn(x, mu=0.0)`` evaluating the tree.

        The body is generated from our own tree (never from user text), so
        ``eval`` here only ever sees numbers, ``x``, ``mu`` and operators.
        """
        code = f"lambda x, mu=0.0: {_to_python(self.ast)}"
        return eval(code, {"__builtins__": {}})

    def bind(self, mu: float | None = None) -> Callable[[float], float]:
        """Freeze ``mu`` and return a one-argument function of ``x``."""
        fn = self.compile()
        mu_value = 0.0 if mu is None else float(mu)
        if self.uses_mu and mu is None:
            raise ValueError(f"expression {self} uses mu; a value is required")
        return lambda x: fn(x, mu_value)

    def evaluate(self, x: float, mu: float = 0.0) -> float:
        return _evaluate(self.ast, float(x), float(mu))


def _evaluate(node: Node, x: float, mu: float) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x if node.name == "x" else mu
    if isinstance(node, Neg):
        return -_evaluate(node.operand, x, mu)
    if isinstance(node, Pow):
        return _evaluate(node.base, x, mu) ** node.exponent
    a = _evaluate(node.left, x, mu)
    b = _evaluate(node.right, x, mu)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    return a / b


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str, pos: int | None = None) -> ParseError:
        return ParseError(message, self.pos if pos is None else pos, self.text)

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Node:
        if not self.text.strip():
            raise self.error("empty expression", 0)
        node = self.expr()
        if self.peek():
            raise self.error(f"unexpected {self.peek()!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek() in ("*", "/"):
            op = self.text[self.pos]
            self.pos += 1
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.peek() == "-":
            self.pos += 1
            return Neg(self.power())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            self.skip()
            m = _INTEGER.match(self.text, self.pos)
            if m is None:
                raise self.error("exponent must be a non-negative integer literal")
            end = m.end()
            if end < len(self.text) and (self.text[end] in ".eE" or self.text[end].isalpha()):
                raise self.error("non-integer exponent", m.start())
            self.pos = end
            return Pow(base, int(m.group()))
        return base

    def atom(self) -> Node:
        c = self.peek()
        if not c:
            raise self.error("unexpected end of input")
        if c == "(":
            self.pos += 1
            node = self.expr()
            if self.peek() != ")":
                raise self.error("expected ')'")
            self.pos += 1
            return node
        m = _NUMBER.match(self.text, self.pos)
        if m is not None:
            self.pos = m.end()
            return Num(float(m.group()))
        m = _IDENT.match(self.text, self.pos)
        if m is not None:
            name = m.group()
            if name not in VARIABLES:
                raise self.error(f"unknown identifier {name!r}")
            self.pos = m.end()
            return Var(name)
        raise self.error(f"unexpected {c!r}")


def parse_expression(text: str) -> MapExpr:
    """Parse ``text`` into a :class:`MapExpr`.

    Raises :class:`ParseError` carrying the character offset of the problem.
    """
    return MapExpr(_Parser(text).parse(), text)
