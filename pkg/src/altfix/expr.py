"""Arithmetic expressions: tokenizer, recursive-descent parser, evaluator.

Expressions are small closed formulas such as ``x/2 + 1`` or ``ln(1+t)``.
Evaluation works on Python floats and on numpy arrays alike, so a parsed
map can be applied to a whole batch of sample points at once.

Grammar::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('+' | '-') unary | power
    power   := atom (('^' | '**') unary)?
    atom    := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .errors import AltfixError, DomainError

__all__ = [
    "ExprSyntaxError", "EvaluationError", "Expr", "Num", "Var", "Unary",
    "Binary", "Call", "parse_expression", "parse_expression_list",
    "evaluate_expression", "free_names", "to_source", "FUNCTIONS",
]


class ExprSyntaxError(AltfixError):
    def __init__(self, message, pos, expected=()):
        super().__init__(message)
        self.pos = pos
        self.expected = tuple(expected)


class EvaluationError(DomainError):
    pass


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    pos: int = field(default=0, compare=False)


Expr = Union[Num, Var, Unary, Binary, Call]

# name -> (min arity, max arity or None)
FUNCTIONS = {
    "abs": (1, 1),
    "sqrt": (1, 1),
    "ln": (1, 1),
    "exp": (1, 1),
    "min": (2, None),
    "max": (2, None),
}
CONSTANTS = {"pi": math.pi}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad,
                                  ("number", "name", "operator"))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def accept(self, value):
        if self.tok[0] == "op" and self.tok[1] == value:
            return self.advance()
        return None

    def expect(self, value):
        t = self.accept(value)
        if t is None:
            self.fail(f"expected {value!r}", (value,))
        return t

    def fail(self, message, expected):
        kind, value, pos = self.tok
        found = "end of expression" if kind == "end" else repr(value)
        raise ExprSyntaxError(f"{message}, found {found}", pos, expected)

    def expr(self):
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            _, op, pos = self.advance()
            node = Binary(op, node, self.term(), pos)
        return node

    def term(self):
        node = self.unary()
        while self.tok[0] == "op" and self.tok[1] in ("*", "/"):
            _, op, pos = self.advance()
            node = Binary(op, node, self.unary(), pos)
        return node

    def unary(self):
        if self.tok[0] == "op" and self.tok[1] in "+-":
            _, op, pos = self.advance()
            return Unary(op, self.unary(), pos)
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] in ("^", "**"):
            _, _, pos = self.advance()
            return Binary("^", base, self.unary(), pos)
        return base

    def atom(self):
        kind, value, pos = self.tok
        if kind == "num":
            self.advance()
            return Num(float(value), pos)
        if kind == "name":
            self.advance()
            if self.accept("("):
                if value not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {value!r}", pos,
                                          tuple(sorted(FUNCTIONS)))
                args = [self.expr()]
                while self.accept(","):
                    args.append(self.expr())
                self.expect(")")
                lo, hi = FUNCTIONS[value]
                if len(args) < lo or (hi is not None and len(args) > hi):
                    raise ExprSyntaxError(
                        f"{value}() takes {lo if hi == lo else f'at least {lo}'} "
                        f"argument(s), got {len(args)}", pos)
                return Call(value, tuple(args), pos)
            return Var(value, pos)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        self.fail("expected a number, name or '('", ("number", "name", "("))


def parse_expression(text: str) -> Expr:
    """Parse a single expression; raises :class:`ExprSyntaxError`."""
    p = _Parser(text)
    node = p.expr()
    if p.tok[0] != "end":
        p.fail("unexpected trailing input", ("operator", "end of expression"))
    return node


def parse_expression_list(text: str) -> tuple:
    """Parse ``e`` or ``(e1, e2, ...)`` into a tuple of expressions."""
    p = _Parser(text)
    if p.tok[0] == "op" and p.tok[1] == "(":
        # Distinguish a parenthesized scalar from a tuple by trying the tuple.
        save = p.i
        p.advance()
        items = [p.expr()]
        while p.accept(","):
            items.append(p.expr())
        if len(items) > 1:
            p.expect(")")
            if p.tok[0] != "end":
                p.fail("unexpected trailing input", ("end of expression",))
            return tuple(items)
        p.i = save
    node = p.expr()
    if p.tok[0] != "end":
        p.fail("unexpected trailing input", ("operator", "end of expression"))
    return (node,)


def free_names(node: Expr) -> set:
    if isinstance(node, Num):
        return set()
    if isinstance(node, Var):
        return set() if node.name in CONSTANTS else {node.name}
    if isinstance(node, Unary):
        return free_names(node.operand)
    if isinstance(node, Binary):
        return free_names(node.left) | free_names(node.right)
    out = set()
    for a in node.args:
        out |= free_names(a)
    return out


def _check(cond, message):
    if np.any(cond):
        raise EvaluationError(message)


def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name in env:
            return env[node.name]
        if node.name in CONSTANTS:
            return CONSTANTS[node.name]
        raise EvaluationError(f"unbound name {node.name!r}")
    if isinstance(node, Unary):
        v = _eval(node.operand, env)
        return -v if node.op == "-" else v
    if isinstance(node, Binary):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
        if node.op == "+":
            return np.add(a, b)
        if node.op == "-":
            return np.subtract(a, b)
        if node.op == "*":
            return np.multiply(a, b)
        if node.op == "/":
            _check(np.equal(b, 0), "division by zero")
            return np.divide(a, b)
        _check(np.logical_and(np.equal(a, 0), np.less(b, 0)), "zero raised to a negative power")
        _check(np.logical_and(np.less(a, 0), np.not_equal(np.floor(b), b)),
               "negative base with non-integer exponent")
        return np.power(np.asarray(a, dtype=float), b)
    args = [_eval(a, env) for a in node.args]
    name = node.name
    if name == "abs":
        return np.abs(args[0])
    if name == "sqrt":
        _check(np.less(args[0], 0), "sqrt of a negative value")
        return np.sqrt(args[0])
    if name == "ln":
        _check(np.less_equal(args[0], 0), "ln of a non-positive value")
        return np.log(args[0])
    if name == "exp":
        return np.exp(args[0])
    fold = np.minimum if name == "min" else np.maximum
    out = args[0]
    for a in args[1:]:
        out = fold(out, a)
    return out


def evaluate_expression(node: Expr, env: Mapping[str, object]):
    """Evaluate ``node`` with the bindings in ``env``.

    Values in ``env`` may be floats or numpy arrays (broadcast together).
    Returns a float for scalar inputs, otherwise an array.

    Raises
    ------
    EvaluationError
        On an unbound name, division by zero, ``ln`` of a non-positive value,
        ``sqrt`` of a negative value, or an undefined power.
    """
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = _eval(node, env)
    if np.ndim(out) == 0:
        return float(out)
    return np.asarray(out, dtype=float)


def to_source(node: Expr) -> str:
    """Canonical, fully parenthesized text that reparses to an equal tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        return f"({node.op}{to_source(node.operand)})"
    if isinstance(node, Binary):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
