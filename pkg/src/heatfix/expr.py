"""Expression parser and evaluator for map definitions.

Grammar: + - * / ^ with usual precedence (^ binds tightest, right
associative, integer exponents), unary minus, parentheses, the function
whitelist sin cos exp log sqrt, decimal/rational literals, and the variables
x, y (aliases x1, x2).  Numeric evaluation is numpy-transparent, so whole
grids evaluate at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

VARIABLES = {"x": 0, "x1": 0, "y": 1, "x2": 1}
FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")

_NUMPY_FN = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
}


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class DomainError(ValueError):
    def __init__(self, message: str, offset: int | None = None):
        at = "" if offset is None else f" (at offset {offset})"
        super().__init__(f"{message}{at}")
        self.offset = offset


@dataclass
class Token:
    kind: str  # 'num' | 'ident' | 'op' | 'lparen' | 'rparen' | 'end'
    text: str
    offset: int


def tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seendot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seendot)):
                if text[j] == ".":
                    seendot = True
                j += 1
            tokens.append(Token("num", text[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("ident", text[i:j], i))
            i = j
            continue
        if c in "+-*/^":
            tokens.append(Token("op", c, i))
            i += 1
            continue
        if c == "(":
            tokens.append(Token("lparen", c, i))
            i += 1
            continue
        if c == ")":
            tokens.append(Token("rparen", c, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(Token("end", "", n))
    return tokens


# -- AST ---------------------------------------------------------------------


@dataclass
class Num:
    value: Fraction
    offset: int = 0


@dataclass
class Var:
    index: int
    name: str
    offset: int = 0


@dataclass
class Neg:
    arg: object
    offset: int = 0


@dataclass
class BinOp:
    op: str
    left: object
    right: object
    offset: int = 0


@dataclass
class Pow:
    base: object
    exponent: int
    offset: int = 0


@dataclass
class Call:
    fn: str
    arg: object
    offset: int = 0


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            want = {"rparen": "')'"}.get(kind, kind)
            raise ParseError(f"expected {want}, found {t.text or 'end of input'}", t.offset)
        return self.advance()

    def parse_expression(self):
        node = self.parse_term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance()
            rhs = self.parse_term()
            node = BinOp(op.text, node, rhs, op.offset)
        return node

    def parse_term(self):
        node = self.parse_unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance()
            rhs = self.parse_unary()
            node = BinOp(op.text, node, rhs, op.offset)
        return node

    def parse_unary(self):
        t = self.peek()
        if t.kind == "op" and t.text == "-":
            self.advance()
            return Neg(self.parse_unary(), t.offset)
        if t.kind == "op" and t.text == "+":
            self.advance()
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        t = self.peek()
        if t.kind == "op" and t.text == "^":
            self.advance()
            exponent = self.parse_exponent()
            return Pow(base, exponent, t.offset)
        return base

    def parse_exponent(self) -> int:
        sign = 1
        t = self.peek()
        if t.kind == "op" and t.text in "+-":
            self.advance()
            sign = -1 if t.text == "-" else 1
            t = self.peek()
        if t.kind == "num" and "." not in t.text:
            self.advance()
            return sign * int(t.text)
        if t.kind == "lparen":
            self.advance()
            inner = self.parse_exponent()
            self.expect("rparen")
            return sign * inner
        raise ParseError("exponent must be an integer", t.offset)

    def parse_atom(self):
        t = self.advance()
        if t.kind == "num":
            if "." in t.text:
                return Num(Fraction(t.text), t.offset)
            return Num(Fraction(int(t.text)), t.offset)
        if t.kind == "ident":
            if t.text in VARIABLES:
                return Var(VARIABLES[t.text], t.text, t.offset)
            if t.text in FUNCTIONS:
                self.expect("lparen")
                arg = self.parse_expression()
                self.expect("rparen")
                return Call(t.text, arg, t.offset)
            raise ParseError(f"unknown identifier {t.text!r}", t.offset)
        if t.kind == "lparen":
            node = self.parse_expression()
            self.expect("rparen")
            return node
        raise ParseError(
            f"expected a value, found {t.text or 'end of input'}", t.offset
        )


def parse(text: str):
    tokens = tokenize(text)
    p = _Parser(tokens)
    node = p.parse_expression()
    p.expect("end")
    return node


def unparse(node) -> str:
    if isinstance(node, Num):
        v = node.value
        return str(v) if v.denominator == 1 else f"({v.numerator} / {v.denominator})"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{unparse(node.arg)})"
    if isinstance(node, BinOp):
        return f"({unparse(node.left)} {node.op} {unparse(node.right)})"
    if isinstance(node, Pow):
        return f"({unparse(node.base)} ^ {node.exponent})"
    if isinstance(node, Call):
        return f"{node.fn}({unparse(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node, point):
    """Numeric value at a point (scalars or numpy arrays per variable)."""
    if isinstance(node, Num):
        return float(node.value)
    if isinstance(node, Var):
        return point[node.index]
    if isinstance(node, Neg):
        return -evaluate(node.arg, point)
    if isinstance(node, BinOp):
        l = evaluate(node.left, point)
        r = evaluate(node.right, point)
        if node.op == "+":
            return l + r
        if node.op == "-":
            return l - r
        if node.op == "*":
            return l * r
        return l / r
    if isinstance(node, Pow):
        base = evaluate(node.base, point)
        with np.errstate(divide="ignore"):
            return base ** node.exponent if node.exponent >= 0 else 1.0 / base ** (-node.exponent)
    if isinstance(node, Call):
        return _NUMPY_FN[node.fn](evaluate(node.arg, point))
    raise TypeError(f"not an expression node: {node!r}")
