"""Recursive-descent parser for the expression grammar.

Grammar: identifiers ``[A-Za-z_][A-Za-z0-9_]*``; decimal and rational
literals; binary ``+ - * / ^`` with the usual precedence and a
right-associative ``^`` whose exponent must fold to an exact rational;
unary ``-``; unary calls ``name(expr)``; insignificant whitespace.

Identifiers may additionally carry trailing primes (``f'``) when they
name declared opaque functions; that is how printed derivative symbols
round-trip.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Collection

from ..errors import ParseError, UnknownSymbolError
from .nodes import (
    BUILTIN_FUNCTIONS, Call, Expr, Rat, add, call, div, mul, neg, pow_, sym,
)

_TOKEN = re.compile(
    r"(?P<number>\d+(?:\.\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*'*)"
    r"|(?P<op>[-+*/^()])"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens, symbols: frozenset, functions: frozenset):
        self.tokens = tokens
        self.pos = 0
        self.symbols = symbols
        self.functions = functions

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str):
        kind, text, at = self.advance()
        if text != value:
            raise ParseError(f"expected {value!r}, found {text!r}", at)

    def parse_sum(self) -> Expr:
        node = self.parse_term()
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            rhs = self.parse_term()
            node = add(node, rhs if op == "+" else neg(rhs))
        return node

    def parse_term(self) -> Expr:
        node = self.parse_unary()
        while self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            rhs = self.parse_unary()
            node = mul(node, rhs) if op == "*" else div(node, rhs)
        return node

    def parse_unary(self) -> Expr:
        if self.peek()[1] == "-":
            self.advance()
            return neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Expr:
        base = self.parse_atom()
        if self.peek()[1] != "^":
            return base
        _, _, at = self.advance()
        exponent = self.parse_unary()  # right-associative
        if not isinstance(exponent, Rat):
            raise ParseError("exponent must reduce to an exact rational", at)
        return pow_(base, exponent.value)

    def parse_atom(self) -> Expr:
        kind, text, at = self.advance()
        if kind == "number":
            return Rat(Fraction(text))
        if kind == "name":
            base = text.rstrip("'")
            order = len(text) - len(base)
            if self.peek()[1] == "(":
                if base not in self.functions and base not in BUILTIN_FUNCTIONS:
                    raise UnknownSymbolError(text, at)
                if order and base not in self.functions:
                    raise UnknownSymbolError(text, at)
                self.advance()
                arg = self.parse_sum()
                self.expect(")")
                if base in BUILTIN_FUNCTIONS:
                    return call(base, arg)
                return Call(base, order, arg)
            if order or base not in self.symbols:
                raise UnknownSymbolError(text, at)
            return sym(base)
        if text == "(":
            node = self.parse_sum()
            self.expect(")")
            return node
        raise ParseError(f"unexpected token {text!r}" if text else "unexpected end of input", at)


def parse(text: str, allowed_symbols: Collection[str],
          functions: Collection[str] = ()) -> Expr:
    """Parse ``text`` against a fixed symbol set.

    ``functions`` lists opaque unary function names; built-in functions
    are always available.  The result is canonical, so printing and
    re-parsing reproduces it exactly.
    """
    parser = _Parser(_tokenize(text), frozenset(allowed_symbols), frozenset(functions))
    node = parser.parse_sum()
    kind, text_, at = parser.peek()
    if kind != "end":
        raise ParseError(f"trailing input {text_!r}", at)
    return node
