"""Recursive-descent parser for the field-expression language.

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' int)?
    base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base

Offsets in errors are byte offsets into the UTF-8 encoding of the source.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .nodes import (
    FUNCTIONS,
    VARIABLES,
    Binary,
    Const,
    ExprError,
    Node,
    Param,
    Pow,
    Unary,
    Var,
    const_value,
)


class ExprLexError(ExprError):
    code = "lex_error"


class ExprSyntaxError(ExprError):
    code = "syntax_error"


class UnknownIdentifierError(ExprError):
    code = "unknown_identifier"

    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class ZeroDenominatorError(ExprSyntaxError):
    code = "zero_denominator"


_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_INT = re.compile(r"\d+")


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "op", "eof"
    text: str
    offset: int


def tokenize(src: str) -> list[Token]:
    tokens = []
    i, n = 0, len(src)
    boff = 0  # byte offset of src[i]
    while i < n:
        ch = src[i]
        if ch.isspace():
            boff += len(ch.encode())
            i += 1
            continue
        m = _NUMBER.match(src, i)
        if m and (ch.isdigit() or ch == "."):
            tokens.append(Token("num", m.group(), boff))
        else:
            m = _IDENT.match(src, i)
            if m:
                tokens.append(Token("ident", m.group(), boff))
            elif ch in "+-*/^()":
                tokens.append(Token("op", ch, boff))
                boff += 1
                i += 1
                continue
            else:
                raise ExprLexError(f"unexpected character {ch!r}", boff)
        boff += len(m.group().encode())
        i = m.end()
    tokens.append(Token("eof", "", boff))
    return tokens


class _Parser:
    def __init__(self, src: str, params: frozenset[str]):
        self.tokens = tokenize(src)
        self.pos = 0
        self.params = params

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind != "op":
            raise ExprSyntaxError(f"expected {text!r}, found {self._describe()}", self.tok.offset)
        return self.advance()

    def _describe(self) -> str:
        return "end of input" if self.tok.kind == "eof" else repr(self.tok.text)

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "eof":
            raise ExprSyntaxError(f"unexpected {self._describe()}", self.tok.offset)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op_tok = self.advance()
            rhs = self.factor()
            if op_tok.text == "/" and const_value(rhs) == 0:
                raise ZeroDenominatorError("division by a constant zero", op_tok.offset)
            node = Binary(op_tok.text, node, rhs)
        return node

    def factor(self) -> Node:
        node = self.base()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            tok = self.tok
            if tok.kind != "num" or not _INT.fullmatch(tok.text):
                raise ExprSyntaxError(f"exponent must be an integer literal, found {self._describe()}", tok.offset)
            self.advance()
            node = Pow(node, int(tok.text))
        return node

    def base(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Unary("neg", self.base())
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "ident":
            self.advance()
            name = tok.text
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(name, arg)
            if name in VARIABLES:
                return Var(name)
            if name in self.params:
                return Param(name)
            raise UnknownIdentifierError(name, tok.offset)
        raise ExprSyntaxError(f"unexpected {self._describe()}", tok.offset)


def parse(src: str, params: Iterable[str] = ()) -> Node:
    """Parse ``src``; identifiers other than q1, q2, q3, t and the function
    names must appear in ``params``."""
    if not isinstance(src, str):
        raise ExprSyntaxError(f"expression must be text, got {type(src).__name__}", 0)
    return _Parser(src, frozenset(params)).parse()
