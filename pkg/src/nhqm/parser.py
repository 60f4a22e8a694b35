"""
Text grammar for operator expressions.

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER ['i'] | 'i' | 'x' | 'p' | '(' expr ')'
             | ('abs' | 'exp') '(' expr ')' | 'ipow' '(' expr ',' expr ')'

Exponents and the second argument of ``ipow`` must be real constants; ``^``
takes integer exponents only. ``p`` may be multiplied by x-dependent factors
from the left only and its total degree in a product is at most 2.
"""

from __future__ import annotations

import re

from .errors import ParseError
from .expr import (
    ONE, Add, Div, Func, IPow, Mul, Neg, Node, Num, OperatorExpr, Pow, Sub, X,
    fold, is_constant,
)

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>i(?![A-Za-z_]))?"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),−·×]))"
)

_OP_ALIASES = {"−": "-", "·": "*", "×": "*"}


class _Tok:
    __slots__ = ("kind", "text", "pos", "value")

    def __init__(self, kind, text, pos, value=None):
        self.kind, self.text, self.pos, self.value = kind, text, pos, value

    def __repr__(self):
        return f"_Tok({self.kind}, {self.text!r}, {self.pos})"


def tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[bad]!r}", bad, "a number, name or operator")
        if m.group("num") is not None:
            v = float(m.group("num"))
            value = complex(0, v) if m.group("imag") else complex(v)
            toks.append(_Tok("num", m.group(0).strip(), m.start("num"), value))
        elif m.group("name") is not None:
            toks.append(_Tok("name", m.group("name"), m.start("name")))
        else:
            op = m.group("op")
            toks.append(_Tok("op", _OP_ALIASES.get(op, op), m.start("op")))
        pos = m.end()
    toks.append(_Tok("end", "", n))
    return toks


# An operator polynomial is a dict {order: coefficient node}.

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str):
        t = self.tok
        if t.kind != "op" or t.text != text:
            raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.pos, repr(text))
        return self.advance()

    def parse(self) -> dict:
        if self.tok.kind == "end":
            raise ParseError("empty expression", 0, "an expression")
        val = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.pos, "operator or end of input")
        return val

    def expr(self) -> dict:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance()
            right = self.term()
            left = _padd(left, right, sub=(op.text == "-"))
        return left

    def term(self) -> dict:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance()
            right = self.unary()
            left = _pmul(left, right, op.pos) if op.text == "*" else _pdiv(left, right, op.pos)
        return left

    def unary(self) -> dict:
        if self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance()
            val = self.unary()
            return val if op.text == "+" else {k: fold(Neg(c)) for k, c in val.items()}
        return self.power()

    def power(self) -> dict:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            op = self.advance()
            epos = self.tok.pos
            e = self._constant(self.unary(), epos, "an integer exponent")
            if e.imag != 0 or e.real != int(e.real):
                raise ParseError("exponent must be an integer", epos, "an integer exponent")
            return _ppow(base, int(e.real), op.pos)
        return base

    def atom(self) -> dict:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return {0: Num(t.value)}
        if t.kind == "name":
            self.advance()
            name = t.text
            if name == "x":
                return {0: X}
            if name == "p":
                return {1: ONE}
            if name == "i":
                return {0: Num(1j)}
            if name in ("abs", "exp"):
                self.expect("(")
                arg = self._scalar(self.expr(), t.pos)
                self.expect(")")
                return {0: Func(name, arg)}
            if name == "ipow":
                self.expect("(")
                arg = self._scalar(self.expr(), t.pos)
                self.expect(",")
                npos = self.tok.pos
                nu = self._constant(self.expr(), npos, "a real exponent")
                if nu.imag != 0:
                    raise ParseError("ipow exponent must be real", npos, "a real exponent")
                self.expect(")")
                return {0: IPow(arg, float(nu.real))}
            raise ParseError(f"unknown name {name!r}", t.pos, "x, p, i, abs, exp or ipow")
        if t.kind == "op" and t.text == "(":
            self.advance()
            val = self.expr()
            self.expect(")")
            return val
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.pos, "a number, symbol or '('")

    def _scalar(self, val: dict, pos: int) -> Node:
        if any(k > 0 for k in val):
            raise ParseError("p may not appear inside a function argument", pos, "an expression in x only")
        return val.get(0, Num(0j))

    def _constant(self, val: dict, pos: int, what: str) -> complex:
        node = self._scalar(val, pos)
        if not isinstance(node, Num):
            raise ParseError("expected a numeric constant", pos, what)
        return node.value


def _padd(a: dict, b: dict, sub: bool = False) -> dict:
    out = dict(a)
    for k, c in b.items():
        if k in out:
            out[k] = fold(Sub(out[k], c) if sub else Add(out[k], c))
        else:
            out[k] = fold(Neg(c)) if sub else c
    return out


def _pmul(a: dict, b: dict, pos: int) -> dict:
    out: dict = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            if ka > 0 and not is_constant(cb):
                raise ParseError("x-dependent factor to the right of p", pos,
                                 "coefficients written to the left of p")
            k = ka + kb
            if k > 2:
                raise ParseError("p-degree exceeds 2", pos, "at most p^2")
            out = _padd(out, {k: fold(Mul(ca, cb))})
    return out


def _pdiv(a: dict, b: dict, pos: int) -> dict:
    if any(k > 0 for k in b):
        raise ParseError("cannot divide by an expression containing p", pos, "a divisor in x only")
    cb = b.get(0, Num(0j))
    out = {}
    for k, ca in a.items():
        if k > 0 and not is_constant(cb):
            raise ParseError("x-dependent factor to the right of p", pos,
                             "coefficients written to the left of p")
        out[k] = fold(Div(ca, cb))
    return out


def _ppow(a: dict, n: int, pos: int) -> dict:
    if set(a) <= {0}:
        return {0: fold(Pow(a.get(0, Num(0j)), n))}
    if n < 0:
        raise ParseError("negative power of an operator containing p", pos, "a non-negative exponent")
    out = {0: ONE}
    for _ in range(n):
        out = _pmul(out, a, pos)
    return out


def parse_expression(text: str) -> OperatorExpr:
    """Parse operator text such as ``"p^2 + (2i/x)*p - 2/x^2 + x^2"``."""
    return OperatorExpr.from_dict(_Parser(text).parse())


def parse_scalar(text: str) -> Node:
    """Parse an expression that must not contain p (weights, transforms)."""
    op = parse_expression(text)
    if op.max_order > 0:
        raise ParseError("p is not allowed here", 0, "an expression in x only")
    return op.coefficient(0)
