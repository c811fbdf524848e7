"""Text form of lattice expressions.

Grammar (``*`` binds tighter than ``+``, ``+`` is left associative)::

    expr    := term ("+" term)*
    term    := NUMBER "*" term | primary
    primary := "gen(" INT ")"
             | "sup(" expr "," expr ")" | "inf(" expr "," expr ")"
             | "apply(" NAME ";" expr ("," expr)* ")"
             | "(" expr ")"

``NAME`` is a function name as accepted by :func:`parse_mean_spec`.
:func:`format_expr` prints an expression so that parsing the text gives
back an equal tree.
"""

from __future__ import annotations

import re

from .completion.expr import Add, Apply, Expr, Gen, Inf, Scale, Sup
from .errors import ParseError
from .names import parse_mean_spec

__all__ = ["parse_expr", "format_expr", "parse_mean_spec"]

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_INT = re.compile(r"\d+")
_WORD = re.compile(r"[a-z]+")


class _Parser:
    def __init__(self, text: str):
        self.s = text
        self.pos = 0

    def skip(self):
        while self.pos < len(self.s) and self.s[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.s[self.pos] if self.pos < len(self.s) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            found = repr(self.s[self.pos]) if self.pos < len(self.s) else "end of input"
            raise ParseError(f"expected {ch!r}, found {found}", self.pos)
        self.pos += 1

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek():
            raise ParseError(f"unexpected {self.s[self.pos]!r}", self.pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek() == "+":
            self.pos += 1
            e = Add(e, self.term())
        return e

    def term(self) -> Expr:
        ch = self.peek()
        if ch and ch in "0123456789.+-":
            m = _NUMBER.match(self.s, self.pos)
            if not m:
                raise ParseError("malformed number", self.pos)
            self.pos = m.end()
            self.expect("*")
            return Scale(float(m.group()), self.term())
        return self.primary()

    def primary(self) -> Expr:
        ch = self.peek()
        start = self.pos
        if ch == "(":
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        m = _WORD.match(self.s, self.pos)
        if not m:
            found = repr(ch) if ch else "end of input"
            raise ParseError(f"expected an expression, found {found}", self.pos)
        word = m.group()
        self.pos = m.end()
        if word == "gen":
            self.expect("(")
            self.skip()
            im = _INT.match(self.s, self.pos)
            if not im:
                raise ParseError("expected a generator index", self.pos)
            self.pos = im.end()
            self.expect(")")
            return Gen(int(im.group()))
        if word in ("sup", "inf"):
            self.expect("(")
            left = self.expr()
            self.expect(",")
            right = self.expr()
            self.expect(")")
            return Sup(left, right) if word == "sup" else Inf(left, right)
        if word == "apply":
            return self.apply(start)
        raise ParseError(f"unknown keyword {word!r}", start)

    def apply(self, start: int) -> Expr:
        self.expect("(")
        self.skip()
        semi = self.s.find(";", self.pos)
        if semi < 0:
            raise ParseError("expected ';' after function name", len(self.s))
        raw = self.s[self.pos:semi]
        name = raw.strip()
        name_at = self.pos + (len(raw) - len(raw.lstrip()))
        try:
            fn = parse_mean_spec(name)
        except ParseError as exc:
            raise ParseError(str(exc).split(": ", 1)[1],
                             name_at + exc.position) from None
        self.pos = semi + 1
        args = [self.expr()]
        while self.peek() == ",":
            self.pos += 1
            args.append(self.expr())
        self.expect(")")
        if len(args) != fn.arity:
            raise ParseError(
                f"{fn.name} takes {fn.arity} arguments, got {len(args)}", start)
        return Apply(fn.name, tuple(args))


def parse_expr(text: str) -> Expr:
    """Parse expression text into an :class:`Expr` tree.

    Raises:
        ParseError: syntax errors, unknown names and arity mismatches, with
            the offset where the problem was found.
        ValueError: a well-formed function name with invalid parameters.
    """
    return _Parser(text).parse()


def format_expr(e: Expr) -> str:
    """Inverse of :func:`parse_expr`."""
    if isinstance(e, Gen):
        return f"gen({e.index})"
    if isinstance(e, Scale):
        inner = format_expr(e.arg)
        if isinstance(e.arg, Add):
            inner = f"({inner})"
        return f"{e.coef!r} * {inner}"
    if isinstance(e, Add):
        right = format_expr(e.right)
        if isinstance(e.right, Add):
            right = f"({right})"
        return f"{format_expr(e.left)} + {right}"
    if isinstance(e, (Sup, Inf)):
        word = "sup" if isinstance(e, Sup) else "inf"
        return f"{word}({format_expr(e.left)}, {format_expr(e.right)})"
    if isinstance(e, Apply):
        return f"apply({e.name}; {', '.join(format_expr(a) for a in e.args)})"
    raise TypeError(f"not an expression node: {e!r}")
