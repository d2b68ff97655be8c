"""Text format for systems.

Statements are separated by ``;`` or newlines::

    dim = 2
    f = [-x1*x2^2, 0]
    g = [0, 1]
    V = x1^2 + x2^2
    theta = 0          # optional

Expressions use ``+ - * ^``, parentheses and real literals over ``x1..xn``.
``^`` takes a nonnegative integer literal and binds tighter than unary minus,
so ``-x1^2`` is ``-(x1^2)``.  ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .polynomial import PolyField, PolyScalar
from .system import System

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*^()\[\],;=])
""", re.VERBOSE)

_KEYS = ("dim", "f", "g", "V", "theta")


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"line {line}, column {column}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    """Newlines inside ``()`` or ``[]`` are whitespace; elsewhere they end a statement."""
    out, pos, line, line_start, depth = [], 0, 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            if depth == 0:
                out.append(Token("sep", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind == "op" and m.group() == ";":
            out.append(Token("sep", ";", line, col))
        elif kind not in ("ws", "comment"):
            if kind == "op" and m.group() in "([":
                depth += 1
            elif kind == "op" and m.group() in ")]":
                depth = max(0, depth - 1)
            out.append(Token(kind, m.group(), line, col))
        pos = m.end()
    out.append(Token("end", "", line, pos - line_start + 1))
    return out


# expression trees: ("num", value, tok) | ("var", name, tok) | (op, left, right, tok) | ("neg", arg, tok)

class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.tok
        if t.text != text:
            found = "end of input" if t.kind == "end" else repr(t.text.replace("\n", "newline"))
            raise ParseError(f"expected {text!r}, found {found}", t.line, t.column)
        return self.advance()

    def statements(self):
        stmts = []
        while True:
            while self.tok.kind == "sep":
                self.advance()
            if self.tok.kind == "end":
                return stmts
            key = self.tok
            if key.kind != "name" or key.text not in _KEYS:
                raise ParseError(f"expected one of {', '.join(_KEYS)}, found {key.text!r}",
                                 key.line, key.column)
            self.advance()
            self.expect("=")
            if key.text in ("f", "g"):
                self.expect("[")
                items = [self.expr()]
                while self.tok.text == ",":
                    self.advance()
                    items.append(self.expr())
                self.expect("]")
                value = items
            else:
                value = self.expr()
            stmts.append((key, value))
            if self.tok.kind not in ("sep", "end"):
                t = self.tok
                raise ParseError(f"unexpected {t.text!r} after statement", t.line, t.column)

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance()
            node = (op.text, node, self.term(), op)
        return node

    def term(self):
        node = self.unary()
        while self.tok.text == "*":
            op = self.advance()
            node = ("*", node, self.unary(), op)
        return node

    def unary(self):
        if self.tok.text in ("-", "+"):
            op = self.advance()
            arg = self.unary()
            return ("neg", arg, op) if op.text == "-" else arg
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.text == "^":
            op = self.advance()
            t = self.tok
            if t.kind != "num" or not t.text.isdigit():
                raise ParseError("exponent must be a nonnegative integer literal", t.line, t.column)
            self.advance()
            return ("^", base, int(t.text), op)
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return ("num", float(t.text), t)
        if t.kind == "name":
            self.advance()
            return ("var", t.text, t)
        if t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if t.kind == "end" else repr(t.text.replace("\n", "newline"))
        raise ParseError(f"expected an expression, found {found}", t.line, t.column)


def _build(node, dim: int) -> PolyScalar:
    kind = node[0]
    if kind == "num":
        return PolyScalar.constant(dim, node[1])
    if kind == "var":
        name, tok = node[1], node[2]
        m = re.fullmatch(r"x([1-9]\d*)", name)
        if m is None or int(m.group(1)) > dim:
            raise ParseError(f"unknown identifier {name!r} (variables are x1..x{dim})",
                             tok.line, tok.column)
        return PolyScalar.variable(dim, int(m.group(1)) - 1)
    if kind == "neg":
        return -_build(node[1], dim)
    if kind == "^":
        return _build(node[1], dim) ** node[2]
    left, right = _build(node[1], dim), _build(node[2], dim)
    if kind == "+":
        return left + right
    if kind == "-":
        return left - right
    return left * right


def _position(node) -> Token:
    return node[-1]


def parse_system_spec(text: str, name: str = "") -> System:
    """Parse the text format into a :class:`System`."""
    stmts = _Parser(tokenize(text)).statements()
    seen: dict[str, tuple[Token, object]] = {}
    for key, value in stmts:
        if key.text in seen:
            raise ParseError(f"{key.text} is assigned twice", key.line, key.column)
        seen[key.text] = (key, value)
    for req in ("dim", "f", "g", "V"):
        if req not in seen:
            last = stmts[-1][0] if stmts else Token("end", "", 1, 1)
            raise ParseError(f"missing assignment to {req}", last.line, last.column)

    dim_tok, dim_node = seen["dim"]
    if dim_node[0] != "num" or not dim_node[1].is_integer() or dim_node[1] < 1:
        t = _position(dim_node)
        raise ParseError("dim must be a positive integer", t.line, t.column)
    dim = int(dim_node[1])

    fields = {}
    for key in ("f", "g"):
        tok, items = seen[key]
        if len(items) != dim:
            raise ParseError(f"{key} has {len(items)} component{'s' if len(items) != 1 else ''}, dim={dim}",
                             tok.line, tok.column)
        fields[key] = PolyField([_build(it, dim) for it in items])
    V = _build(seen["V"][1], dim)
    theta = _build(seen["theta"][1], dim) if "theta" in seen else None
    try:
        return System(fields["f"], fields["g"], V, name=name, theta=theta)
    except ValueError as exc:
        raise ParseError(str(exc), dim_tok.line, dim_tok.column) from None


def format_system(sys: System) -> str:
    """Canonical text for ``sys``; :func:`parse_system_spec` reads it back unchanged."""
    lines = [
        f"dim = {sys.dimension}",
        "f = [" + ", ".join(c.to_expr() for c in sys.f.components) + "]",
        "g = [" + ", ".join(c.to_expr() for c in sys.g.components) + "]",
        f"V = {sys.V.to_expr()}",
    ]
    if sys.theta is not None:
        lines.append(f"theta = {sys.theta.to_expr()}")
    return "\n".join(lines) + "\n"
