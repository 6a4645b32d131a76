"""Parser for a small SVA-like assertion language.

Statement form::

    [label:] assert|assume|cover property ( [antecedent |->] consequent );

Expressions use Verilog precedence: ``?:``, ``||``, ``&&``, ``|``, ``^``,
``&``, ``== !=``, ``< <= > >=``, ``<< >> >>>``, ``+ -``, unary ``! ~ -``.
Primaries are identifiers, sized literals (``6'd7``, ``3'b101``,
``32'h10500073``), plain decimals, ``signed(e)`` / ``$signed(e)``,
bit/part selects ``x[i]`` / ``x[hi:lo]``, concatenation ``{a, b}``,
replication ``{n{e}}`` and parentheses.  ``#`` and ``//`` start comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

DIRECTIVES = ("assert", "assume", "cover")


class PropertySyntaxError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col
        self.msg = msg


# ------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class Num:
    value: int
    width: int | None = None
    base: str = "d"


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Cond:
    cond: "Node"
    then: "Node"
    other: "Node"


@dataclass(frozen=True)
class Signed:
    arg: "Node"


@dataclass(frozen=True)
class Select:
    arg: "Node"
    hi: int
    lo: int


@dataclass(frozen=True)
class Concat:
    parts: tuple


@dataclass(frozen=True)
class Repl:
    count: int
    arg: "Node"


Node = Union[Ident, Num, Unary, Binary, Cond, Signed, Select, Concat, Repl]


@dataclass(frozen=True)
class PropertyAst:
    directive: str
    consequent: Node
    antecedent: Node | None = None
    name: str | None = None


# ----------------------------------------------------------------- lexer

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>(\#|//)[^\n]*)
  | (?P<sized>\d+\s*'\s*[sS]?[bBdDhHoO]\s*[0-9a-fA-F_xXzZ]+)
  | (?P<num>\d[\d_]*)
  | (?P<ident>\$?[A-Za-z_][A-Za-z0-9_.$]*)
  | (?P<op>\|->|>>>|<<|>>|<=|>=|==|!=|&&|\|\||[-+!~&|^<>?:;()\[\]{},])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if not m:
            raise PropertySyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind not in ("ws", "comment"):
            toks.append(Token(kind, s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rfind("\n") + 1
        pos = m.end()
    toks.append(Token("eof", "", line, pos - line_start + 1))
    return toks


_BASES = {"b": 2, "d": 10, "h": 16, "o": 8}


def _sized(tok: Token) -> Num:
    width_s, rest = tok.text.split("'", 1)
    rest = rest.strip().lower()
    if rest.startswith("s"):
        rest = rest[1:]
    base = rest[0]
    digits = rest[1:].strip().replace("_", "")
    width = int(width_s)
    if width < 1 or width > 64:
        raise PropertySyntaxError(f"literal width {width} outside 1..64", tok.line, tok.col)
    try:
        value = int(digits, _BASES[base])
    except ValueError:
        raise PropertySyntaxError(f"bad digits in literal {tok.text!r}", tok.line, tok.col) from None
    if value >> width:
        raise PropertySyntaxError(f"literal {tok.text!r} overflows {width} bits", tok.line, tok.col)
    return Num(value, width, base)


# ---------------------------------------------------------------- parser

_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("|",),
    ("^",),
    ("&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("<<", ">>", ">>>"),
    ("+", "-"),
]


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.toks[self.i]

    def peek(self, n: int = 1) -> Token:
        return self.toks[min(self.i + n, len(self.toks) - 1)]

    def take(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.cur
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise PropertySyntaxError(f"{msg}, found {found}", tok.line, tok.col)

    def expect(self, text: str) -> Token:
        if self.cur.text != text or self.cur.kind == "eof":
            self.error(f"expected {text!r}")
        return self.take()

    def statement(self) -> PropertyAst:
        name = None
        if self.cur.kind == "ident" and self.peek().text == ":" and self.cur.text not in DIRECTIVES:
            name = self.take().text
            self.take()
        d = self.cur
        if d.text not in DIRECTIVES:
            self.error("expected assert, assume or cover")
        self.take()
        if self.cur.text == "property":
            self.take()
        self.expect("(")
        ante, cons = self.prop()
        self.expect(")")
        if self.cur.text == ";":
            self.take()
        return PropertyAst(d.text, cons, ante, name)

    def prop(self):
        e = self.expr()
        if self.cur.text == "|->":
            self.take()
            return e, self.expr()
        return None, e

    def expr(self) -> Node:
        c = self.binary(0)
        if self.cur.text == "?":
            self.take()
            t = self.expr()
            self.expect(":")
            e = self.expr()
            return Cond(c, t, e)
        return c

    def binary(self, level: int) -> Node:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        left = self.binary(level + 1)
        while self.cur.kind == "op" and self.cur.text in _BINARY_LEVELS[level]:
            op = self.take().text
            right = self.binary(level + 1)
            left = Binary(op, left, right)
        return left

    def unary(self) -> Node:
        if self.cur.kind == "op" and self.cur.text in ("!", "~", "-"):
            op = self.take().text
            return Unary(op, self.unary())
        return self.postfix(self.primary())

    def postfix(self, node: Node) -> Node:
        while self.cur.text == "[":
            self.take()
            hi = self.int_lit()
            lo = hi
            if self.cur.text == ":":
                self.take()
                lo = self.int_lit()
            self.expect("]")
            node = Select(node, hi, lo)
        return node

    def int_lit(self) -> int:
        if self.cur.kind != "num":
            self.error("expected a bit index")
        return int(self.take().text.replace("_", ""))

    def primary(self) -> Node:
        t = self.cur
        if t.kind == "num":
            self.take()
            return Num(int(t.text.replace("_", "")))
        if t.kind == "sized":
            self.take()
            return _sized(t)
        if t.kind == "ident":
            if t.text in ("signed", "$signed") and self.peek().text == "(":
                self.take()
                self.take()
                e = self.expr()
                self.expect(")")
                return Signed(e)
            if t.text.startswith("$"):
                self.error("unknown system function")
            self.take()
            return Ident(t.text)
        if t.text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        if t.text == "{":
            self.take()
            if self.cur.kind == "num" and self.peek().text == "{":
                count = self.int_lit()
                self.take()
                e = self.expr()
                self.expect("}")
                self.expect("}")
                return Repl(count, e)
            parts = [self.expr()]
            while self.cur.text == ",":
                self.take()
                parts.append(self.expr())
            self.expect("}")
            return Concat(tuple(parts))
        self.error("expected an expression")


def parse(text: str) -> PropertyAst:
    """Parse exactly one property statement."""
    p = _Parser(tokenize(text))
    ast = p.statement()
    if p.cur.kind != "eof":
        p.error("unexpected text after property")
    return ast


def parse_file(text: str) -> list[PropertyAst]:
    """Parse a property file: any number of statements."""
    p = _Parser(tokenize(text))
    out = []
    while p.cur.kind != "eof":
        out.append(p.statement())
    return out


def parse_expr(text: str) -> Node:
    p = _Parser(tokenize(text))
    e = p.expr()
    if p.cur.kind != "eof":
        p.error("unexpected text after expression")
    return e


# --------------------------------------------------------- pretty printer


def format_expr(node: Node) -> str:
    if isinstance(node, Ident):
        return node.name
    if isinstance(node, Num):
        if node.width is None:
            return str(node.value)
        if node.base == "b":
            return f"{node.width}'b{node.value:b}"
        if node.base == "h":
            return f"{node.width}'h{node.value:x}"
        if node.base == "o":
            return f"{node.width}'o{node.value:o}"
        return f"{node.width}'d{node.value}"
    if isinstance(node, Unary):
        return f"{node.op}{_atom(node.arg)}"
    if isinstance(node, Binary):
        return f"{_atom(node.left)} {node.op} {_atom(node.right)}"
    if isinstance(node, Cond):
        return f"{_atom(node.cond)} ? {_atom(node.then)} : {_atom(node.other)}"
    if isinstance(node, Signed):
        return f"$signed({format_expr(node.arg)})"
    if isinstance(node, Select):
        idx = f"{node.hi}" if node.hi == node.lo else f"{node.hi}:{node.lo}"
        return f"{_atom(node.arg)}[{idx}]"
    if isinstance(node, Concat):
        return "{" + ", ".join(format_expr(p) for p in node.parts) + "}"
    if isinstance(node, Repl):
        return "{" + f"{node.count}" + "{" + format_expr(node.arg) + "}}"
    raise TypeError(node)


def _atom(node: Node) -> str:
    s = format_expr(node)
    if isinstance(node, (Binary, Cond, Unary)):
        return f"({s})"
    return s


def format_property(ast: PropertyAst) -> str:
    body = format_expr(ast.consequent)
    if ast.antecedent is not None:
        body = f"{format_expr(ast.antecedent)} |-> {body}"
    label = f"{ast.name}: " if ast.name else ""
    return f"{label}{ast.directive} property ({body});"
