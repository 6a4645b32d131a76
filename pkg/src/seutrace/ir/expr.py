"""Width-typed bit-vector expressions.

Expressions are immutable and hash-consed: building the same node twice
returns the same object, so identity comparison is structural equality.
Nodes are created through the constructor functions in this module (or the
arithmetic operators on :class:`Expr`) which type-check their operands.
"""

from __future__ import annotations

import weakref
from typing import Iterable, Mapping

MAX_WIDTH = 64

CONST = "const"
REF = "ref"
NOT = "not"
AND = "and"
OR = "or"
XOR = "xor"
ITE = "ite"
EQ = "eq"
NEQ = "neq"
ULT = "ult"
ULE = "ule"
SLT = "slt"
SLE = "sle"
ADD = "add"
SUB = "sub"
SHL = "shl"
LSHR = "lshr"
ASHR = "ashr"
SLICE = "slice"
CONCAT = "concat"
SEXT = "sext"
ZEXT = "zext"

BINARY_SAME_WIDTH = frozenset({AND, OR, XOR, ADD, SUB})
COMPARES = frozenset({EQ, NEQ, ULT, ULE, SLT, SLE})
SHIFTS = frozenset({SHL, LSHR, ASHR})


class WidthError(ValueError):
    """Operands do not satisfy the typing rules of an operator."""


def mask(width: int) -> int:
    return (1 << width) - 1


def to_signed(value: int, width: int) -> int:
    if value >> (width - 1) & 1:
        return value - (1 << width)
    return value


class Expr:
    """A node of the expression DAG. Do not instantiate directly."""

    __slots__ = ("op", "width", "args", "params", "__weakref__")

    op: str
    width: int
    args: tuple[Expr, ...]
    params: tuple

    def __repr__(self) -> str:
        return to_prefix(self)

    # operator sugar; integers are coerced to constants of the other side's width
    def __and__(self, other):
        return and_(self, _coerce(other, self.width))

    def __rand__(self, other):
        return and_(_coerce(other, self.width), self)

    def __or__(self, other):
        return or_(self, _coerce(other, self.width))

    def __ror__(self, other):
        return or_(_coerce(other, self.width), self)

    def __xor__(self, other):
        return xor(self, _coerce(other, self.width))

    def __rxor__(self, other):
        return xor(_coerce(other, self.width), self)

    def __invert__(self):
        return not_(self)

    def __add__(self, other):
        return add(self, _coerce(other, self.width))

    def __radd__(self, other):
        return add(_coerce(other, self.width), self)

    def __sub__(self, other):
        return sub(self, _coerce(other, self.width))

    def __rsub__(self, other):
        return sub(_coerce(other, self.width), self)

    def __lshift__(self, other):
        return shl(self, _coerce(other, self.width))

    def __rshift__(self, other):
        return lshr(self, _coerce(other, self.width))

    def bit(self, i: int) -> Expr:
        return slice_(self, i, i)

    def slice(self, hi: int, lo: int) -> Expr:
        return slice_(self, hi, lo)

    @property
    def is_const(self) -> bool:
        return self.op == CONST

    @property
    def value(self) -> int:
        if self.op != CONST:
            raise TypeError("not a constant")
        return self.params[0]

    @property
    def name(self) -> str:
        if self.op != REF:
            raise TypeError("not a reference")
        return self.params[0]


_table: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()


def _make(op: str, width: int, args: tuple[Expr, ...] = (), params: tuple = ()) -> Expr:
    key = (op, width, params, tuple(id(a) for a in args))
    node = _table.get(key)
    if node is not None:
        return node
    node = object.__new__(Expr)
    node.op = op
    node.width = width
    node.args = args
    node.params = params
    _table[key] = node
    return node


def _check_width(width: int) -> None:
    if not isinstance(width, int) or not 1 <= width <= MAX_WIDTH:
        raise WidthError(f"width must be in 1..{MAX_WIDTH}, got {width!r}")


def _coerce(value, width: int) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, bool):
        value = int(value)
    if isinstance(value, int):
        return const(width, value & mask(width))
    raise TypeError(f"cannot use {type(value).__name__} as an expression")


# ---------------------------------------------------------------- semantics


def apply_op(op: str, width: int, params: tuple, vals: list[int], widths: list[int]) -> int:
    """Concrete semantics of one node given its operand values."""
    m = mask(width)
    if op == NOT:
        return ~vals[0] & m
    if op == AND:
        return vals[0] & vals[1]
    if op == OR:
        return vals[0] | vals[1]
    if op == XOR:
        return vals[0] ^ vals[1]
    if op == ITE:
        return vals[1] if vals[0] else vals[2]
    if op == EQ:
        return int(vals[0] == vals[1])
    if op == NEQ:
        return int(vals[0] != vals[1])
    if op == ULT:
        return int(vals[0] < vals[1])
    if op == ULE:
        return int(vals[0] <= vals[1])
    if op == SLT:
        return int(to_signed(vals[0], widths[0]) < to_signed(vals[1], widths[1]))
    if op == SLE:
        return int(to_signed(vals[0], widths[0]) <= to_signed(vals[1], widths[1]))
    if op == ADD:
        return (vals[0] + vals[1]) & m
    if op == SUB:
        return (vals[0] - vals[1]) & m
    if op == SHL:
        return (vals[0] << vals[1]) & m if vals[1] < width else 0
    if op == LSHR:
        return vals[0] >> vals[1] if vals[1] < width else 0
    if op == ASHR:
        amount = min(vals[1], width - 1)
        return (to_signed(vals[0], width) >> amount) & m
    if op == SLICE:
        hi, lo = params
        return (vals[0] >> lo) & mask(hi - lo + 1)
    if op == CONCAT:
        out = 0
        for v, w in zip(vals, widths):
            out = (out << w) | v
        return out
    if op == ZEXT:
        return vals[0]
    if op == SEXT:
        return to_signed(vals[0], widths[0]) & m
    raise ValueError(f"unknown operator {op!r}")


def _fold(op: str, width: int, args: tuple[Expr, ...], params: tuple = ()) -> Expr:
    if all(a.op == CONST for a in args):
        vals = [a.params[0] for a in args]
        return const(width, apply_op(op, width, params, vals, [a.width for a in args]))
    return _make(op, width, args, params)


# ------------------------------------------------------------- constructors


def const(width: int, value: int) -> Expr:
    _check_width(width)
    if not 0 <= value <= mask(width):
        raise WidthError(f"constant {value} does not fit in {width} bits")
    return _make(CONST, width, (), (value,))


def true() -> Expr:
    return const(1, 1)


def false() -> Expr:
    return const(1, 0)


def ref(name: str, width: int) -> Expr:
    _check_width(width)
    return _make(REF, width, (), (name,))


def not_(a: Expr) -> Expr:
    if a.op == NOT:
        return a.args[0]
    return _fold(NOT, a.width, (a,))


def _same(op: str, a: Expr, b: Expr) -> None:
    if a.width != b.width:
        raise WidthError(f"{op}: operand widths differ ({a.width} vs {b.width})")


def and_(a: Expr, b: Expr) -> Expr:
    _same(AND, a, b)
    for x, y in ((a, b), (b, a)):
        if x.op == CONST:
            if x.params[0] == 0:
                return x
            if x.params[0] == mask(x.width):
                return y
    if a is b:
        return a
    return _fold(AND, a.width, (a, b))


def or_(a: Expr, b: Expr) -> Expr:
    _same(OR, a, b)
    for x, y in ((a, b), (b, a)):
        if x.op == CONST:
            if x.params[0] == 0:
                return y
            if x.params[0] == mask(x.width):
                return x
    if a is b:
        return a
    return _fold(OR, a.width, (a, b))


def xor(a: Expr, b: Expr) -> Expr:
    _same(XOR, a, b)
    for x, y in ((a, b), (b, a)):
        if x.op == CONST and x.params[0] == 0:
            return y
    return _fold(XOR, a.width, (a, b))


def all_of(*terms: Expr) -> Expr:
    out = true()
    for t in terms:
        out = and_(out, t)
    return out


def any_of(*terms: Expr) -> Expr:
    out = false()
    for t in terms:
        out = or_(out, t)
    return out


def implies(a: Expr, b: Expr) -> Expr:
    return or_(not_(a), b)


def ite(c: Expr, t: Expr, e: Expr) -> Expr:
    if c.width != 1:
        raise WidthError(f"ite condition must have width 1, got {c.width}")
    _same(ITE, t, e)
    if c.op == CONST:
        return t if c.params[0] else e
    if t is e:
        return t
    return _make(ITE, t.width, (c, t, e))


def _compare(op: str, a: Expr, b: Expr) -> Expr:
    _same(op, a, b)
    return _fold(op, 1, (a, b))


def eq(a: Expr, b) -> Expr:
    return _compare(EQ, a, _coerce(b, a.width))


def neq(a: Expr, b) -> Expr:
    return _compare(NEQ, a, _coerce(b, a.width))


def ult(a: Expr, b) -> Expr:
    return _compare(ULT, a, _coerce(b, a.width))


def ule(a: Expr, b) -> Expr:
    return _compare(ULE, a, _coerce(b, a.width))


def slt(a: Expr, b) -> Expr:
    return _compare(SLT, a, _coerce(b, a.width))


def sle(a: Expr, b) -> Expr:
    return _compare(SLE, a, _coerce(b, a.width))


def add(a: Expr, b: Expr) -> Expr:
    _same(ADD, a, b)
    if b.op == CONST and b.params[0] == 0:
        return a
    if a.op == CONST and a.params[0] == 0:
        return b
    return _fold(ADD, a.width, (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    _same(SUB, a, b)
    if b.op == CONST and b.params[0] == 0:
        return a
    return _fold(SUB, a.width, (a, b))


def _shift(op: str, a: Expr, amount) -> Expr:
    amount = _coerce(amount, a.width)
    if amount.op == CONST and amount.params[0] == 0:
        return a
    return _fold(op, a.width, (a, amount))


def shl(a: Expr, amount) -> Expr:
    return _shift(SHL, a, amount)


def lshr(a: Expr, amount) -> Expr:
    return _shift(LSHR, a, amount)


def ashr(a: Expr, amount) -> Expr:
    return _shift(ASHR, a, amount)


def slice_(a: Expr, hi: int, lo: int) -> Expr:
    if not 0 <= lo <= hi < a.width:
        raise WidthError(f"slice [{hi}:{lo}] out of range for width {a.width}")
    if lo == 0 and hi == a.width - 1:
        return a
    if a.op == SLICE:
        return slice_(a.args[0], a.params[1] + hi, a.params[1] + lo)
    return _fold(SLICE, hi - lo + 1, (a,), (hi, lo))


def concat(*parts: Expr) -> Expr:
    """Concatenate, most significant part first (Verilog ``{a, b}`` order)."""
    if not parts:
        raise WidthError("concat needs at least one operand")
    if len(parts) == 1:
        return parts[0]
    width = sum(p.width for p in parts)
    _check_width(width)
    return _fold(CONCAT, width, tuple(parts))


def zext(a: Expr, width: int) -> Expr:
    _check_width(width)
    if width < a.width:
        raise WidthError(f"cannot zero-extend width {a.width} to {width}")
    if width == a.width:
        return a
    return _fold(ZEXT, width, (a,), (width,))


def sext(a: Expr, width: int) -> Expr:
    _check_width(width)
    if width < a.width:
        raise WidthError(f"cannot sign-extend width {a.width} to {width}")
    if width == a.width:
        return a
    return _fold(SEXT, width, (a,), (width,))


def replicate(a: Expr, times: int) -> Expr:
    return concat(*([a] * times))


def reduce_or(a: Expr) -> Expr:
    return neq(a, 0)


def reduce_and(a: Expr) -> Expr:
    return eq(a, mask(a.width))


# ---------------------------------------------------------------- traversal


def postorder(roots: Iterable[Expr]) -> list[Expr]:
    """Every node reachable from ``roots``, children before parents."""
    seen: set[int] = set()
    out: list[Expr] = []
    for root in roots:
        if id(root) in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                out.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for a in reversed(node.args):
                if id(a) not in seen:
                    stack.append((a, False))
    return out


def refs(expr: Expr) -> set[str]:
    return {n.params[0] for n in postorder([expr]) if n.op == REF}


def evaluate(expr: Expr, values: Mapping[str, int]) -> int:
    """Interpretive evaluation against a name -> value mapping."""
    memo: dict[int, int] = {}
    for node in postorder([expr]):
        if node.op == CONST:
            memo[id(node)] = node.params[0]
        elif node.op == REF:
            memo[id(node)] = values[node.params[0]] & mask(node.width)
        else:
            vals = [memo[id(a)] for a in node.args]
            memo[id(node)] = apply_op(node.op, node.width, node.params, vals, [a.width for a in node.args])
    return memo[id(expr)]


def substitute(expr: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace references by expressions (widths must agree)."""
    memo: dict[int, Expr] = {}
    for node in postorder([expr]):
        if node.op == REF:
            repl = mapping.get(node.params[0])
            if repl is not None and repl.width != node.width:
                raise WidthError(f"substitution for {node.params[0]} has width {repl.width}, expected {node.width}")
            memo[id(node)] = repl if repl is not None else node
        elif node.op == CONST:
            memo[id(node)] = node
        else:
            memo[id(node)] = rebuild(node, [memo[id(a)] for a in node.args])
    return memo[id(expr)]


def rebuild(node: Expr, args: list[Expr]) -> Expr:
    """Re-create ``node`` over new operands, going through the folding constructors."""
    op = node.op
    if all(a is b for a, b in zip(args, node.args)):
        return node
    if op == NOT:
        return not_(args[0])
    if op == AND:
        return and_(*args)
    if op == OR:
        return or_(*args)
    if op == XOR:
        return xor(*args)
    if op == ITE:
        return ite(*args)
    if op in COMPARES:
        return _compare(op, *args)
    if op == ADD:
        return add(*args)
    if op == SUB:
        return sub(*args)
    if op in SHIFTS:
        return _shift(op, *args)
    if op == SLICE:
        return slice_(args[0], *node.params)
    if op == CONCAT:
        return concat(*args)
    if op == ZEXT:
        return zext(args[0], node.width)
    if op == SEXT:
        return sext(args[0], node.width)
    raise ValueError(f"cannot rebuild {op}")


def to_prefix(expr: Expr) -> str:
    """Compact prefix rendering, used in netlist dumps and reprs."""
    if expr.op == CONST:
        return f"{expr.width}'h{expr.params[0]:x}"
    if expr.op == REF:
        return expr.params[0]
    inner = " ".join(to_prefix(a) for a in expr.args)
    if expr.op == SLICE:
        return f"(slice[{expr.params[0]}:{expr.params[1]}] {inner})"
    if expr.op in (SEXT, ZEXT):
        return f"({expr.op}{expr.width} {inner})"
    return f"({expr.op} {inner})"
