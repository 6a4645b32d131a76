"""Bit-blasting of word-level expressions onto a gate backend.

A backend supplies ``TRUE``/``FALSE`` plus ``NOT AND OR XOR MUX MAJ``; bit
vectors are lists of backend bits, least significant first.  Two backends
exist: :class:`ExprGates` (width-1 expressions, used by :func:`bitblast`) and
the CNF builder in :mod:`seutrace.sat.cnf`.
"""

from __future__ import annotations

from typing import Callable, Protocol, Sequence

from . import expr as E
from .expr import Expr


class Gates(Protocol):
    TRUE: object
    FALSE: object

    def NOT(self, a): ...
    def AND(self, a, b): ...
    def OR(self, a, b): ...
    def XOR(self, a, b): ...
    def MUX(self, s, t, e): ...
    def MAJ(self, a, b, c): ...


class ExprGates:
    """Backend producing width-1 :class:`Expr` nodes."""

    TRUE = E.true()
    FALSE = E.false()

    def NOT(self, a):
        return E.not_(a)

    def AND(self, a, b):
        return E.and_(a, b)

    def OR(self, a, b):
        return E.or_(a, b)

    def XOR(self, a, b):
        return E.xor(a, b)

    def MUX(self, s, t, e):
        return E.ite(s, t, e)

    def MAJ(self, a, b, c):
        return E.or_(E.and_(a, b), E.and_(c, E.or_(a, b)))


def const_bits(g: Gates, width: int, value: int) -> list:
    return [g.TRUE if value >> i & 1 else g.FALSE for i in range(width)]


def add_bits(g: Gates, a: Sequence, b: Sequence, carry=None) -> list:
    c = g.FALSE if carry is None else carry
    out = []
    for x, y in zip(a, b):
        out.append(g.XOR(g.XOR(x, y), c))
        c = g.MAJ(x, y, c)
    return out


def uge_bits(g: Gates, a: Sequence, b: Sequence):
    """Carry out of ``a + ~b + 1``, i.e. ``a >= b`` unsigned."""
    c = g.TRUE
    for x, y in zip(a, b):
        c = g.MAJ(x, g.NOT(y), c)
    return c


def eq_bits(g: Gates, a: Sequence, b: Sequence):
    acc = g.TRUE
    for x, y in zip(reversed(a), reversed(b)):
        acc = g.AND(acc, g.NOT(g.XOR(x, y)))
    return acc


def _shift(g: Gates, op: str, a: list, amount: list) -> list:
    w = len(a)
    fill = a[-1] if op == E.ASHR else g.FALSE
    cur = list(a)
    overflow = g.FALSE
    for k, s in enumerate(amount):
        step = 1 << k
        if step >= w:
            overflow = g.OR(overflow, s)
            continue
        if op == E.SHL:
            shifted = [g.FALSE] * step + cur[: w - step]
        else:
            shifted = cur[step:] + [fill] * step
        cur = [g.MUX(s, x, y) for x, y in zip(shifted, cur)]
    return [g.MUX(overflow, fill, x) for x in cur]


def blast_node(g: Gates, node: Expr, args: list[list]) -> list:
    """Gate-level image of one operator given blasted operands."""
    op = node.op
    if op == E.NOT:
        return [g.NOT(x) for x in args[0]]
    if op == E.AND:
        return [g.AND(x, y) for x, y in zip(*args)]
    if op == E.OR:
        return [g.OR(x, y) for x, y in zip(*args)]
    if op == E.XOR:
        return [g.XOR(x, y) for x, y in zip(*args)]
    if op == E.ITE:
        s = args[0][0]
        return [g.MUX(s, x, y) for x, y in zip(args[1], args[2])]
    if op == E.EQ:
        return [eq_bits(g, *args)]
    if op == E.NEQ:
        return [g.NOT(eq_bits(g, *args))]
    if op == E.ULT:
        return [g.NOT(uge_bits(g, args[0], args[1]))]
    if op == E.ULE:
        return [uge_bits(g, args[1], args[0])]
    if op in (E.SLT, E.SLE):
        a = args[0][:-1] + [g.NOT(args[0][-1])]
        b = args[1][:-1] + [g.NOT(args[1][-1])]
        if op == E.SLT:
            return [g.NOT(uge_bits(g, a, b))]
        return [uge_bits(g, b, a)]
    if op == E.ADD:
        return add_bits(g, args[0], args[1])
    if op == E.SUB:
        return add_bits(g, args[0], [g.NOT(y) for y in args[1]], g.TRUE)
    if op in (E.SHL, E.LSHR, E.ASHR):
        return _shift(g, op, args[0], args[1])
    if op == E.SLICE:
        hi, lo = node.params
        return args[0][lo : hi + 1]
    if op == E.CONCAT:
        out: list = []
        for part in reversed(args):
            out.extend(part)
        return out
    if op == E.ZEXT:
        return args[0] + [g.FALSE] * (node.width - len(args[0]))
    if op == E.SEXT:
        return args[0] + [args[0][-1]] * (node.width - len(args[0]))
    raise ValueError(f"cannot bit-blast {op}")


def blast(g: Gates, root: Expr, leaf: Callable[[Expr], list], memo: dict[Expr, list] | None = None) -> list:
    """Blast ``root``; ``leaf`` maps a REF node to its bit list.

    ``memo`` is keyed by node (nodes are interned, so identity is equality)
    and may be shared between calls on the same backend.
    """
    if memo is None:
        memo = {}
    hit = memo.get(root)
    if hit is not None:
        return hit
    for node in E.postorder([root]):
        if node in memo:
            continue
        if node.op == E.CONST:
            memo[node] = const_bits(g, node.width, node.params[0])
        elif node.op == E.REF:
            memo[node] = leaf(node)
        else:
            memo[node] = blast_node(g, node, [memo[a] for a in node.args])
    return memo[root]


def bitblast(expr: Expr) -> list[Expr]:
    """Width-1 expressions over single-bit slices of the referenced nets, LSB first."""
    g = ExprGates()
    return blast(g, expr, lambda r: [E.slice_(r, i, i) for i in range(r.width)])
