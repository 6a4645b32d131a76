"""Elaboration of parsed properties into width-1 obligations over a system."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from ..ir import expr as E
from ..ir.expr import Expr
from ..ir.system import TransitionSystem
from . import parser as P


class ElaborationError(ValueError):
    pass


@dataclass(frozen=True)
class AuxNet:
    """Monitor logic a property needs on top of the design (wire or register)."""

    kind: str
    name: str
    width: int
    expr: Expr
    init: int = 0


@dataclass(frozen=True)
class Property:
    name: str
    directive: str
    obligation: Expr
    antecedent: Expr
    consequent: Expr
    text: str = ""
    family: str = ""
    aux: tuple = ()
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def nets(self) -> set[str]:
        return E.refs(self.obligation)

    @property
    def is_cover(self) -> bool:
        return self.directive == "cover"


def attach_aux(ts: TransitionSystem, props: Iterable[Property] | Iterable[AuxNet]) -> TransitionSystem:
    """Copy of ``ts`` with the monitor nets of ``props`` added (once each)."""
    aux: dict[str, AuxNet] = {}
    for p in props:
        for a in (p.aux if isinstance(p, Property) else (p,)):
            prev = aux.get(a.name)
            if prev is not None and prev != a:
                raise ElaborationError(f"conflicting definitions of monitor net {a.name!r}")
            aux[a.name] = a
    todo = [a for a in aux.values() if not ts.has(a.name)]
    if not todo:
        return ts
    out = ts.copy()
    for a in todo:
        if a.kind == "register":
            out.add_register(a.name, a.width, a.init)
    for a in todo:
        if a.kind == "wire":
            out.add_wire(a.name, a.expr)
    for a in todo:
        if a.kind == "register":
            out.set_next(a.name, a.expr)
    out.validate()
    return out


# -------------------------------------------------------------- typing

@dataclass
class _V:
    """Elaborated value: an expression, or a pending unsized integer."""

    expr: Expr | None
    signed: bool = False
    pending: int | None = None

    @property
    def width(self):
        return None if self.expr is None else self.expr.width


def _lit(value: int, width: int, where: str) -> Expr:
    lo, hi = -(1 << (width - 1)), (1 << width) - 1
    if not lo <= value <= hi:
        raise ElaborationError(f"literal {value} does not fit {width} bits in {where}")
    return E.const(width, value & E.mask(width))


def _sized(v: _V, width: int | None, where: str) -> Expr:
    if v.expr is not None:
        return v.expr
    if width is None:
        width = max(32, v.pending.bit_length() + 1 if v.pending < 0 else v.pending.bit_length())
        if width > E.MAX_WIDTH:
            raise ElaborationError(f"literal {v.pending} too wide in {where}")
    return _lit(v.pending, width, where)


def _pair(a: _V, b: _V, op: str) -> tuple[Expr, Expr]:
    if a.expr is not None and b.expr is not None and a.width != b.width:
        raise ElaborationError(f"width mismatch in '{op}': {a.width} vs {b.width}")
    w = a.width or b.width
    return _sized(a, w, op), _sized(b, w, op)


def _bool(v: _V, where: str) -> Expr:
    if v.expr is None:
        return E.const(1, 1 if v.pending else 0)
    if v.expr.width == 1:
        return v.expr
    return E.neq(v.expr, 0)


_INT_OPS = {
    "+": lambda a, b: a + b, "-": lambda a, b: a - b, "&": lambda a, b: a & b, "|": lambda a, b: a | b,
    "^": lambda a, b: a ^ b, "<<": lambda a, b: a << b, ">>": lambda a, b: a >> b, ">>>": lambda a, b: a >> b,
    "==": lambda a, b: int(a == b), "!=": lambda a, b: int(a != b), "<": lambda a, b: int(a < b),
    "<=": lambda a, b: int(a <= b), ">": lambda a, b: int(a > b), ">=": lambda a, b: int(a >= b),
    "&&": lambda a, b: int(bool(a) and bool(b)), "||": lambda a, b: int(bool(a) or bool(b)),
}


class _Elab:
    def __init__(self, ts: TransitionSystem, name_map: Mapping[str, str]):
        self.ts = ts
        self.name_map = name_map
        self.unknown: list[str] = []

    def resolve(self, name: str) -> Expr | None:
        net = self.name_map.get(name, name)
        if not self.ts.has(net):
            if name not in self.unknown:
                self.unknown.append(name)
            return None
        return self.ts.ref(net)

    def run(self, node: P.Node) -> _V:
        m = getattr(self, "_" + type(node).__name__)
        return m(node)

    def _Ident(self, n: P.Ident) -> _V:
        r = self.resolve(n.name)
        return _V(r if r is not None else E.const(1, 0))

    def _Num(self, n: P.Num) -> _V:
        if n.width is None:
            return _V(None, True, n.value)
        return _V(E.const(n.width, n.value))

    def _Signed(self, n: P.Signed) -> _V:
        v = self.run(n.arg)
        return _V(v.expr, True, v.pending)

    def _Unary(self, n: P.Unary) -> _V:
        v = self.run(n.arg)
        if n.op == "!":
            if v.expr is None:
                return _V(None, True, int(not v.pending))
            return _V(E.not_(_bool(v, "!")))
        if v.expr is None:
            return _V(None, True, ~v.pending if n.op == "~" else -v.pending)
        if n.op == "~":
            return _V(E.not_(v.expr), v.signed)
        return _V(E.sub(E.const(v.width, 0), v.expr), v.signed)

    def _Binary(self, n: P.Binary) -> _V:
        a, b = self.run(n.left), self.run(n.right)
        op = n.op
        if a.expr is None and b.expr is None:
            return _V(None, True, _INT_OPS[op](a.pending, b.pending))
        if op in ("&&", "||"):
            x, y = _bool(a, op), _bool(b, op)
            return _V(E.and_(x, y) if op == "&&" else E.or_(x, y))
        if op in ("<<", ">>", ">>>"):
            if a.expr is None:
                raise ElaborationError(f"left operand of '{op}' needs a width")
            amt = b.expr if b.expr is not None else E.const(max(1, b.pending.bit_length()), b.pending)
            if b.expr is None and b.pending < 0:
                raise ElaborationError("negative shift amount")
            f = {"<<": E.shl, ">>": E.lshr, ">>>": E.ashr}[op]
            return _V(f(a.expr, amt), a.signed)
        x, y = _pair(a, b, op)
        signed = a.signed and b.signed
        if op in ("+", "-", "&", "|", "^"):
            f = {"+": E.add, "-": E.sub, "&": E.and_, "|": E.or_, "^": E.xor}[op]
            return _V(f(x, y), signed)
        if op == "==":
            return _V(E.eq(x, y))
        if op == "!=":
            return _V(E.neq(x, y))
        lt, le = (E.slt, E.sle) if signed else (E.ult, E.ule)
        if op == "<":
            return _V(lt(x, y))
        if op == "<=":
            return _V(le(x, y))
        if op == ">":
            return _V(lt(y, x))
        return _V(le(y, x))

    def _Cond(self, n: P.Cond) -> _V:
        c = _bool(self.run(n.cond), "?:")
        t, e = self.run(n.then), self.run(n.other)
        if t.expr is None and e.expr is None:
            t = _V(_sized(t, None, "?:"), True)
        x, y = _pair(t, e, "?:")
        return _V(E.ite(c, x, y), t.signed and e.signed)

    def _Select(self, n: P.Select) -> _V:
        v = self.run(n.arg)
        x = _sized(v, None, "select")
        if not (0 <= n.lo <= n.hi < x.width):
            raise ElaborationError(f"select [{n.hi}:{n.lo}] out of range for width {x.width}")
        return _V(x.slice(n.hi, n.lo))

    def _Concat(self, n: P.Concat) -> _V:
        parts = []
        for p in n.parts:
            v = self.run(p)
            if v.expr is None:
                raise ElaborationError("unsized literal inside a concatenation")
            parts.append(v.expr)
        total = sum(p.width for p in parts)
        if total > E.MAX_WIDTH:
            raise ElaborationError(f"concatenation width {total} exceeds {E.MAX_WIDTH}")
        return _V(E.concat(*parts))

    def _Repl(self, n: P.Repl) -> _V:
        v = self.run(n.arg)
        if v.expr is None:
            raise ElaborationError("unsized literal inside a replication")
        if n.count < 1 or n.count * v.width > E.MAX_WIDTH:
            raise ElaborationError(f"bad replication count {n.count}")
        return _V(E.replicate(v.expr, n.count))


def elaborate_expr(node: P.Node, ts: TransitionSystem, name_map: Mapping[str, str] | None = None) -> Expr:
    el = _Elab(ts, name_map or {})
    v = el.run(node)
    if el.unknown:
        raise ElaborationError("unresolved identifier(s): " + ", ".join(el.unknown))
    return _sized(v, None, "expression")


def elaborate(ast: P.PropertyAst, ts: TransitionSystem, name_map: Mapping[str, str] | None = None,
              name: str | None = None, family: str = "", aux: tuple = ()) -> Property:
    """Width-check ``ast`` against ``ts``; identifiers go through ``name_map`` first."""
    el = _Elab(ts, name_map or {})
    cons = _bool(el.run(ast.consequent), "consequent")
    ante = _bool(el.run(ast.antecedent), "antecedent") if ast.antecedent is not None else E.true()
    if el.unknown:
        raise ElaborationError("unresolved identifier(s): " + ", ".join(el.unknown))
    if ast.directive == "cover":
        ob = E.and_(ante, cons)
    else:
        ob = E.implies(ante, cons)
    return Property(name or ast.name or "property", ast.directive, ob, ante, cons,
                    P.format_property(ast), family, tuple(aux))


def compile_property(text: str, ts: TransitionSystem, name_map: Mapping[str, str] | None = None,
                     name: str | None = None, family: str = "", aux: tuple = ()) -> Property:
    """Parse and elaborate one statement; monitor nets in ``aux`` are visible to it."""
    ast = P.parse(text)
    view = attach_aux(ts, aux) if aux else ts
    return replace(elaborate(ast, view, name_map, name, family, aux), text=text.strip())
