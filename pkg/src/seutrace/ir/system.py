"""Synchronous transition systems over bit-vector nets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from . import expr as E
from .expr import Expr, WidthError

INPUT = "input"
REGISTER = "register"
WIRE = "wire"


class NetlistError(ValueError):
    """Structural problem: duplicate id, unresolved reference, cycle."""


@dataclass(frozen=True)
class Net:
    name: str
    width: int
    kind: str


@dataclass(frozen=True)
class RegisterDef:
    net: Net
    init: int
    next: Expr | None


@dataclass
class TransitionSystem:
    """Inputs, registers, wires and per-cycle assumptions of one design.

    Wires may only reference nets that already exist when they are added, so
    the combinational graph is acyclic by construction; :meth:`bind_input`
    is the one operation that can close a loop and it re-checks.  Register
    next-state functions are attached with :meth:`set_next` and may refer to
    anything.  Frozen inputs hold one value for a whole trace.
    """

    name: str = "ts"
    inputs: dict[str, Net] = field(default_factory=dict)
    registers: dict[str, RegisterDef] = field(default_factory=dict)
    wires: dict[str, tuple[Net, Expr]] = field(default_factory=dict)
    assumptions: list[tuple[str, Expr]] = field(default_factory=list)
    outputs: dict[str, str] = field(default_factory=dict)
    frozen: set[str] = field(default_factory=set)
    meta: dict = field(default_factory=dict)

    # ------------------------------------------------------------ building

    def net(self, name: str) -> Net:
        if name in self.inputs:
            return self.inputs[name]
        if name in self.registers:
            return self.registers[name].net
        if name in self.wires:
            return self.wires[name][0]
        raise NetlistError(f"unresolved reference {name!r}")

    def has(self, name: str) -> bool:
        return name in self.inputs or name in self.registers or name in self.wires

    def ref(self, name: str) -> Expr:
        return E.ref(name, self.net(name).width)

    def _fresh(self, name: str, width: int) -> None:
        if self.has(name):
            raise NetlistError(f"duplicate net id {name!r}")
        if not isinstance(width, int) or not 1 <= width <= E.MAX_WIDTH:
            raise WidthError(f"{name}: width must be in 1..{E.MAX_WIDTH}")

    def _resolve(self, where: str, expr: Expr) -> None:
        for node in E.postorder([expr]):
            if node.op != E.REF:
                continue
            name = node.params[0]
            if not self.has(name):
                raise NetlistError(f"{where}: unresolved reference {name!r}")
            if self.net(name).width != node.width:
                raise WidthError(f"{where}: reference {name!r} used with the wrong width")

    def add_input(self, name: str, width: int, frozen: bool = False) -> Expr:
        self._fresh(name, width)
        self.inputs[name] = Net(name, width, INPUT)
        if frozen:
            self.frozen.add(name)
        self._dirty()
        return E.ref(name, width)

    def add_register(self, name: str, width: int, init: int = 0, next: Expr | None = None) -> Expr:
        self._fresh(name, width)
        if not 0 <= init <= E.mask(width):
            raise WidthError(f"{name}: init value {init:#x} does not fit {width} bits")
        self.registers[name] = RegisterDef(Net(name, width, REGISTER), init, None)
        if next is not None:
            self.set_next(name, next)
        self._dirty()
        return E.ref(name, width)

    def set_next(self, name: str, next: Expr) -> None:
        reg = self.registers.get(name)
        if reg is None:
            raise NetlistError(f"unresolved reference {name!r}")
        if next.width != reg.net.width:
            raise WidthError(f"{name}: next-state width {next.width} != {reg.net.width}")
        self._resolve(f"next({name})", next)
        self.registers[name] = RegisterDef(reg.net, reg.init, next)
        self._dirty()

    def add_wire(self, name: str, expr: Expr) -> Expr:
        self._fresh(name, expr.width)
        self._resolve(name, expr)
        self.wires[name] = (Net(name, expr.width, WIRE), expr)
        self._dirty()
        return E.ref(name, expr.width)

    def add_assumption(self, expr: Expr, name: str | None = None) -> None:
        if expr.width != 1:
            raise WidthError(f"assumption must have width 1, got {expr.width}")
        self._resolve("assumption", expr)
        self.assumptions.append((name or f"assume_{len(self.assumptions)}", expr))
        self._dirty()

    def add_output(self, alias: str, net: str) -> None:
        self.net(net)
        self.outputs[alias] = net

    def _dirty(self) -> None:
        self.meta.pop("_compiled", None)

    # ------------------------------------------------------------- queries

    def nets(self) -> list[Net]:
        return (
            list(self.inputs.values())
            + [r.net for r in self.registers.values()]
            + [w[0] for w in self.wires.values()]
        )

    def deps(self, name: str) -> set[str]:
        """Direct structural dependencies of a net (registers: of their next-state)."""
        if name in self.wires:
            return E.refs(self.wires[name][1])
        if name in self.registers:
            nxt = self.registers[name].next
            return E.refs(nxt) if nxt is not None else set()
        return set()

    def comb_deps(self, name: str) -> set[str]:
        """Same-cycle dependencies only: wires read their operands, registers and inputs are sources."""
        if name in self.wires:
            return E.refs(self.wires[name][1])
        return set()

    def wire_order(self) -> list[str]:
        """Wires in dependency order; raises on a combinational cycle."""
        order: list[str] = []
        state: dict[str, int] = {}
        for root in self.wires:
            if state.get(root) == 2:
                continue
            stack = [(root, iter(self.comb_deps(root)))]
            state[root] = 1
            while stack:
                name, it = stack[-1]
                advanced = False
                for dep in it:
                    if dep not in self.wires:
                        continue
                    st = state.get(dep)
                    if st == 1:
                        raise NetlistError(f"combinational cycle through {dep!r}")
                    if st is None:
                        state[dep] = 1
                        stack.append((dep, iter(self.comb_deps(dep))))
                        advanced = True
                        break
                if not advanced:
                    stack.pop()
                    state[name] = 2
                    order.append(name)
        return order

    def validate(self) -> None:
        for name, reg in self.registers.items():
            if reg.next is None:
                raise NetlistError(f"register {name!r} has no next-state function")
            self._resolve(f"next({name})", reg.next)
        for name, (_, ex) in self.wires.items():
            self._resolve(name, ex)
        for aname, ex in self.assumptions:
            self._resolve(aname, ex)
        self.wire_order()

    def state_bits(self) -> int:
        return sum(r.net.width for r in self.registers.values())

    def init_state(self) -> dict[str, int]:
        return {n: r.init for n, r in self.registers.items()}

    # ------------------------------------------------------- transformations

    def copy(self, name: str | None = None) -> TransitionSystem:
        return TransitionSystem(
            name=name or self.name,
            inputs=dict(self.inputs),
            registers=dict(self.registers),
            wires=dict(self.wires),
            assumptions=list(self.assumptions),
            outputs=dict(self.outputs),
            frozen=set(self.frozen),
            meta={k: v for k, v in self.meta.items() if not k.startswith("_")},
        )

    def bind_input(self, name: str, value: Expr | int) -> None:
        """Turn an input into a wire driven by ``value`` (an expression or constant)."""
        net = self.inputs.get(name)
        if net is None:
            raise NetlistError(f"{name!r} is not an input")
        if isinstance(value, int):
            value = E.const(net.width, value)
        if value.width != net.width:
            raise WidthError(f"binding for {name!r} has width {value.width}, expected {net.width}")
        del self.inputs[name]
        self.frozen.discard(name)
        try:
            self._resolve(name, value)
            self.wires[name] = (Net(name, net.width, WIRE), value)
            self.wire_order()
        except Exception:
            self.wires.pop(name, None)
            self.inputs[name] = net
            raise
        self._dirty()

    def propagate_constants(self) -> int:
        """Inline wires that evaluate to constants into their readers; returns how many."""
        consts: dict[str, Expr] = {}
        for name in self.wire_order():
            net, ex = self.wires[name]
            ex = E.substitute(ex, consts) if consts else ex
            self.wires[name] = (net, ex)
            if ex.op == E.CONST:
                consts[name] = ex
        if consts:
            for n, reg in self.registers.items():
                if reg.next is not None:
                    self.registers[n] = RegisterDef(reg.net, reg.init, E.substitute(reg.next, consts))
            self.assumptions = [(a, E.substitute(ex, consts)) for a, ex in self.assumptions]
        self._dirty()
        return len(consts)

    def prefixed(self, prefix: str, keep: Iterable[str] = ()) -> TransitionSystem:
        """Rename every net except ``keep`` by prepending ``prefix``."""
        keep = set(keep)

        def rn(n: str) -> str:
            return n if n in keep else prefix + n

        mapping = {n: E.ref(rn(n), self.net(n).width) for n in self._all_names() if n not in keep}
        out = TransitionSystem(name=prefix + self.name, meta=dict(self.meta))
        out.meta.pop("_compiled", None)
        for n, net in self.inputs.items():
            out.inputs[rn(n)] = Net(rn(n), net.width, INPUT)
            if n in self.frozen:
                out.frozen.add(rn(n))
        for n, reg in self.registers.items():
            nxt = E.substitute(reg.next, mapping) if reg.next is not None else None
            out.registers[rn(n)] = RegisterDef(Net(rn(n), reg.net.width, REGISTER), reg.init, nxt)
        for n, (net, ex) in self.wires.items():
            out.wires[rn(n)] = (Net(rn(n), net.width, WIRE), E.substitute(ex, mapping))
        out.assumptions = [(prefix + a, E.substitute(ex, mapping)) for a, ex in self.assumptions]
        out.outputs = {prefix + a: rn(n) for a, n in self.outputs.items()}
        return out

    def _all_names(self) -> list[str]:
        return list(self.inputs) + list(self.registers) + list(self.wires)

    def merge(self, other: TransitionSystem) -> None:
        """Union with ``other``; inputs of the same name are shared, all else must be disjoint."""
        for n, net in other.inputs.items():
            mine = self.inputs.get(n)
            if mine is not None:
                if mine.width != net.width:
                    raise WidthError(f"shared input {n!r} has mismatched widths")
                continue
            if self.has(n):
                raise NetlistError(f"duplicate net id {n!r}")
            self.inputs[n] = net
        self.frozen |= other.frozen
        for n, reg in other.registers.items():
            if self.has(n):
                raise NetlistError(f"duplicate net id {n!r}")
            self.registers[n] = reg
        for n, w in other.wires.items():
            if self.has(n):
                raise NetlistError(f"duplicate net id {n!r}")
            self.wires[n] = w
        self.assumptions.extend(other.assumptions)
        self.outputs.update(other.outputs)
        self._dirty()

    # ------------------------------------------------------------- display

    def dump(self) -> str:
        """Debug listing: one line per net, kind, width and defining expression."""
        lines = []
        for n, net in self.inputs.items():
            lines.append(f"input    {net.width:3d} {n}{' frozen' if n in self.frozen else ''}")
        for n, reg in self.registers.items():
            nxt = E.to_prefix(reg.next) if reg.next is not None else "?"
            lines.append(f"register {reg.net.width:3d} {n} init={reg.init:#x} next={nxt}")
        for n, (net, ex) in self.wires.items():
            lines.append(f"wire     {net.width:3d} {n} = {E.to_prefix(ex)}")
        for a, ex in self.assumptions:
            lines.append(f"assume       {a}: {E.to_prefix(ex)}")
        return "\n".join(lines)

