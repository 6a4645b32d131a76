"""Concrete cycle semantics, compiled to straight-line Python."""

from __future__ import annotations

from typing import Mapping, Sequence

from . import expr as E
from .system import TransitionSystem


class Simulator:
    """Fast single-step evaluator for one transition system.

    ``step(regs, ins)`` takes register and input values as sequences ordered
    like :attr:`reg_names` / :attr:`in_names` and returns the next register
    values plus the values of the ``observe`` nets for the current cycle.
    """

    def __init__(self, ts: TransitionSystem, observe: Sequence[str] | None = None):
        ts.validate()
        self.ts = ts
        self.reg_names = list(ts.registers)
        self.in_names = list(ts.inputs)
        self.observe = list(ts.wires) if observe is None else list(observe)
        self.assumption_names = [a for a, _ in ts.assumptions]
        source = _generate(ts, self.reg_names, self.in_names, self.observe)
        scope: dict = {}
        exec(compile(source, f"<sim:{ts.name}>", "exec"), scope)
        self._fn = scope["step"]
        self.source = source

    def step(self, regs: Sequence[int], ins: Sequence[int]):
        """Returns ``(next_regs, observed, assumptions_ok)``."""
        return self._fn(regs, ins)

    def init(self) -> list[int]:
        return [self.ts.registers[n].init for n in self.reg_names]


def _generate(ts: TransitionSystem, reg_names, in_names, observe) -> str:
    varname: dict[str, str] = {}
    lines = ["def step(R, I):"]
    for i, n in enumerate(reg_names):
        varname[n] = f"r{i}"
    for i, n in enumerate(in_names):
        varname[n] = f"i{i}"
    if reg_names:
        lines.append(f"    {', '.join(varname[n] for n in reg_names)}, = R")
    if in_names:
        lines.append(f"    {', '.join(varname[n] for n in in_names)}, = I")
    memo: dict[int, str] = {}
    counter = [0]

    def emit(root: E.Expr) -> str:
        for node in E.postorder([root]):
            if id(node) in memo:
                continue
            if node.op == E.CONST:
                memo[id(node)] = str(node.params[0])
                continue
            if node.op == E.REF:
                memo[id(node)] = varname[node.params[0]]
                continue
            code = _op_code(node, [memo[id(a)] for a in node.args])
            counter[0] += 1
            tmp = f"t{counter[0]}"
            lines.append(f"    {tmp} = {code}")
            memo[id(node)] = tmp
        return memo[id(root)]

    for w in ts.wire_order():
        v = f"w{len(varname)}"
        lines.append(f"    {v} = {emit(ts.wires[w][1])}")
        varname[w] = v
    nexts = [emit(ts.registers[n].next) for n in reg_names]
    obs = [varname[n] for n in observe]
    assumes = [emit(ex) for _, ex in ts.assumptions]
    ok = " and ".join(assumes) if assumes else "1"
    lines.append(f"    return ({', '.join(nexts)}{',' if nexts else ''}), ({', '.join(obs)}{',' if obs else ''}), bool({ok})")
    return "\n".join(lines) + "\n"


def _op_code(node: E.Expr, a: list[str]) -> str:
    op, w = node.op, node.width
    m = E.mask(w)
    if op == E.NOT:
        return f"{a[0]} ^ {m}"
    if op == E.AND:
        return f"{a[0]} & {a[1]}"
    if op == E.OR:
        return f"{a[0]} | {a[1]}"
    if op == E.XOR:
        return f"{a[0]} ^ {a[1]}"
    if op == E.ITE:
        return f"{a[1]} if {a[0]} else {a[2]}"
    if op == E.EQ:
        return f"1 if {a[0]} == {a[1]} else 0"
    if op == E.NEQ:
        return f"1 if {a[0]} != {a[1]} else 0"
    if op == E.ULT:
        return f"1 if {a[0]} < {a[1]} else 0"
    if op == E.ULE:
        return f"1 if {a[0]} <= {a[1]} else 0"
    if op in (E.SLT, E.SLE):
        s = 1 << (node.args[0].width - 1)
        rel = "<" if op == E.SLT else "<="
        return f"1 if ({a[0]} ^ {s}) {rel} ({a[1]} ^ {s}) else 0"
    if op == E.ADD:
        return f"({a[0]} + {a[1]}) & {m}"
    if op == E.SUB:
        return f"({a[0]} - {a[1]}) & {m}"
    if op == E.SHL:
        return f"(({a[0]} << {a[1]}) & {m} if {a[1]} < {w} else 0)"
    if op == E.LSHR:
        return f"{a[0]} >> {a[1]}"
    if op == E.ASHR:
        s = 1 << (w - 1)
        return f"((({a[0]} ^ {s}) - {s}) >> {a[1]}) & {m}"
    if op == E.SLICE:
        hi, lo = node.params
        return f"({a[0]} >> {lo}) & {E.mask(hi - lo + 1)}"
    if op == E.CONCAT:
        parts = []
        shift = w
        for code, arg in zip(a, node.args):
            shift -= arg.width
            parts.append(f"({code} << {shift})" if shift else code)
        return " | ".join(parts)
    if op == E.ZEXT:
        return a[0]
    if op == E.SEXT:
        s = 1 << (node.args[0].width - 1)
        return f"(({a[0]} ^ {s}) - {s}) & {m}"
    raise ValueError(f"cannot compile {op}")


def simulator(ts: TransitionSystem) -> Simulator:
    """Full-observation simulator, cached on the system."""
    sim = ts.meta.get("_compiled")
    if sim is None:
        sim = Simulator(ts)
        ts.meta["_compiled"] = sim
    return sim


def eval_step(ts: TransitionSystem, state: Mapping[str, int], inputs: Mapping[str, int]):
    """One clock edge: ``(next_state, wire_values)`` for a total state and input vector."""
    sim = simulator(ts)
    regs = [state[n] for n in sim.reg_names]
    ins = [inputs[n] for n in sim.in_names]
    nxt, obs, _ = sim.step(regs, ins)
    return dict(zip(sim.reg_names, nxt)), dict(zip(sim.observe, obs))


def assumptions_hold(ts: TransitionSystem, state: Mapping[str, int], inputs: Mapping[str, int]) -> bool:
    sim = simulator(ts)
    regs = [state[n] for n in sim.reg_names]
    ins = [inputs[n] for n in sim.in_names]
    return sim.step(regs, ins)[2]
