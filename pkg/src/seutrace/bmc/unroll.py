"""Time-frame expansion of a transition system into CNF."""

from __future__ import annotations

from typing import Iterable

from ..ir import expr as E
from ..ir.blast import blast
from ..ir.coi import coi, expr_roots
from ..ir.system import TransitionSystem
from ..sat.cnf import CnfBuilder, CnfFormula


class Unroller:
    """Lazily unrolled copy of ``ts`` restricted to the cone of ``roots``.

    Frame ``t`` maps every cone net to a list of literals (LSB first).  With
    ``initial=True`` registers start at their init values; otherwise frame 0
    holds fresh variables (the free start state of an induction step).  Frozen
    inputs get one set of variables shared by all frames.
    """

    def __init__(self, ts: TransitionSystem, roots: Iterable[str] | None = None, initial: bool = True,
                 builder: CnfBuilder | None = None):
        ts.validate()
        self.ts = ts
        self.g = builder or CnfBuilder()
        self.initial = initial
        if roots is None:
            self.cone = set(ts.inputs) | set(ts.registers) | set(ts.wires)
        else:
            self.cone = coi(ts, set(roots) | expr_roots(ex for _, ex in ts.assumptions))
        self.regs = [n for n in ts.registers if n in self.cone]
        self.inputs = [n for n in ts.inputs if n in self.cone]
        self.wires = [n for n in ts.wire_order() if n in self.cone]
        self.frames: list[dict[str, list[int]]] = []
        self._memo: list[dict] = []
        self.assume_lits: list[int] = []
        self.frozen: dict[str, list[int]] = {}
        for n in self.inputs:
            if n in ts.frozen:
                self.frozen[n] = self.g.new_vars(ts.inputs[n].width)

    @property
    def depth(self) -> int:
        return len(self.frames)

    def frame(self, t: int) -> dict[str, list[int]]:
        while len(self.frames) <= t:
            self._extend()
        return self.frames[t]

    def _extend(self) -> None:
        t = len(self.frames)
        g = self.g
        f: dict[str, list[int]] = {}
        memo: dict = {}
        if t == 0:
            for n in self.regs:
                reg = self.ts.registers[n]
                if self.initial:
                    f[n] = [g.TRUE if reg.init >> i & 1 else g.FALSE for i in range(reg.net.width)]
                else:
                    f[n] = g.new_vars(reg.net.width)
        else:
            prev, pmemo = self.frames[t - 1], self._memo[t - 1]
            leaf = lambda r: prev[r.params[0]]  # noqa: E731
            for n in self.regs:
                f[n] = blast(g, self.ts.registers[n].next, leaf, pmemo)
        for n in self.inputs:
            f[n] = self.frozen[n] if n in self.frozen else g.new_vars(self.ts.inputs[n].width)
        leaf = lambda r: f[r.params[0]]  # noqa: E731
        for n in self.wires:
            f[n] = blast(g, self.ts.wires[n][1], leaf, memo)
        self.frames.append(f)
        self._memo.append(memo)
        lits = [blast(g, ex, leaf, memo)[0] for _, ex in self.ts.assumptions]
        self.assume_lits.append(g.AND_MANY(lits))

    def expr_lits(self, expr: E.Expr, t: int) -> list[int]:
        """Literals of an arbitrary expression over cone nets at frame ``t``."""
        f = self.frame(t)
        return blast(self.g, expr, lambda r: f[r.params[0]], self._memo[t])

    def lit(self, expr: E.Expr, t: int) -> int:
        bits = self.expr_lits(expr, t)
        if len(bits) != 1:
            raise ValueError("expected a width-1 expression")
        return bits[0]

    def formula(self, k: int) -> CnfFormula:
        """Standalone CNF: init, transitions for cycles 0..k-1, assumptions at 0..k."""
        self.frame(k)
        f = CnfFormula(self.g.num_vars, [list(c) for c in self.g.clauses])
        for t in range(k + 1):
            a = self.assume_lits[t]
            if a != 1:
                f.clauses.append([a])
        return f

    def var_map(self, k: int) -> dict[tuple[int, str], list[int]]:
        """(cycle, net) -> literals for every cone net of frames 0..k."""
        self.frame(k)
        return {(t, n): list(bits) for t in range(k + 1) for n, bits in self.frames[t].items()}

    def values(self, model, t: int, names: Iterable[str] | None = None) -> dict[str, int]:
        f = self.frame(t)
        out = {}
        for n in names if names is not None else f:
            out[n] = lits_value(f[n], model)
        return out


def lits_value(bits: list[int], model) -> int:
    v = 0
    for i, lit in enumerate(bits):
        if model[abs(lit)] == (lit > 0):
            v |= 1 << i
    return v


def unroll(ts: TransitionSystem, k: int, roots: Iterable[str] | None = None) -> tuple[CnfFormula, dict]:
    """CNF for ``k`` steps from the initial state plus the per-cycle variable map."""
    if k < 0:
        raise ValueError("k must be >= 0")
    u = Unroller(ts, roots)
    return u.formula(k), u.var_map(k)
