"""Cone-of-influence analysis and reduction."""

from __future__ import annotations

from typing import Iterable

from . import expr as E
from .system import TransitionSystem


def coi(ts: TransitionSystem, roots: Iterable[str]) -> set[str]:
    """Least fixpoint of structural dependencies (wires and next-state functions) from ``roots``."""
    seen: set[str] = set()
    stack = list(roots)
    for r in stack:
        ts.net(r)
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        stack.extend(d for d in ts.deps(n) if d not in seen)
    return seen


def expr_roots(exprs: Iterable[E.Expr]) -> set[str]:
    out: set[str] = set()
    for ex in exprs:
        out |= E.refs(ex)
    return out


def reduce(ts: TransitionSystem, roots: Iterable[str], keep_assumptions: bool = True) -> TransitionSystem:
    """Copy of ``ts`` restricted to the cone of ``roots``.

    Assumptions are global constraints: their nets join the roots so that the
    reduced system admits exactly the traces of the full one, projected.
    """
    roots = set(roots)
    if keep_assumptions:
        roots |= expr_roots(ex for _, ex in ts.assumptions)
    cone = coi(ts, roots)
    out = TransitionSystem(name=ts.name + "_coi", meta={k: v for k, v in ts.meta.items() if not k.startswith("_")})
    for n, net in ts.inputs.items():
        if n in cone:
            out.inputs[n] = net
            if n in ts.frozen:
                out.frozen.add(n)
    for n, reg in ts.registers.items():
        if n in cone:
            out.registers[n] = reg
    for n, w in ts.wires.items():
        if n in cone:
            out.wires[n] = w
    out.assumptions = list(ts.assumptions) if keep_assumptions else []
    out.outputs = {a: n for a, n in ts.outputs.items() if n in cone}
    return out
