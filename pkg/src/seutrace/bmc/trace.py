"""Witness traces: extraction from models, text exchange format and replay."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..ir import expr as E
from ..ir.sim import Simulator
from ..ir.system import TransitionSystem


class ReplayError(RuntimeError):
    """A trace does not match the system it claims to come from."""


@dataclass
class Trace:
    """Per-cycle inputs and register states of one run from the initial state.

    ``inputs[t]`` holds every non-frozen input at cycle ``t``; frozen inputs
    sit in ``frozen``.  ``target`` is the cycle at which the claimed
    violation (or cover hit) occurs, normally the last one.
    """

    inputs: list[dict[str, int]]
    states: list[dict[str, int]]
    frozen: dict[str, int] = field(default_factory=dict)
    property_name: str | None = None
    kind: str = "violation"
    target: int | None = None
    fault_location: int | None = None
    fault_time: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def length(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return self.length

    def input_vector(self, t: int) -> dict[str, int]:
        v = dict(self.inputs[t])
        v.update(self.frozen)
        return v

    def values(self, ts: TransitionSystem, t: int) -> dict[str, int]:
        """Every net at cycle ``t`` (registers, inputs, wires)."""
        sim = _sim(ts)
        regs = [self.states[t][n] for n in sim.reg_names]
        iv = self.input_vector(t)
        ins = [iv[n] for n in sim.in_names]
        _, obs, _ = sim.step(regs, ins)
        out = dict(self.states[t])
        out.update(iv)
        out.update(zip(sim.observe, obs))
        return out

    # --------------------------------------------------------- text format

    def to_text(self) -> str:
        lines = [f"# trace length {self.length}"]
        if self.property_name:
            lines.append(f"# property {self.property_name}")
        lines.append(f"# kind {self.kind}")
        if self.target is not None:
            lines.append(f"# target {self.target}")
        if self.fault_location is not None:
            lines.append(f"# fault_location {self.fault_location}")
        if self.fault_time is not None:
            lines.append(f"# fault_time {self.fault_time}")
        for n, v in sorted(self.frozen.items()):
            lines.append(f"- frozen {n} {v:#x}")
        for t in range(self.length):
            for n, v in self.inputs[t].items():
                lines.append(f"{t} in {n} {v:#x}")
            for n, v in self.states[t].items():
                lines.append(f"{t} reg {n} {v:#x}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Trace:
        header: dict[str, str] = {}
        frozen: dict[str, int] = {}
        inputs: dict[int, dict[str, int]] = {}
        states: dict[int, dict[str, int]] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split(None, 1)
                if len(parts) == 2:
                    header[parts[0]] = parts[1].strip()
                continue
            tok = line.split()
            if len(tok) != 4:
                raise ValueError(f"trace line {lineno}: expected '<cycle> in|reg|frozen <net> <value>'")
            cyc, kind, net, val = tok
            try:
                value = int(val, 0)
            except ValueError:
                raise ValueError(f"trace line {lineno}: bad value {val!r}") from None
            if kind == "frozen":
                frozen[net] = value
                continue
            try:
                t = int(cyc)
            except ValueError:
                raise ValueError(f"trace line {lineno}: bad cycle {cyc!r}") from None
            if kind == "in":
                inputs.setdefault(t, {})[net] = value
            elif kind == "reg":
                states.setdefault(t, {})[net] = value
            else:
                raise ValueError(f"trace line {lineno}: unknown record kind {kind!r}")
        n = int(header.get("length", max(list(states) + [-1]) + 1))
        opt = lambda k: int(header[k]) if k in header else None  # noqa: E731
        return cls(
            inputs=[inputs.get(t, {}) for t in range(n)],
            states=[states.get(t, {}) for t in range(n)],
            frozen=frozen,
            property_name=header.get("property"),
            kind=header.get("kind", "violation"),
            target=opt("target"),
            fault_location=opt("fault_location"),
            fault_time=opt("fault_time"),
        )

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path: str) -> Trace:
        with open(path) as fh:
            return cls.from_text(fh.read())


def _sim(ts: TransitionSystem) -> Simulator:
    sim = ts.meta.get("_compiled")
    if sim is None:
        sim = Simulator(ts)
        ts.meta["_compiled"] = sim
    return sim


@dataclass
class ReplayReport:
    ok: bool
    states_match: bool
    assumptions_ok: bool
    mismatch: tuple[int, str] | None = None
    obligations: dict[str, bool] = field(default_factory=dict)
    message: str = ""


def simulate_inputs(ts: TransitionSystem, inputs: Sequence[dict[str, int]], frozen: dict[str, int] | None = None,
                    init: dict[str, int] | None = None, stop_on_assumption: bool = False):
    """Run ``ts`` from ``init`` (default: reset values); missing inputs read as 0.

    Returns ``(states, values, assumptions_ok)`` where ``values[t]`` holds all nets.
    """
    sim = _sim(ts)
    frozen = frozen or {}
    regs = [(init or {}).get(n, ts.registers[n].init) for n in sim.reg_names]
    states, values, oks = [], [], []
    for t, iv in enumerate(inputs):
        ins = [frozen[n] if n in frozen else iv.get(n, 0) for n in sim.in_names]
        nxt, obs, ok = sim.step(regs, ins)
        st = dict(zip(sim.reg_names, regs))
        vals = dict(st)
        vals.update(zip(sim.in_names, ins))
        vals.update(zip(sim.observe, obs))
        states.append(st)
        values.append(vals)
        oks.append(ok)
        if stop_on_assumption and not ok:
            break
        regs = list(nxt)
    return states, values, oks


def replay(ts: TransitionSystem, trace: Trace, obligations: Iterable | None = None, strict: bool = False) -> ReplayReport:
    """Re-simulate ``trace`` from reset and check states, assumptions and the claim.

    ``obligations`` are properties (or ``(name, expr, is_cover)`` triples);
    monitor nets of properties are added to ``ts`` first.
    An assertion passes replay when it is violated at ``trace.target`` and a
    cover when it is hit there; without a target the last cycle is used.
    ``strict`` raises :class:`ReplayError` on a state mismatch.
    """
    obligations = list(obligations or ())
    with_aux = [ob for ob in obligations if getattr(ob, "aux", ())]
    if with_aux:
        from ..props.elaborate import attach_aux

        ts = attach_aux(ts, with_aux)
    missing = [n for n in ts.inputs if n not in ts.frozen and trace.length and n not in trace.inputs[0]]
    missing += [n for n in ts.frozen if n not in trace.frozen]
    states, values, oks = simulate_inputs(ts, trace.inputs, trace.frozen)
    mismatch = None
    for t, st in enumerate(trace.states):
        for n, v in st.items():
            if n not in ts.registers:
                mismatch = (t, n)
                break
            if states[t][n] != v:
                mismatch = (t, n)
                break
        if mismatch:
            break
    rep = ReplayReport(ok=True, states_match=mismatch is None, assumptions_ok=all(oks), mismatch=mismatch)
    if mismatch is not None:
        rep.message = f"state mismatch at cycle {mismatch[0]} on {mismatch[1]}"
        if strict:
            raise ReplayError(rep.message)
    elif missing:
        rep.message = "trace does not drive input(s) " + ", ".join(sorted(missing)[:5])
    t_end = trace.target if trace.target is not None else trace.length - 1
    for ob in obligations or ():
        name, ex, is_cover = _ob(ob)
        if not 0 <= t_end < len(values):
            rep.obligations[name] = False
            continue
        v = E.evaluate(ex, values[t_end])
        rep.obligations[name] = bool(v) if is_cover else not v
    rep.ok = rep.states_match and rep.assumptions_ok and not missing and all(rep.obligations.values())
    if rep.ok is False and not rep.message:
        rep.message = "assumption violated" if not rep.assumptions_ok else "claimed violation not reproduced"
    return rep


def _ob(ob):
    if isinstance(ob, tuple):
        return ob
    return ob.name, ob.obligation, ob.directive == "cover"
