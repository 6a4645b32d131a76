"""Forward fault tracing: concrete golden/faulty runs and exhaustive campaigns.

This is the ground truth the formal flow is compared against.  Effects are
decided here in plain Python over simulated values, independently of the
property language:

* SDC: a retire-interface mismatch (``valid`` differs, or both cores retire
  and some compared field differs) at an observed cycle.  A retire the
  faulty core misses because it is entering or sitting in TRAP is left to
  the crash check.
* Crash: the faulty core's ``mcause_q`` holds an exception code the golden
  run never shows.
* Hang: the faulty core retires WFI while ``halt`` is low, or sits in RUN or
  TRAP without retiring for ``quiet_window`` consecutive cycles.

A fault at cycle ``c`` flips the bit in the state of cycle ``c + 1`` (the
XOR-at-write of the instrumented netlist).  Cycles ``0..horizon`` are
observed; a cycle whose environment assumptions fail ends the observation,
because no execution of the constrained system passes through it.
"""

from __future__ import annotations

import csv
import itertools
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .bmc.trace import Trace, replay as _replay
from .env import DMEM_RDATA, IMEM_WORD, ProgramImage
from .ir.sim import Simulator
from .ir.system import TransitionSystem
from .rv32 import isa
from .rv32.core import BOOT, RETIRE_FIELDS, SLEEP, TRAP, Census

SDC = "SDC"
CRASH = "Crash"
HANG = "Hang"
NONE = "None"
EFFECTS = (SDC, CRASH, HANG)

EXCEPTION_CODES = (0, 1, 2, 3, 5, 7, 11)
QUIET_WINDOW = 8
COMPARED = tuple(f for f in RETIRE_FIELDS if f != "halt")


class AssumptionViolation(RuntimeError):
    def __init__(self, cycle: int, names: Sequence[str] = ()):
        super().__init__(f"environment assumption violated at cycle {cycle}")
        self.cycle = cycle
        self.names = tuple(names)


class OracleBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Stimulus:
    """Everything the environment does not decide itself, per cycle.

    Concrete mode needs only the program (already attached to the system);
    symbolic mode reads ``imem_words[t]`` on the instruction bus.  Values past
    the end of a tuple hold the last entry (``NOP`` / 0 when empty).
    """

    program: ProgramImage | None = None
    imem_words: tuple[int, ...] = ()
    dmem_rdata: tuple[int, ...] = ()
    cycles: int = 0
    name: str = ""

    def vector(self, t: int) -> dict[str, int]:
        return {
            IMEM_WORD: _at(self.imem_words, t, isa.NOP_WORD),
            DMEM_RDATA: _at(self.dmem_rdata, t, 0),
        }

    def inputs(self, ts: TransitionSystem, n: int) -> list[dict[str, int]]:
        out = []
        for t in range(n):
            v = self.vector(t)
            out.append({k: v.get(k, 0) for k in ts.inputs if k not in ts.frozen})
        return out


def _at(seq, t, default):
    if not seq:
        return default
    return seq[t] if t < len(seq) else seq[-1]


@dataclass
class EffectRecord:
    bit_id: int
    cycle: int
    effects: frozenset = frozenset()
    first_divergence: int | None = None
    crash_codes: frozenset = frozenset()
    hang_kinds: frozenset = frozenset()
    stimulus: int = 0
    observed_until: int = 0

    @property
    def labels(self) -> frozenset:
        return self.effects if self.effects else frozenset({NONE})


# ------------------------------------------------------------ simulation


class _Runner:
    """Compiled simulator with only the nets the classifier looks at."""

    def __init__(self, ts: TransitionSystem, census: Census | None = None, literal_valid: bool = False):
        self.ts = ts
        self.literal_valid = literal_valid
        self.census = census or ts.meta["census"]
        observe = [f for f in RETIRE_FIELDS if f in ts.wires] + ["trap_enter"]
        self.sim = Simulator(ts, observe)
        self.regs = self.sim.reg_names
        self.reg_index = {n: i for i, n in enumerate(self.regs)}
        self.obs = {n: i for i, n in enumerate(observe)}
        self.i_fsm = self.reg_index["ctrl_fsm_cs"]
        self.i_mcause = self.reg_index["mcause_q"]
        for e in self.census.entries:
            if e.register not in self.reg_index:
                raise KeyError(f"census register {e.register!r} is not in {ts.name!r}")

    def input_rows(self, stim: Stimulus, n: int) -> list[list[int]]:
        rows = []
        for t in range(n):
            v = stim.vector(t)
            rows.append([v.get(k, 0) if k not in self.ts.frozen else 0 for k in self.sim.in_names])
        return rows

    def run(self, regs: list[int], rows: Sequence[list[int]], t0: int, t1: int):
        """States, observations and assumption flags for cycles ``t0..t1``."""
        states, obs, oks = [], [], []
        regs = list(regs)
        for t in range(t0, t1 + 1):
            nxt, o, ok = self.sim.step(regs, rows[t])
            states.append(regs)
            obs.append(o)
            oks.append(ok)
            regs = list(nxt)
        return states, obs, oks, regs


def simulate(ts: TransitionSystem, stimulus: Stimulus, n: int, check_assumptions: bool = True) -> Trace:
    """``n`` cycles from reset; raises :class:`AssumptionViolation` if the stimulus breaks one."""
    sim = Simulator(ts, [])
    inputs = stimulus.inputs(ts, n)
    regs = sim.init()
    states = []
    for t in range(n):
        ins = [inputs[t].get(k, 0) for k in sim.in_names]
        nxt, _, ok = sim.step(regs, ins)
        if check_assumptions and not ok:
            raise AssumptionViolation(t, _failed_assumptions(ts, dict(zip(sim.reg_names, regs)), inputs[t]))
        states.append(dict(zip(sim.reg_names, regs)))
        regs = list(nxt)
    return Trace(inputs, states, {n: 0 for n in ts.frozen}, kind="run")


def _failed_assumptions(ts, state, inputs):
    from .ir import expr as E
    from .ir.sim import eval_step

    _, vals = eval_step(ts, state, {k: inputs.get(k, 0) for k in ts.inputs})
    vals.update(state)
    vals.update(inputs)
    return [name for name, ex in ts.assumptions if not E.evaluate(ex, vals)]


def retired(ts: TransitionSystem, trace: Trace) -> list[dict[str, int]]:
    """Retire records (one dict of retire fields per retiring cycle)."""
    out = []
    for t in range(trace.length):
        v = trace.values(ts, t)
        if v["valid"]:
            out.append({f: v[f] for f in RETIRE_FIELDS} | {"cycle": t})
    return out


# --------------------------------------------------------- classification


class _Observer:
    """Incremental effect detector over one run (golden or faulty)."""

    def __init__(self, runner: _Runner, window: int):
        self.r = runner
        self.window = window
        self.quiet = 0
        self.prev_fsm = BOOT

    def copy(self) -> _Observer:
        o = _Observer(self.r, self.window)
        o.quiet, o.prev_fsm = self.quiet, self.prev_fsm
        return o

    def step(self, regs, obs) -> tuple[int | None, str | None]:
        """(crash code, hang kind) seen at this cycle."""
        r = self.r
        fsm = regs[r.i_fsm]
        valid = obs[r.obs["valid"]]
        if valid:
            q = 0
        elif fsm == self.prev_fsm and self.quiet:
            q = min(self.quiet + 1, self.window)
        else:
            q = 1
        self.quiet, self.prev_fsm = q, fsm
        code = regs[r.i_mcause]
        crash = code if code in EXCEPTION_CODES else None
        hang = None
        if valid and not obs[r.obs["halt"]] and obs[r.obs["insn"]] == isa.WFI_WORD:
            hang = "wfi"
        elif fsm not in (BOOT, SLEEP) and q >= self.window:
            hang = "dead_state"
        return crash, hang


def _sdc(r: _Runner, go, fo, fsm: int) -> bool:
    iv = r.obs["valid"]
    if go[iv] != fo[iv]:
        # a retire lost to a trap counts as a crash only
        return r.literal_valid or not (fo[r.obs["trap_enter"]] or fsm == TRAP)
    if not go[iv]:
        return False
    return any(go[r.obs[f]] != fo[r.obs[f]] for f in COMPARED if f != "valid")


@dataclass
class _Golden:
    states: list
    obs: list
    observers: list  # observer state before each cycle
    last_ok: int     # last cycle with all assumptions holding so far
    codes: set
    hangs: set


def _golden(r: _Runner, rows, horizon: int, window: int) -> _Golden:
    states, obs, oks, _ = r.run(r.sim.init(), rows, 0, horizon)
    ob = _Observer(r, window)
    observers, codes, hangs = [], set(), set()
    last_ok = -1
    for t in range(horizon + 1):
        if not oks[t]:
            break
        last_ok = t
        observers.append(ob.copy())
        c, h = ob.step(states[t], obs[t])
        if c is not None:
            codes.add(c)
        if h is not None:
            hangs.add(h)
    return _Golden(states, obs, observers, last_ok, codes, hangs)


def _classify(r: _Runner, g: _Golden, rows, bit_id: int, cycle: int, horizon: int, window: int,
              stim_index: int = 0) -> EffectRecord:
    rec = EffectRecord(bit_id, cycle, stimulus=stim_index)
    start = cycle + 1
    if start > g.last_ok:
        rec.observed_until = g.last_ok
        return rec
    entry = r.census.entries[bit_id]
    regs = list(g.states[start])
    ri = r.reg_index[entry.register]
    regs[ri] ^= 1 << entry.bit
    ob = g.observers[start].copy()
    effects, codes, hangs = set(), set(), set()
    first = None
    t = start
    rec.observed_until = horizon
    while t <= horizon:
        nxt, o, ok = r.sim.step(regs, rows[t])
        if not ok:
            rec.observed_until = t - 1
            break
        hit = False
        if t > g.last_ok:
            # golden cannot be compared past its own assumption cut
            rec.observed_until = t - 1
            break
        if _sdc(r, g.obs[t], o, regs[r.i_fsm]):
            effects.add(SDC)
            hit = True
        c, h = ob.step(regs, o)
        if c is not None and c not in g.codes:
            effects.add(CRASH)
            codes.add(c)
            hit = True
        if h is not None and h not in g.hangs:
            effects.add(HANG)
            hangs.add(h)
            hit = True
        if hit and first is None:
            first = t
        regs = list(nxt)
        t += 1
        # reconverged: everything from here on repeats the golden run
        if t <= g.last_ok and not effects and regs == g.states[t] and _same_obs(ob, g.observers[t]):
            break
    rec.effects = frozenset(effects)
    rec.first_divergence = first
    rec.crash_codes = frozenset(codes)
    rec.hang_kinds = frozenset(hangs)
    return rec


def _same_obs(a: _Observer, b: _Observer) -> bool:
    return a.quiet == b.quiet and a.prev_fsm == b.prev_fsm


class Oracle:
    """Golden runs are computed once per stimulus and reused for every fault."""

    def __init__(self, ts: TransitionSystem, stimuli: Sequence[Stimulus] | Stimulus, horizon: int,
                 quiet_window: int = QUIET_WINDOW, census: Census | None = None, literal_valid: bool = False):
        if "fault_port" in ts.meta:
            raise ValueError("the oracle injects faults itself; pass the uninstrumented system")
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self.ts = ts
        self.stimuli = [stimuli] if isinstance(stimuli, Stimulus) else list(stimuli)
        if not self.stimuli:
            raise ValueError("at least one stimulus is needed")
        self.horizon = horizon
        self.window = quiet_window
        self.runner = _Runner(ts, census, literal_valid)
        self.rows = [self.runner.input_rows(s, horizon + 1) for s in self.stimuli]
        self.golden = [_golden(self.runner, rows, horizon, quiet_window) for rows in self.rows]

    @property
    def census(self) -> Census:
        return self.runner.census

    def inject(self, bit_id: int, cycle: int, stimulus: int = 0) -> EffectRecord:
        if not 0 <= bit_id < self.census.total_bits:
            raise ValueError(f"bit id {bit_id} outside census")
        if not 0 <= cycle < self.horizon:
            raise ValueError(f"injection cycle {cycle} outside 0..{self.horizon - 1}")
        return _classify(self.runner, self.golden[stimulus], self.rows[stimulus], bit_id, cycle,
                         self.horizon, self.window, stimulus)

    def bit_effects(self, bit_id: int) -> tuple[frozenset, EffectRecord | None]:
        """Union over every (cycle, stimulus); also the earliest record with an effect."""
        acc: set = set()
        best = None
        for s in range(len(self.stimuli)):
            for c in range(self.horizon):
                rec = self.inject(bit_id, c, s)
                if rec.effects:
                    acc |= rec.effects
                    if best is None or (rec.first_divergence, rec.cycle) < (best.first_divergence, best.cycle):
                        best = rec
        return frozenset(acc), best


def inject_and_classify(ts: TransitionSystem, stimulus: Stimulus, bit: int, cycle: int, horizon: int,
                        quiet_window: int = QUIET_WINDOW) -> EffectRecord:
    return Oracle(ts, stimulus, horizon, quiet_window).inject(bit, cycle)


@dataclass
class CampaignResult:
    effects: dict[int, frozenset] = field(default_factory=dict)
    evidence: dict[int, EffectRecord] = field(default_factory=dict)
    census: Census | None = None
    partial: bool = False
    runs: int = 0
    wall_time: float = 0.0

    def labels(self, bit_id: int) -> frozenset:
        return self.effects[bit_id] or frozenset({NONE})

    def vulnerable(self) -> set[int]:
        return {b for b, e in self.effects.items() if e}

    def rows(self) -> list[dict]:
        out = []
        for b in sorted(self.effects):
            e = self.census.entries[b]
            ev = self.evidence.get(b)
            out.append({
                "bit_id": b,
                "register_name": e.register,
                "bit_index": e.bit,
                "effects": "|".join(sorted(self.labels(b))),
                "first_divergence_cycle": "" if ev is None else ev.first_divergence,
                "evidence_ref": "" if ev is None else f"stim{ev.stimulus}@c{ev.cycle}",
            })
        return out

    def write_csv(self, path: str) -> None:
        rows = self.rows()
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["bit_id"])
            w.writeheader()
            w.writerows(rows)


def exhaustive_campaign(ts: TransitionSystem, stimuli: Sequence[Stimulus] | Stimulus, horizon: int,
                        bits: Iterable[int] | None = None, quiet_window: int = QUIET_WINDOW,
                        budget: float | None = None, literal_valid: bool = False) -> CampaignResult:
    """Effect set per bit: union over every injection cycle and stimulus.

    ``literal_valid`` also counts a retire lost to a faulty-core trap as SDC.
    """
    start = time.monotonic()
    orc = Oracle(ts, stimuli, horizon, quiet_window, literal_valid=literal_valid)
    out = CampaignResult(census=orc.census)
    todo = range(orc.census.total_bits) if bits is None else sorted(set(bits))
    for b in todo:
        if budget is not None and time.monotonic() - start > budget:
            out.partial = True
            break
        eff, ev = orc.bit_effects(b)
        out.effects[b] = eff
        if ev is not None:
            out.evidence[b] = ev
        out.runs += horizon * len(orc.stimuli)
    out.wall_time = time.monotonic() - start
    return out


def golden_sanity(ts: TransitionSystem, stimuli: Sequence[Stimulus] | Stimulus, horizon: int,
                  quiet_window: int = QUIET_WINDOW) -> dict:
    """Fault-free row: effects seen by the golden run itself (expected empty)."""
    orc = Oracle(ts, stimuli, horizon, quiet_window)
    return {i: (sorted(g.codes), sorted(g.hangs), g.last_ok) for i, g in enumerate(orc.golden)}


# ----------------------------------------------------- symbolic stimuli


def enumerate_stimuli(ts: TransitionSystem, pool: Sequence[int], fetches: int, horizon: int,
                      dmem: Sequence[int] = (0,)) -> list[Stimulus]:
    """Every way to answer the first ``fetches`` golden fetches from ``pool``.

    The word on the bus is held between grants; later fetches read ``NOP``.
    Only tiny bounds are meant here (at most three fetched instructions).
    """
    if fetches > 3:
        raise ValueError("symbolic enumeration is limited to three fetched instructions")
    if IMEM_WORD not in ts.inputs:
        raise ValueError("system has no symbolic instruction input")
    sim = Simulator(ts, [])
    i_req = sim.reg_names.index("env_imem_req_q")
    out = []
    for combo in itertools.product(pool, repeat=fetches):
        for d in dmem:
            words = []
            regs = sim.init()
            k = 0
            cur = isa.NOP_WORD
            for t in range(horizon + 1):
                if regs[i_req]:
                    cur = combo[k] if k < len(combo) else isa.NOP_WORD
                    k += 1
                words.append(cur)
                ins = [cur if n == IMEM_WORD else (d if n == DMEM_RDATA else 0) for n in sim.in_names]
                regs = list(sim.step(regs, ins)[0])
            name = "+".join(f"{w:08x}" for w in combo) + f"/d{d:x}"
            out.append(Stimulus(None, tuple(words), (d,), horizon + 1, name))
    return out


def replay(ts: TransitionSystem, trace: Trace, obligations=None, strict: bool = False):
    """Re-simulate a witness from reset; see :func:`seutrace.bmc.trace.replay`."""
    return _replay(ts, trace, obligations, strict)
