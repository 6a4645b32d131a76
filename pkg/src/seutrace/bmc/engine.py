"""Property checking: BMC falsification, k-induction proofs, cover reachability.

Each check owns one incremental solver over a lazily unrolled copy of the
system restricted to the property's cone of influence.  Frame ``t`` has an
assumption literal ``A_t``; a violation at ``t`` needs ``A_0..A_t`` (prefix
semantics), so later frames never constrain an earlier witness.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from ..fault import FaultPort, without_faults
from ..ir import expr as E
from ..ir.coi import coi, expr_roots
from ..ir.coi import reduce as _reduce
from ..ir.system import WIRE, Net, TransitionSystem
from ..props.elaborate import Property, attach_aux
from ..sat.backends import SatSolver, make_solver
from .trace import Trace, simulate_inputs
from .unroll import Unroller, lits_value

PROVEN = "Proven"
BOUNDED = "BoundedProven"
FAILED = "Failed"
VERDICTS = (PROVEN, BOUNDED, FAILED)

DEFAULT_K = 12
DEFAULT_BUDGET = 60.0


class EngineError(RuntimeError):
    """Internal inconsistency (a witness that does not replay, for instance)."""


class _Budget(Exception):
    pass


@dataclass
class CheckStats:
    solve_time: float = 0.0
    wall_time: float = 0.0
    variables: int = 0
    clauses: int = 0
    k_reached: int = -1
    solver_calls: int = 0
    budget_exceeded: bool = False
    method: str = ""
    induction_depth: int | None = None
    simple_path: bool = False


@dataclass
class CheckResult:
    property_name: str
    verdict: str
    k: int
    witness: Trace | None = None
    stats: CheckStats = field(default_factory=CheckStats)
    directive: str = "assert"

    @property
    def covered(self) -> bool:
        return self.directive == "cover" and self.verdict == FAILED

    @property
    def label(self) -> str:
        if self.directive == "cover":
            if self.verdict == FAILED:
                return f"Covered@{self.k}"
            return "Unreachable" if self.verdict == PROVEN else f"Uncovered({self.k})"
        if self.verdict == BOUNDED:
            return f"BoundedProven({self.k})"
        if self.verdict == FAILED:
            return f"Failed@{self.k}"
        return PROVEN


@dataclass
class CheckOptions:
    k_max: int = DEFAULT_K
    budget: float = DEFAULT_BUDGET
    solver: str = "auto"
    solver_command: str | None = None
    seed: int = 0
    induction: bool = True
    simple_path: bool = True
    coi: bool = True
    lemmas: bool = True
    # harvest only: (simple_path, depth) pairs tried in order; None means
    # plain depths 1 and 2, then simple-path induction at k_max
    harvest_schedule: tuple | None = None

    def make_solver(self) -> SatSolver:
        return make_solver(self.solver, command=self.solver_command, seed=self.seed)


# ------------------------------------------------------------ sessions


class _Session:
    """Unroller plus solver kept in sync; all solving goes through here."""

    def __init__(self, ts: TransitionSystem, roots, initial: bool, opts: CheckOptions, stats: CheckStats):
        self.u = Unroller(ts, roots, initial)
        self.s = opts.make_solver()
        self.sent = 0
        self.stats = stats
        self.prefix: list[int] = []
        self.model = None
        self._distinct: dict[tuple[int, int], int] = {}

    @property
    def g(self):
        return self.u.g

    def prefix_lit(self, t: int) -> int:
        """``A_0 & ... & A_t``."""
        while len(self.prefix) <= t:
            i = len(self.prefix)
            self.u.frame(i)
            a = self.u.assume_lits[i]
            self.prefix.append(a if i == 0 else self.g.AND(self.prefix[-1], a))
        return self.prefix[t]

    def solve(self, assumptions: Iterable[int], deadline: float) -> bool:
        cl = self.g.clauses
        if self.sent < len(cl):
            self.s.add_clauses(cl[self.sent:])
            self.sent = len(cl)
        self.s.ensure_vars(self.g.num_vars)
        left = deadline - time.monotonic()
        if left <= 0:
            raise _Budget()
        assumptions = [a for a in assumptions if a != 1]
        if -1 in assumptions:
            return False
        t0 = time.monotonic()
        res = self.s.solve(assumptions, budget=left)
        self.stats.solve_time += time.monotonic() - t0
        self.stats.solver_calls += 1
        self.stats.variables = max(self.stats.variables, self.g.num_vars)
        self.stats.clauses = max(self.stats.clauses, len(cl))
        if res is None:
            raise _Budget()
        self.model = self.s.model() if res else None
        return res

    def lit_true(self, lit: int) -> bool:
        if lit == 1:
            return True
        if lit == -1:
            return False
        return self.model[abs(lit)] == (lit > 0)

    def pin_lits(self, pins: Mapping[str, int]) -> list[int]:
        out = []
        for name, value in pins.items():
            bits = self.u.frozen.get(name)
            if bits is None:
                if name in self.u.cone:
                    raise ValueError(f"pinned input {name!r} is not frozen")
                continue
            out.extend(lit if value >> i & 1 else -lit for i, lit in enumerate(bits))
        return out

    def neq_clause(self, name: str, value: int) -> list[int] | None:
        bits = self.u.frozen.get(name)
        if bits is None:
            return None
        return [-lit if value >> i & 1 else lit for i, lit in enumerate(bits)]

    def distinct(self, i: int, j: int) -> int:
        key = (i, j)
        lit = self._distinct.get(key)
        if lit is None:
            fi, fj = self.u.frame(i), self.u.frame(j)
            diffs = []
            for r in self.u.regs:
                diffs.extend(self.g.XOR(a, b) for a, b in zip(fi[r], fj[r]))
            lit = self.g.OR_MANY(diffs)
            self._distinct[key] = lit
        return lit


def _bad_lit(sess: _Session, ob: E.Expr, t: int, cover: bool) -> int:
    lit = sess.u.lit(ob, t)
    return lit if cover else -lit


# ----------------------------------------------------------- utilities


def fault_free_view(ts: TransitionSystem) -> TransitionSystem:
    """``ts`` with faults disabled; a lockstep pair additionally has its
    faulty half merged onto the golden half where the two are provably equal."""
    port = ts.meta.get("fault_port")
    out = without_faults(ts, port) if port is not None else ts.copy()
    if out.meta.get("lockstep"):
        out = merge_lockstep_copies(out)
    return out


def merge_lockstep_copies(ts: TransitionSystem, a: str = "golden_", b: str = "faulty_") -> TransitionSystem:
    """Register correspondence between the two halves of a lockstep system.

    Hypothesis: every ``b``-register equals its ``a``-twin.  A pair survives
    when init values match and the renamed next-state function is the same
    hash-consed node; failing pairs are dropped until a fixpoint.  The
    survivors are equal in every reachable state (induction on the
    hypothesis), so their ``b`` nets become aliases of the ``a`` nets.
    """
    pairs = {}
    for n, reg in ts.registers.items():
        if n.startswith(b):
            twin = a + n[len(b):]
            other = ts.registers.get(twin)
            if other is not None and other.init == reg.init and other.net.width == reg.net.width:
                pairs[n] = twin
    wpairs = {}
    for n, (net, _) in ts.wires.items():
        if n.startswith(b):
            twin = a + n[len(b):]
            if twin in ts.wires and ts.wires[twin][0].width == net.width:
                wpairs[n] = twin
    order = ts.wire_order()
    while True:
        mapping = {n: E.ref(t, ts.net(t).width) for n, t in pairs.items()}
        # wires: keep those whose body maps onto the twin's body
        good_w = {}
        for n in order:
            if n not in wpairs:
                continue
            m = dict(mapping)
            m.update({x: E.ref(t, ts.net(t).width) for x, t in good_w.items()})
            if E.substitute(ts.wires[n][1], m) is ts.wires[wpairs[n]][1]:
                good_w[n] = wpairs[n]
        mapping.update({n: E.ref(t, ts.net(t).width) for n, t in good_w.items()})
        bad = [n for n, t in pairs.items() if E.substitute(ts.registers[n].next, mapping) is not ts.registers[t].next]
        if not bad:
            break
        for n in bad:
            del pairs[n]
    out = ts.copy()
    for n, t in pairs.items():
        w = ts.registers[n].net.width
        del out.registers[n]
        out.wires[n] = (Net(n, w, WIRE), E.ref(t, w))
    for n, t in good_w.items():
        out.wires[n] = (out.wires[n][0], E.ref(t, out.wires[n][0].width))
    out._dirty()
    out.validate()
    return out


def coi_reduce(ts: TransitionSystem, prop: Property) -> TransitionSystem:
    """Copy of ``ts`` (with the property's monitors) restricted to the property's cone."""
    return _reduce(attach_aux(ts, [prop]), prop.nets)


def property_cone(ts: TransitionSystem, prop: Property) -> set[str]:
    full = attach_aux(ts, [prop])
    return coi(full, prop.nets | expr_roots(ex for _, ex in full.assumptions))


def fault_register(ts: TransitionSystem, bit: int) -> str:
    """Name of the (possibly prefixed) register holding census bit ``bit``."""
    census = ts.meta["census"]
    return ts.meta.get("fault_target_prefix", "") + census.entries[bit].register


# -------------------------------------------------------------- engine


class Checker:
    """Checks of one property on one system; reusable across pins."""

    def __init__(self, ts: TransitionSystem, prop: Property, opts: CheckOptions | None = None):
        self.opts = opts or CheckOptions()
        self.prop = prop
        self.ts = attach_aux(ts, [prop])
        self.port: FaultPort | None = self.ts.meta.get("fault_port")
        self.cover = prop.directive == "cover"
        if prop.directive == "assume":
            raise ValueError("assume properties constrain a system; they are not checked")
        self.roots = prop.nets if self.opts.coi else None
        self.cone = property_cone(ts, prop) if self.opts.coi else None
        self._ff: TransitionSystem | None = None

    # ------------------------------------------------------------ pins

    def bit_in_cone(self, bit: int) -> bool:
        if self.cone is None:
            return True
        return fault_register(self.ts, bit) in self.cone

    def _effective(self, pins: Mapping[str, int] | None) -> tuple[TransitionSystem, dict, str]:
        """System and pins to use; faults that cannot matter are dropped."""
        pins = dict(pins or {})
        port = self.port
        if port is None:
            return self.ts, pins, ""
        enable = pins.get(port.enable)
        loc = pins.get(port.location)
        if enable == 0 or (enable == 1 and loc is not None and
                           (loc >= port.total_bits or not self.bit_in_cone(loc))):
            if self._ff is None:
                self._ff = fault_free_view(self.ts)
            return self._ff, {}, "fault-free" if enable == 0 else "coi-pruned"
        return self.ts, pins, ""

    # ------------------------------------------------------------ check

    def check(self, pins: Mapping[str, int] | None = None, k_max: int | None = None) -> CheckResult:
        k_max = self.opts.k_max if k_max is None else k_max
        if k_max < 0:
            raise ValueError("k_max must be >= 0")
        stats = CheckStats()
        start = time.monotonic()
        deadline = start + self.opts.budget
        ts, pins, note = self._effective(pins)
        stats.method = note
        res = CheckResult(self.prop.name, BOUNDED, -1, None, stats, self.prop.directive)
        try:
            base = _Session(ts, self.roots, True, self.opts, stats)
            pl = base.pin_lits(pins)
            ob = self.prop.obligation
            for t in range(k_max + 1):
                bad = _bad_lit(base, ob, t, self.cover)
                if base.solve(pl + [base.prefix_lit(t), bad], deadline):
                    res.verdict, res.k = FAILED, t
                    res.witness = extract_trace(base, ts, t, self.prop)
                    stats.k_reached = t
                    stats.method = (note + " bmc").strip()
                    return res
                stats.k_reached = t
            res.k = k_max
            if self.opts.induction and k_max >= 1:
                lemma = self._lemma(ts, note, k_max) if (self.port is None or note) else None
                if lemma is not None:
                    stats.method = (note + " lemmas").strip()
                    note = stats.method
                depth = self._induction(ts, pins, k_max, deadline, stats, lemma)
                if depth is not None:
                    res.verdict = PROVEN
                    stats.induction_depth = depth
                    stats.method = (note + " k-induction").strip()
                    return res
            stats.method = (note + " bmc").strip()
        except _Budget:
            stats.budget_exceeded = True
            res.k = max(stats.k_reached, -1)
        finally:
            stats.wall_time = time.monotonic() - start
        return res

    def _lemma(self, ts: TransitionSystem, note: str, k_max: int) -> E.Expr | None:
        """Conjunction of the system's candidate invariants, if it is provable.

        Only used for fault-free views: a fault breaks these facts.
        """
        if not self.opts.lemmas or not ts.meta.get("invariants"):
            return None
        cache = ts.meta.setdefault("_lemma_cache", {})
        if k_max in cache:
            return cache[k_max]
        conj = E.all_of(*(ex for _, ex in ts.meta["invariants"]))
        lp = Property("invariants", "assert", conj, E.true(), conj)
        sub = CheckOptions(**{**self.opts.__dict__, "lemmas": False, "coi": True})
        r = Checker(ts, lp, sub).check({}, k_max)
        cache[k_max] = conj if r.verdict == PROVEN else None
        return cache[k_max]

    def _induction(self, ts, pins, k_max, deadline, stats, lemma=None) -> int | None:
        roots = self.roots
        if lemma is not None and roots is not None:
            roots = set(roots) | E.refs(lemma)
        step = _Session(ts, roots, False, self.opts, stats)
        pl = step.pin_lits(pins)
        ob = self.prop.obligation
        modes = (False, True) if self.opts.simple_path else (False,)
        for sp in modes:
            for kk in range(1, k_max + 1):
                a = [step.prefix_lit(kk)]
                if lemma is not None:
                    a += [step.u.lit(lemma, t) for t in range(kk + 1)]
                a += [-_bad_lit(step, ob, t, self.cover) for t in range(kk)]
                a.append(_bad_lit(step, ob, kk, self.cover))
                if sp:
                    a += [step.distinct(i, j) for i in range(kk + 1) for j in range(i + 1, kk + 1)]
                if not step.solve(pl + a, deadline):
                    stats.simple_path = sp
                    return kk
        return None


def check_assert(ts: TransitionSystem, prop: Property, k_max: int = DEFAULT_K, pins: Mapping[str, int] | None = None,
                 **options) -> CheckResult:
    """BMC for cycles ``0..k_max``, then k-induction; Failed carries a replay-checked witness."""
    if prop.directive != "assert":
        raise ValueError(f"check_assert needs an assert property, got {prop.directive}")
    return Checker(ts, prop, CheckOptions(k_max=k_max, **options)).check(pins)


def check_cover(ts: TransitionSystem, prop: Property, k_max: int = DEFAULT_K, pins: Mapping[str, int] | None = None,
                **options) -> CheckResult:
    """Reachability of the cover condition; Failed here means Covered."""
    if prop.directive != "cover":
        raise ValueError(f"check_cover needs a cover property, got {prop.directive}")
    return Checker(ts, prop, CheckOptions(k_max=k_max, **options)).check(pins)


def check(ts: TransitionSystem, prop: Property, k_max: int = DEFAULT_K, pins: Mapping[str, int] | None = None,
          **options) -> CheckResult:
    return Checker(ts, prop, CheckOptions(k_max=k_max, **options)).check(pins)


# ------------------------------------------------------------ witnesses


def extract_trace(sess: _Session, ts: TransitionSystem, t: int, prop: Property | None = None) -> Trace:
    """Witness of length ``t + 1`` from the current model, re-simulated on the full system.

    Inputs outside the cone read as 0.  The cone registers of the model must
    agree with the simulation and the claim must hold at ``t``; anything
    else is an engine bug.
    """
    u, model = sess.u, sess.model
    frozen = {n: (lits_value(u.frozen[n], model) if n in u.frozen else 0) for n in ts.frozen}
    inputs = []
    for c in range(t + 1):
        f = u.frame(c)
        inputs.append({n: (lits_value(f[n], model) if n in f else 0) for n in ts.inputs if n not in ts.frozen})
    states, values, oks = simulate_inputs(ts, inputs, frozen)
    for c in range(t + 1):
        f = u.frame(c)
        for r in u.regs:
            if lits_value(f[r], model) != states[c][r]:
                raise EngineError(f"model/simulation mismatch at cycle {c} on {r}")
    if not all(oks):
        raise EngineError("witness violates an assumption")
    port = ts.meta.get("fault_port")
    tr = Trace(inputs, states, frozen, prop.name if prop else None,
               "cover" if prop is not None and prop.directive == "cover" else "violation", t)
    if port is not None and port.location in frozen:
        if frozen.get(port.enable, 0):
            tr.fault_location = frozen[port.location]
            tr.fault_time = frozen[port.time]
    if prop is not None:
        v = E.evaluate(prop.obligation, values[t])
        if bool(v) != (prop.directive == "cover"):
            raise EngineError(f"witness does not exhibit {prop.name} at cycle {t}")
    return tr


# ------------------------------------------------------------- harvest


@dataclass
class HarvestResult:
    """Per-bit outcome of a free-location run: ``failed`` bits carry witnesses."""

    failed: dict[int, CheckResult] = field(default_factory=dict)
    bounded: set[int] = field(default_factory=set)
    proven: dict[int, int] = field(default_factory=dict)
    unknown: set[int] = field(default_factory=set)
    stats: CheckStats = field(default_factory=CheckStats)


def harvest(ts: TransitionSystem, prop: Property, bits: Iterable[int], opts: CheckOptions | None = None,
            on_failed: Callable[[int, CheckResult], None] | None = None) -> HarvestResult:
    """Backward fault tracing over ``bits`` with the fault location left free.

    Every satisfying assignment names one faulty bit and its witness; the bit
    is blocked and the search repeats.  The final UNSAT bounds every bit that
    was never named.  Remaining bits then go through k-induction, again with
    the location free and found counterexamples blocked per depth.
    """
    opts = opts or CheckOptions()
    chk = Checker(ts, prop, opts)
    port = chk.port
    if port is None:
        raise ValueError("harvest needs a fault-instrumented system")
    k_max = opts.k_max
    out = HarvestResult()
    stats = out.stats
    start = time.monotonic()
    deadline = start + opts.budget
    todo = sorted(set(bits))
    live = [b for b in todo if chk.bit_in_cone(b)]
    pruned = [b for b in todo if not chk.bit_in_cone(b)]
    cover = chk.cover
    ob = prop.obligation
    try:
        # bits outside the cone behave like the fault-free system
        if pruned:
            r = chk.check({port.enable: 0})
            for b in pruned:
                _assign(out, b, r, "coi-pruned")
            if r.verdict == FAILED:
                raise EngineError(f"{prop.name} fails without any fault")
        if not live:
            return out
        base = _Session(chk.ts, chk.roots, True, opts, stats)
        pins = base.pin_lits({port.enable: 1})
        _restrict(base, port, live)
        bads = [base.g.AND(base.prefix_lit(t), _bad_lit(base, ob, t, cover)) for t in range(k_max + 1)]
        any_bad = base.g.OR_MANY(bads)
        remaining = set(live)
        while remaining:
            if not base.solve(pins + [any_bad], deadline):
                break
            loc = lits_value(base.u.frozen[port.location], base.model)
            t = next(i for i, b in enumerate(bads) if base.lit_true(b))
            if loc not in remaining:
                raise EngineError(f"solver named excluded bit {loc}")
            st = CheckStats(k_reached=t, method="harvest")
            res = CheckResult(prop.name, FAILED, t, extract_trace(base, chk.ts, t, prop), st, prop.directive)
            out.failed[loc] = res
            if on_failed:
                on_failed(loc, res)
            remaining.discard(loc)
            base.g.add_clause(base.neq_clause(port.location, loc))
        stats.k_reached = k_max
        if not opts.induction or not remaining:
            out.bounded |= remaining
            return out
        proven = _induction_harvest(chk, remaining, deadline, stats)
        out.proven.update(proven)
        out.bounded |= remaining - set(proven)
    except _Budget:
        stats.budget_exceeded = True
        decided = set(out.failed) | out.bounded | set(out.proven)
        out.unknown |= set(live) - decided
    finally:
        stats.wall_time = time.monotonic() - start
    return out


def _assign(out: HarvestResult, b: int, r: CheckResult, note: str) -> None:
    if r.verdict == PROVEN:
        out.proven[b] = r.stats.induction_depth or 0
    elif r.verdict == BOUNDED and not r.stats.budget_exceeded:
        out.bounded.add(b)
    elif r.verdict == BOUNDED:
        out.unknown.add(b)


def _restrict(sess: _Session, port: FaultPort, bits: list[int]) -> None:
    """Limit the frozen location to ``bits``."""
    allowed = set(bits)
    loc = sess.u.frozen.get(port.location)
    if loc is None:
        return
    hi = 1 << len(loc)
    if len(allowed) <= hi - len(allowed):
        lits = []
        for b in allowed:
            lits.append(sess.g.AND_MANY(l if b >> i & 1 else -l for i, l in enumerate(loc)))
        sess.g.add_clause([sess.g.OR_MANY(lits)])
    else:
        for b in range(hi):
            if b not in allowed:
                sess.g.add_clause(sess.neq_clause(port.location, b))


def _induction_harvest(chk: Checker, bits: set[int], deadline: float, stats: CheckStats) -> dict[int, int]:
    """k-induction for many fault locations at once; returns bit -> depth for proven bits."""
    opts, port, prop = chk.opts, chk.port, chk.prop
    ob, cover = prop.obligation, chk.cover
    proven: dict[int, int] = {}
    ff = chk._effective({port.enable: 0})[0]
    ff_step = _Session(ff, chk.roots, False, opts, stats)
    step = _Session(chk.ts, chk.roots, False, opts, stats)
    pins = step.pin_lits({port.enable: 1})
    _restrict(step, port, sorted(bits))
    left = set(bits)
    schedule = opts.harvest_schedule
    if schedule is None:
        schedule = [(False, kk) for kk in (1, 2) if kk <= opts.k_max]
        if opts.simple_path:
            schedule.append((True, opts.k_max))

    def obligations(sess: _Session, kk: int, sp: bool) -> list[int]:
        a = [sess.prefix_lit(kk)]
        a += [-_bad_lit(sess, ob, t, cover) for t in range(kk)]
        a.append(_bad_lit(sess, ob, kk, cover))
        if sp:
            a += [sess.distinct(i, j) for i in range(kk + 1) for j in range(i + 1, kk + 1)]
        return a

    for sp, kk in schedule:
        if not left:
            return proven
        if not 1 <= kk <= opts.k_max:
            raise ValueError(f"induction depth {kk} outside 1..{opts.k_max}")
        # a fault-free counterexample to the step is one for every bit
        if ff_step.solve(obligations(ff_step, kk, sp), deadline):
            continue
        act = step.g.new_var()
        failing = set()
        while True:
            if not step.solve(pins + [act] + obligations(step, kk, sp), deadline):
                break
            loc = lits_value(step.u.frozen[port.location], step.model)
            if loc not in left or loc in failing:
                raise EngineError(f"induction step named excluded bit {loc}")
            failing.add(loc)
            step.g.add_clause([-act] + step.neq_clause(port.location, loc))
        for b in left - failing:
            proven[b] = kk
            step.g.add_clause(step.neq_clause(port.location, b))
        left = failing
        stats.induction_depth = kk
        stats.simple_path = sp
    return proven
