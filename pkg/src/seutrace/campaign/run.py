"""Per-bit, per-property verdicts aggregated into bit classifications."""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

from ..bmc.engine import BOUNDED, FAILED, PROVEN, CheckOptions, Checker, fault_register, harvest, property_cone
from ..bmc.trace import Trace, replay
from ..props.elaborate import Property
from ..rv32.core import Census
from .build import Target, build_target
from .config import CampaignConfig

SAFE = "Safe"
VULNERABLE = "Vulnerable"
UNDETERMINED = "Undetermined"

SDC, CRASH, HANG = "SDC", "Crash", "Hang"
FAMILY_EFFECT = {"strobe": SDC, "arch": SDC, "custom": SDC, "crash": CRASH, "hang": HANG}


class CampaignError(RuntimeError):
    """A check failed; the message names the property (and bit, if any)."""


@dataclass
class VerdictRecord:
    bit: int
    property: str
    verdict: str
    k: int
    method: str = ""
    trace: Trace | None = None
    replay_ok: bool | None = None
    budget_exceeded: bool = False
    cached: bool = False

    def to_json(self) -> dict:
        d = {"bit": self.bit, "property": self.property, "verdict": self.verdict, "k": self.k,
             "method": self.method, "replay_ok": self.replay_ok, "budget_exceeded": self.budget_exceeded}
        if self.trace is not None:
            d["trace"] = self.trace.to_text()
        return d

    @classmethod
    def from_json(cls, d: dict) -> VerdictRecord:
        tr = Trace.from_text(d["trace"]) if d.get("trace") else None
        return cls(d["bit"], d["property"], d["verdict"], d["k"], d.get("method", ""), tr,
                   d.get("replay_ok"), d.get("budget_exceeded", False), True)


@dataclass
class BitClassification:
    bit_id: int
    register: str
    bit_index: int
    verdicts: dict[str, str] = field(default_factory=dict)
    effects: frozenset = frozenset()
    label: str = UNDETERMINED
    score: int = 0
    coi_safe: bool = False

    @property
    def name(self) -> str:
        return f"{self.register}:{self.bit_index}"

    @property
    def display(self) -> str:
        if self.label == VULNERABLE:
            return f"Vulnerable({','.join(sorted(self.effects))})"
        return self.label


def classify(bit_id: int, census: Census, verdicts: dict[str, str], families: dict[str, str],
             coi_safe: bool = False) -> BitClassification:
    e = census.entries[bit_id]
    failed = [p for p, v in verdicts.items() if v == FAILED]
    effects = frozenset(FAMILY_EFFECT[families[p]] for p in failed)
    if failed:
        label = VULNERABLE
    elif all(v == PROVEN for v in verdicts.values()):
        label = SAFE
    else:
        label = UNDETERMINED
    return BitClassification(bit_id, e.register, e.bit, dict(verdicts), effects, label, len(failed), coi_safe)


def rank_bits(classifications: Iterable[BitClassification]) -> list[BitClassification]:
    """Most susceptible first; ties by register name, then bit index."""
    return sorted(classifications, key=lambda c: (-c.score, c.register, c.bit_index))


# ---------------------------------------------------------------- cache


class VerdictCache:
    """Append-only JSON-lines store keyed by (core hash, bit, property, k_max)."""

    def __init__(self, path: str | None):
        self.path = path
        self.data: dict[tuple, dict] = {}
        if path and os.path.exists(path):
            with open(path) as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        d = json.loads(line)
                    except json.JSONDecodeError:
                        continue  # a line cut short by an interrupted run
                    self.data[tuple(d["key"])] = d["record"]

    @staticmethod
    def key(core_hash: str, bit: int, prop_key: str, k_max: int) -> tuple:
        return (core_hash, bit, prop_key, k_max)

    def get(self, key: tuple) -> VerdictRecord | None:
        d = self.data.get(key)
        return VerdictRecord.from_json(d) if d is not None else None

    def put_many(self, items: list[tuple[tuple, VerdictRecord]]) -> None:
        if not self.path:
            return
        with open(self.path, "a") as fh:
            for key, rec in items:
                if rec.budget_exceeded:
                    continue  # undecided within budget: worth retrying
                d = rec.to_json()
                self.data[key] = d
                fh.write(json.dumps({"key": list(key), "record": d}) + "\n")


# ----------------------------------------------------------- dispatching


def check_options(config: CampaignConfig, **kw) -> CheckOptions:
    base = dict(k_max=config.k_max, budget=config.budget, solver=config.solver,
                solver_command=config.solver_command, induction=config.induction)
    base.update(kw)
    return CheckOptions(**base)


def _replay_ok(ts, prop: Property, tr: Trace) -> bool:
    rep = replay(ts, tr, [prop])
    return rep.ok


def run_property(target: Target, prop: Property, bits: list[int], opts: CheckOptions,
                 mode: str) -> tuple[list[VerdictRecord], int]:
    """Verdicts of ``prop`` for ``bits`` plus the number of solver calls spent."""
    ts = target.system_for(prop)
    port = target.port
    out = []
    calls = 0
    if not bits:
        return out, calls
    pinned = list(bits)
    if mode == "harvest":
        hopts = CheckOptions(**{**opts.__dict__, "budget": opts.budget * max(1, len(bits))})
        h = harvest(ts, prop, bits, hopts)
        calls += h.stats.solver_calls
        for b, r in h.failed.items():
            out.append(VerdictRecord(b, prop.name, FAILED, r.k, "harvest", r.witness,
                                     _replay_ok(ts, prop, r.witness)))
        for b, d in h.proven.items():
            out.append(VerdictRecord(b, prop.name, PROVEN, d, f"harvest k-induction {d}"))
        for b in h.bounded:
            out.append(VerdictRecord(b, prop.name, BOUNDED, opts.k_max, "harvest bmc"))
        pinned = sorted(h.unknown)
    chk = Checker(ts, prop, opts)
    for b in pinned:
        r = chk.check({port.enable: 1, port.location: b})
        calls += r.stats.solver_calls
        rec = VerdictRecord(b, prop.name, r.verdict, r.k, "pinned " + r.stats.method, r.witness,
                            budget_exceeded=r.stats.budget_exceeded)
        if r.witness is not None:
            rec.replay_ok = _replay_ok(ts, prop, r.witness)
        out.append(rec)
    return sorted(out, key=lambda r: r.bit), calls


_WORKER_TARGETS: dict = {}


def _job(config: CampaignConfig, prop_name: str, bits: list[int], mode: str):
    """Worker entry point: inputs are plain data, the target is rebuilt locally."""
    key = repr(config)
    target = _WORKER_TARGETS.get(key)
    if target is None:
        target = _WORKER_TARGETS[key] = build_target(config)
    prop = target.property(prop_name)
    t0 = time.monotonic()
    try:
        recs, calls = run_property(target, prop, bits, check_options(config), mode)
    except Exception as e:
        raise CampaignError(f"{prop_name}: {type(e).__name__}: {e}") from e
    return recs, calls, time.monotonic() - t0


# ---------------------------------------------------------------- report


@dataclass
class Report:
    config: CampaignConfig
    census: Census
    bits: list[int]
    properties: list[str]
    families: dict[str, str]
    verdicts: dict[tuple[int, str], VerdictRecord]
    classifications: dict[int, BitClassification]
    baseline: dict[str, str]
    coi_safe: list[int]
    cones: dict[str, set[int]]
    consistency_flags: list[int] = field(default_factory=list)
    partial: bool = False
    wall_time: dict[str, float] = field(default_factory=dict)
    solver_calls: int = 0

    @property
    def total_bits(self) -> int:
        return len(self.bits)

    def table(self, family: str) -> dict[str, dict[str, int]]:
        rows = {}
        for p in self.properties:
            if self.families[p] != family:
                continue
            row = {PROVEN: 0, BOUNDED: 0, FAILED: 0}
            for b in self.bits:
                row[self.verdicts[(b, p)].verdict] += 1
            rows[p] = row
        return rows

    def tables(self) -> dict[str, dict[str, dict[str, int]]]:
        fams = []
        for p in self.properties:
            if self.families[p] not in fams:
                fams.append(self.families[p])
        return {f: self.table(f) for f in fams}

    def failed_bits(self, prop: str) -> set[int]:
        return {b for b in self.bits if self.verdicts[(b, prop)].verdict == FAILED}

    def vulnerable(self, family: str | None = None) -> set[int]:
        out = set()
        for p in self.properties:
            if family is None or self.families[p] == family:
                out |= self.failed_bits(p)
        return out

    def ranking(self) -> list[BitClassification]:
        return rank_bits(self.classifications[b] for b in self.bits)

    def replay_stats(self) -> dict[str, int]:
        checked = ok = 0
        for r in self.verdicts.values():
            if r.verdict == FAILED:
                checked += 1
                ok += bool(r.replay_ok)
        return {"witnesses": checked, "replayed_ok": ok, "mismatches": checked - ok}

    def counts(self) -> dict[str, int]:
        out = {SAFE: 0, VULNERABLE: 0, UNDETERMINED: 0}
        for b in self.bits:
            out[self.classifications[b].label] += 1
        return out


def _consistency_flags(report: Report) -> list[int]:
    """Bits one of strobe/arch calls vulnerable while the other proves safe."""
    fams = set(report.families.values())
    if not {"strobe", "arch"} <= fams:
        return []
    out = []
    for b in report.bits:
        v = report.classifications[b].verdicts
        by = {"strobe": [], "arch": []}
        for p, verdict in v.items():
            f = report.families[p]
            if f in by:
                by[f].append(verdict)
        s_fail, a_fail = FAILED in by["strobe"], FAILED in by["arch"]
        s_safe = all(x == PROVEN for x in by["strobe"])
        a_safe = all(x == PROVEN for x in by["arch"])
        if (s_fail and a_safe) or (a_fail and s_safe):
            out.append(b)
    return out


def run_campaign(config: CampaignConfig, progress: Callable[[str], None] | None = None,
                 target: Target | None = None) -> Report:
    """Baseline, COI pre-pass, per-property checks, classification."""
    say = progress or (lambda msg: None)
    target = target or build_target(config)
    census = target.census
    bits = config.select_bits(census)
    props = target.properties()
    fam = {p.name: p.family for p in props}
    opts = check_options(config)
    port = target.port
    wall: dict[str, float] = {}
    calls = 0

    # fault-free baseline: a property that fails without faults measures nothing
    baseline = {}
    for p in props:
        t0 = time.monotonic()
        r = Checker(target.system_for(p), p, opts).check({port.enable: 0})
        wall[p.family] = wall.get(p.family, 0.0) + time.monotonic() - t0
        calls += r.stats.solver_calls
        baseline[p.name] = r.label
        if r.verdict == FAILED:
            raise CampaignError(f"{p.name}: fails without any fault ({r.label})")

    # cone of influence per property, in census bit ids
    cones = {}
    for p in props:
        ts = target.system_for(p)
        cone = property_cone(ts, p)
        cones[p.name] = {b for b in range(census.total_bits) if fault_register(ts, b) in cone}
    union = set().union(*cones.values()) if cones else set()
    coi_safe = sorted(b for b in bits if b not in union) if config.coi_prepass else []
    say(f"{len(bits)} bits, {len(props)} properties, {len(coi_safe)} bits outside every cone")

    cache = VerdictCache(config.cache)
    verdicts: dict[tuple[int, str], VerdictRecord] = {}
    jobs = []
    for p in props:
        live = []
        pk = target.property_key(p)
        for b in bits:
            if config.coi_prepass and b not in cones[p.name]:
                verdicts[(b, p.name)] = VerdictRecord(b, p.name, PROVEN, 0, "coi")
                continue
            hit = cache.get(cache.key(target.fingerprint, b, pk, config.k_max))
            if hit is not None:
                verdicts[(b, p.name)] = hit
                continue
            live.append(b)
        jobs.append((p, live))

    def record(p: Property, recs: list[VerdictRecord], n_calls: int, secs: float) -> None:
        nonlocal calls
        calls += n_calls
        wall[p.family] = wall.get(p.family, 0.0) + secs
        pk = target.property_key(p)
        items = []
        for r in recs:
            if r.replay_ok is False:
                raise CampaignError(f"{p.name}, bit {census.entries[r.bit].label}: witness does not replay")
            verdicts[(r.bit, p.name)] = r
            items.append((cache.key(target.fingerprint, r.bit, pk, config.k_max), r))
        cache.put_many(items)
        n_fail = sum(r.verdict == FAILED for r in recs)
        say(f"{p.name}: {len(recs)} bits checked, {n_fail} failed, {secs:.1f}s")

    if config.workers > 1 and sum(1 for _, live in jobs if live) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futs = [(p, pool.submit(_job, config, p.name, live, config.mode)) for p, live in jobs if live]
            for p, f in futs:
                record(p, *f.result())
    else:
        for p, live in jobs:
            if not live:
                continue
            t0 = time.monotonic()
            try:
                recs, n_calls = run_property(target, p, live, opts, config.mode)
            except Exception as e:
                raise CampaignError(f"{p.name}: {type(e).__name__}: {e}") from e
            record(p, recs, n_calls, time.monotonic() - t0)

    partial = any(r.budget_exceeded for r in verdicts.values())
    coi_set = set(coi_safe)
    classes = {}
    for b in bits:
        v = {p.name: verdicts[(b, p.name)].verdict for p in props}
        classes[b] = classify(b, census, v, fam, b in coi_set)
    rep = Report(config, census, bits, [p.name for p in props], fam, verdicts, classes, baseline,
                 coi_safe, cones, partial=partial, wall_time=wall, solver_calls=calls)
    rep.consistency_flags = _consistency_flags(rep)
    return rep

