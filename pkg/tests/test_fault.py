import random

import pytest
from hypothesis import given, settings, strategies as st

from seutrace.fault import instrument, pin_fault, without_faults
from seutrace.ir import Simulator
from seutrace.ir.system import NetlistError
from seutrace.rv32.core import Census

from tests.conftest import counter_system


def _census(ts):
    return Census([(n, r.net.width) for n, r in ts.registers.items()])


def _run(ts, inputs, cycles):
    sim = Simulator(ts)
    regs = sim.init()
    out = [dict(zip(sim.reg_names, regs))]
    for _ in range(cycles):
        regs, _, _ = sim.step(regs, [inputs.get(n, 0) for n in sim.in_names])
        out.append(dict(zip(sim.reg_names, regs)))
    return out


def test_enable_low_is_original_behaviour():
    ts = counter_system(4)
    fts, port = instrument(ts, _census(ts))
    a = _run(ts, {}, 20)
    b = _run(fts, {port.enable: 0, port.location: 1, port.time: 3}, 20)
    assert [s["c"] for s in a] == [s["c"] for s in b]


def test_flip_location_and_time():
    ts = counter_system(8)
    fts, port = instrument(ts, _census(ts))
    clean = _run(ts, {}, 10)
    hit = _run(fts, {port.enable: 1, port.location: 5, port.time: 3}, 10)
    for t in range(11):
        diff = clean[t]["c"] ^ hit[t]["c"]
        if t <= 3:
            assert diff == 0
        elif t == 4:
            assert diff == 1 << 5  # flip shows up in the state after cycle 3
    assert hit[4]["c"] == clean[4]["c"] ^ 32


def test_out_of_range_location_flips_nothing():
    ts = counter_system(3)
    fts, port = instrument(ts, _census(ts))
    assert port.total_bits == 3 and port.location_width == 2
    clean = _run(ts, {}, 10)
    hit = _run(fts, {port.enable: 1, port.location: 3, port.time: 2}, 10)
    assert [s["c"] for s in clean] == [s["c"] for s in hit]


def test_core_census_mismatch_rejected(core8):
    bad = Census([("pc_q", 32)])
    with pytest.raises(NetlistError, match="census"):
        instrument(core8.ts, bad)


def test_pin_ranges():
    ts = counter_system(3)
    fts, port = instrument(ts, _census(ts))
    with pytest.raises(ValueError):
        pin_fault(fts, port, bit=3)
    with pytest.raises(ValueError):
        pin_fault(fts, port, time=256)
    assert len(pin_fault(fts, port, bit=1, time=2)) == 3


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 15), st.integers(0, 20), st.integers(0, 30))
def test_single_fault_guarantee(loc, when, cycles):
    """At most one bit of one cycle differs from the fault-free transition."""
    ts = counter_system(4)
    from seutrace.ir import expr as E

    # a second register makes locations span two registers
    ts.add_register("d", 12, 7)
    ts.set_next("d", E.xor(ts.ref("d"), E.zext(ts.ref("c"), 12)))
    fts, port = instrument(ts, _census(ts))
    sim_f = Simulator(fts)
    sim = Simulator(ts)
    regs = sim_f.init()
    flips = 0
    for t in range(cycles):
        cur = dict(zip(sim_f.reg_names, regs))
        clean_next, _, _ = sim.step([cur[n] for n in sim.reg_names], [])
        regs, _, _ = sim_f.step(regs, [{port.enable: 1, port.location: loc, port.time: when}[n]
                                       for n in sim_f.in_names])
        nxt = dict(zip(sim_f.reg_names, regs))
        d = sum(bin(nxt[n] ^ v).count("1") for n, v in zip(sim.reg_names, clean_next))
        assert d <= 1
        if d:
            assert t == when and loc < 16
            flips += 1
    assert flips <= 1


def test_flip_at_write_is_not_masked(core8):
    """A flip lands on the value the register is written with in that cycle."""
    fts, port = instrument(core8.ts, core8.census)
    bit = core8.census.resolve("pc_q:4").bit_id
    sim = Simulator(fts)
    regs = sim.init()
    idle = {n: 0 for n in sim.in_names}
    idle.update({port.enable: 1, port.location: bit, port.time: 0})
    regs, _, _ = sim.step(regs, [idle[n] for n in sim.in_names])
    s = dict(zip(sim.reg_names, regs))
    clean = Simulator(core8.ts)
    r0, _, _ = clean.step(clean.init(), [0] * len(clean.in_names))
    assert s["pc_q"] == dict(zip(clean.reg_names, r0))["pc_q"] ^ 16


def test_without_faults_folds_masks(core8):
    fts, port = instrument(core8.ts, core8.census)
    clean = without_faults(fts, port)
    assert port.enable not in clean.inputs or port.enable in clean.frozen
    rng = random.Random(3)
    sim_a, sim_b = Simulator(core8.ts), Simulator(clean)
    ra, rb = sim_a.init(), sim_b.init()
    for _ in range(50):
        iv = {n: rng.getrandbits(core8.ts.inputs[n].width) for n in sim_a.in_names}
        ra, _, _ = sim_a.step(ra, [iv[n] for n in sim_a.in_names])
        rb, _, _ = sim_b.step(rb, [iv.get(n, 0) for n in sim_b.in_names])
        da, db = dict(zip(sim_a.reg_names, ra)), dict(zip(sim_b.reg_names, rb))
        assert all(db[n] == v for n, v in da.items())
