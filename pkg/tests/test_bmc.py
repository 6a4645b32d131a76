import pytest
from hypothesis import given, settings, strategies as st

from seutrace.bmc import (BOUNDED, FAILED, PROVEN, CheckOptions, Checker, Trace, check, check_assert, check_cover,
                          coi_reduce, harvest, replay, unroll)
from seutrace.bmc.unroll import lits_value
from seutrace.fault import instrument
from seutrace.ir import expr as E
from seutrace.props.elaborate import compile_property
from seutrace.rv32.core import Census
from seutrace.sat.cdcl import solve_cnf
from seutrace.sat.cnf import parse_dimacs
from tests.conftest import counter_system


def wrap_counter(width=4, top=7):
    ts = counter_system(width)
    c = ts.ref("c")
    ts.set_next("c", E.ite(E.eq(c, top), E.const(width, 0), c + 1))
    ts.validate()
    return ts


def prop(ts, text, name="p"):
    return compile_property(text, ts, name=name)


def test_counter_reaches_seven():
    ts = counter_system(4)
    r = check_assert(ts, prop(ts, "assert property (c != 4'd7);"), k_max=10)
    assert r.verdict == FAILED and r.k == 7 and r.label == "Failed@7"
    assert [s["c"] for s in r.witness.states] == list(range(8))
    assert replay(ts, r.witness, [prop(ts, "assert property (c != 4'd7);")]).ok


def test_counter_bound_needs_induction():
    ts = wrap_counter()
    r = check_assert(ts, prop(ts, "assert property (c <= 4'd7);"), k_max=12)
    assert r.verdict == PROVEN and r.stats.method == "k-induction"
    r2 = check_assert(ts, prop(ts, "assert property (c <= 4'd7);"), k_max=12, induction=False)
    assert r2.verdict == BOUNDED and r2.label == "BoundedProven(12)"


def test_unroll_counter_values():
    ts = counter_system(3)
    f, vm = unroll(ts, 5)
    sat, model = solve_cnf(f.num_vars, f.clauses)
    assert sat
    assert [lits_value(vm[(t, "c")], model) for t in range(6)] == [0, 1, 2, 3, 4, 5]
    with pytest.raises(ValueError):
        unroll(ts, -1)


def test_unroll_exports_dimacs():
    ts = counter_system(3)
    f, vm = unroll(ts, 3)
    g = parse_dimacs(f.to_dimacs())
    assert g.num_vars == f.num_vars and g.clauses == f.clauses
    # forcing an impossible value at cycle 3 is UNSAT
    lits = vm[(3, "c")]
    clauses = g.clauses + [[-l] if (5 >> i) & 1 == 0 else [l] for i, l in enumerate(lits)]
    assert not solve_cnf(g.num_vars, clauses)[0]


def test_cover_unreachable_and_hit():
    ts = wrap_counter()
    r = check_cover(ts, prop(ts, "cover property (c == 4'd9);"), k_max=10, induction=False)
    assert r.label == "Uncovered(10)" and not r.covered
    r = check_cover(ts, prop(ts, "cover property (c == 4'd5);"), k_max=10)
    assert r.covered and r.k == 5 and r.witness.length == 6
    with pytest.raises(ValueError):
        check_cover(ts, prop(ts, "assert property (c == 4'd5);"))


def test_coi_reduce_keeps_verdict():
    ts = counter_system(4)
    ts.add_register("junk", 8, 3)
    ts.set_next("junk", ts.ref("junk") + 3)
    ts.validate()
    p = prop(ts, "assert property (c != 4'd9);")
    small = coi_reduce(ts, p)
    assert "junk" not in small.registers
    full = check_assert(ts, p, k_max=12, coi=False)
    red = check_assert(small, p, k_max=12)
    assert (full.verdict, full.k) == (red.verdict, red.k) == (FAILED, 9)


def test_trace_text_round_trip(tmp_path):
    ts = counter_system(4)
    p = prop(ts, "assert property (c != 4'd3);")
    r = check_assert(ts, p, k_max=5)
    path = tmp_path / "w.trace"
    r.witness.save(str(path))
    back = Trace.load(str(path))
    assert back.states == r.witness.states and back.target == r.witness.target
    assert replay(ts, back, [p]).ok


def test_tampered_trace_is_rejected():
    ts = counter_system(4)
    p = prop(ts, "assert property (c != 4'd3);")
    tr = check_assert(ts, p, k_max=5).witness
    tr.states[2]["c"] = 9
    rep = replay(ts, tr, [p])
    assert not rep.ok and rep.mismatch == (2, "c")
    with pytest.raises(ValueError):
        Trace.from_text("0 in x\n")


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 14), st.integers(0, 14))
def test_verdict_monotone_in_depth(target, k):
    ts = counter_system(4)
    p = prop(ts, f"assert property (c != 4'd{target});")
    a = check_assert(ts, p, k_max=k, induction=False)
    b = check_assert(ts, p, k_max=k + 1, induction=False)
    if a.verdict == FAILED:
        assert b.verdict == FAILED and b.k == a.k
    assert a.verdict == (FAILED if target <= k else BOUNDED)


def _faulty_counter():
    ts = wrap_counter()
    fts, port = instrument(ts, Census([(n, r.net.width) for n, r in ts.registers.items()]))
    return fts, port


def test_fault_breaks_invariant_only_on_high_bit():
    fts, port = _faulty_counter()
    p = prop(fts, "assert property (c <= 4'd7);")
    chk = Checker(fts, p, CheckOptions(k_max=6))
    for bit in range(4):
        r = chk.check({port.enable: 1, port.location: bit})
        assert (r.verdict == FAILED) == (bit == 3)
        if r.verdict == FAILED:
            assert r.witness.fault_location == 3
            assert replay(fts, r.witness, [p]).ok


def test_harvest_agrees_with_pinned():
    fts, port = _faulty_counter()
    p = prop(fts, "assert property (c != 4'd12);")
    h = harvest(fts, p, range(4), CheckOptions(k_max=8))
    pinned = {b: check(fts, p, 8, {port.enable: 1, port.location: b}).verdict for b in range(4)}
    assert {b for b, v in pinned.items() if v == FAILED} == set(h.failed)
    for b, res in h.failed.items():
        assert replay(fts, res.witness, [p]).ok


def test_fault_free_failure_taints_every_bit():
    # a property broken without faults is broken for every location; campaigns
    # catch this with their fault-free baseline before harvesting
    fts, port = _faulty_counter()
    p = prop(fts, "assert property (c != 4'd2);")
    assert check(fts, p, 5, {port.enable: 0}).verdict == FAILED
    h = harvest(fts, p, range(4), CheckOptions(k_max=5))
    assert set(h.failed) == set(range(4))
