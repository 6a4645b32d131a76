import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seutrace.ir import Simulator, bitblast, coi, eval_step
from seutrace.ir import expr as E
from seutrace.ir.system import NetlistError, TransitionSystem
from tests.conftest import counter_system


def test_xor_self_is_zero():
    ts = TransitionSystem()
    a = ts.add_input("a", 1)
    ts.add_wire("w", E.xor(a, a))
    _, wires = eval_step(ts, {}, {"a": 1})
    assert wires["w"] == 0


def test_pc_increments_by_four():
    ts = TransitionSystem()
    pc = ts.add_register("pc", 32, 0x8000_0000)
    ts.set_next("pc", pc + E.const(32, 4))
    st_ = ts.init_state()
    for _ in range(2):
        st_, _ = eval_step(ts, st_, {})
    assert st_["pc"] == 0x8000_0008


def test_unresolved_reference_rejected():
    ts = TransitionSystem()
    with pytest.raises(NetlistError, match="unresolved"):
        ts.add_wire("w", E.ref("ghost", 1))
        ts.validate()


def test_duplicate_and_width_errors():
    ts = TransitionSystem()
    ts.add_input("a", 4)
    with pytest.raises(NetlistError):
        ts.add_input("a", 4)
    with pytest.raises(E.WidthError):
        E.add(E.const(4, 1), E.const(5, 1))
    with pytest.raises(E.WidthError):
        E.ite(E.const(2, 1), E.const(4, 0), E.const(4, 1))


def test_combinational_cycle_rejected():
    ts = TransitionSystem()
    q = ts.add_input("q", 1)
    p = ts.add_wire("p", E.not_(q))
    with pytest.raises(NetlistError, match="cycle"):
        ts.bind_input("q", E.not_(p))
    assert "q" in ts.inputs


def test_counter_wraps():
    ts = counter_system(3)
    nxt, _ = eval_step(ts, {"c": 7}, {})
    assert nxt["c"] == 0


def test_ite_selects_then_arm():
    ts = TransitionSystem()
    s = ts.add_input("sel", 1)
    ts.add_wire("o", E.ite(s, E.const(4, 0xF), E.const(4, 0)))
    assert eval_step(ts, {}, {"sel": 1})[1]["o"] == 0xF


def test_swap_registers():
    ts = TransitionSystem()
    a = ts.add_register("a", 8, 1)
    b = ts.add_register("b", 8, 2)
    ts.set_next("a", b)
    ts.set_next("b", a)
    nxt, _ = eval_step(ts, {"a": 1, "b": 2}, {})
    assert (nxt["a"], nxt["b"]) == (2, 1)


def _blast_value(expr, env):
    bits = bitblast(expr)
    assert len(bits) == expr.width
    return sum(E.evaluate(b, env) << i for i, b in enumerate(bits))


def test_bitblast_examples():
    assert _blast_value(E.add(E.const(2, 1), E.const(2, 1)), {}) == 0b10
    assert _blast_value(E.slice_(E.const(4, 0b1100), 3, 2), {}) == 0b11
    assert _blast_value(E.slt(E.const(32, 0xFFFF_FFFF), E.const(32, 0)), {}) == 1


# ---------------------------------------------------------------- random expressions

_BIN = [E.and_, E.or_, E.xor, E.add, E.sub]
_CMP = [E.eq, E.neq, E.ult, E.ule, E.slt, E.sle]
_SH = [E.shl, E.lshr, E.ashr]


@st.composite
def exprs(draw, depth=3):
    width = draw(st.sampled_from([1, 3, 8, 13]))
    return draw(_expr_of(width, depth))


def _expr_of(width, depth):
    leaf = st.one_of(
        st.integers(0, E.mask(width)).map(lambda v: E.const(width, v)),
        st.sampled_from(["a", "b"]).map(lambda n: E.ref(f"{n}{width}", width)),
    )
    if depth == 0:
        return leaf

    @st.composite
    def node(draw):
        kind = draw(st.sampled_from(["bin", "not", "ite", "cmp", "shift", "slice", "ext", "leaf"]))
        sub = lambda w: draw(_expr_of(w, depth - 1))  # noqa: E731
        if kind == "bin":
            return draw(st.sampled_from(_BIN))(sub(width), sub(width))
        if kind == "not":
            return E.not_(sub(width))
        if kind == "ite":
            return E.ite(sub(1), sub(width), sub(width))
        if kind == "cmp" and width == 1:
            w = draw(st.sampled_from([3, 8]))
            return draw(st.sampled_from(_CMP))(sub(w), sub(w))
        if kind == "shift":
            return draw(st.sampled_from(_SH))(sub(width), sub(3))
        if kind == "slice":
            lo = draw(st.integers(0, 2))
            return E.slice_(sub(width + lo + 1), width + lo - 1, lo) if width + lo + 1 <= 16 else sub(width)
        if kind == "ext" and width > 3:
            f = draw(st.sampled_from([E.zext, E.sext]))
            return f(sub(3), width)
        return draw(leaf)

    return node()


@settings(max_examples=400, deadline=None)
@given(exprs(), st.randoms(use_true_random=False))
def test_bitblast_matches_word_evaluation(ex, rnd):
    env = {}
    for w in (1, 3, 8, 13, 16, 4, 5, 6, 7, 9, 10, 11, 12, 14, 15, 2):
        for n in ("a", "b"):
            env[f"{n}{w}"] = rnd.getrandbits(w)
    assert _blast_value(ex, env) == E.evaluate(ex, env)


def test_bitblast_soundness_bulk():
    """10,000 random expressions with random bindings."""
    rnd = random.Random(2024)
    env_widths = (1, 3, 8)

    def gen(width, depth):
        if depth == 0 or rnd.random() < 0.25:
            if rnd.random() < 0.4:
                return E.const(width, rnd.getrandbits(width))
            return E.ref(f"v{width}_{rnd.randrange(2)}", width)
        k = rnd.randrange(6)
        if k == 0:
            return rnd.choice(_BIN)(gen(width, depth - 1), gen(width, depth - 1))
        if k == 1:
            return E.ite(gen(1, depth - 1), gen(width, depth - 1), gen(width, depth - 1))
        if k == 2 and width == 1:
            w = rnd.choice((3, 8))
            return rnd.choice(_CMP)(gen(w, depth - 1), gen(w, depth - 1))
        if k == 3:
            return rnd.choice(_SH)(gen(width, depth - 1), gen(3, depth - 1))
        if k == 4 and width == 8:
            return E.concat(gen(3, depth - 1), gen(1, depth - 1), gen(1, depth - 1), gen(3, depth - 1))
        return E.not_(gen(width, depth - 1))

    for _ in range(10_000):
        w = rnd.choice(env_widths)
        ex = gen(w, 3)
        env = {f"v{x}_{i}": rnd.getrandbits(x) for x in env_widths for i in range(2)}
        assert _blast_value(ex, env) == E.evaluate(ex, env)


def test_eval_step_is_pure():
    ts = counter_system(4)
    a = eval_step(ts, {"c": 5}, {})
    b = eval_step(ts, {"c": 5}, {})
    assert a == b


# --------------------------------------------------------------------- COI


def _chain():
    ts = TransitionSystem()
    r1 = ts.add_register("r1", 4, 1)
    r2 = ts.add_register("r2", 4, 2)
    free = ts.add_register("free", 4, 3)
    i = ts.add_input("i", 4)
    w1 = ts.add_wire("w1", r1 + i)
    ts.add_wire("root", E.eq(w1, 7))
    ts.set_next("r1", r1 + 1)
    ts.set_next("r2", r2 ^ r1)
    ts.set_next("free", free + r2)
    ts.validate()
    return ts


def test_coi_chain_and_exclusion():
    ts = _chain()
    cone = coi(ts, {"root"})
    assert {"r1", "w1", "i"} <= cone
    assert "free" not in cone and "r2" not in cone


def test_coi_excludes_unreachable_register_in_toy_core():
    # x0 shadow register with no readers: no path to the retire outputs
    ts = TransitionSystem()
    x0 = ts.add_register("x0_shadow", 8, 0)
    x1 = ts.add_register("x1", 8, 0)
    wd = ts.add_input("wd", 8)
    ts.set_next("x0_shadow", wd)
    ts.set_next("x1", x1 + wd)
    ts.add_wire("rs1_rdata", x1)
    ts.validate()
    assert "x0_shadow" not in coi(ts, {"rs1_rdata"})


@settings(max_examples=50, deadline=None)
@given(st.sets(st.sampled_from(["root", "w1", "r2", "free", "r1"])), st.sets(st.sampled_from(["root", "r2", "free"])))
def test_coi_monotone(a, b):
    ts = _chain()
    assert coi(ts, a) <= coi(ts, a | b)


def test_coi_soundness_by_randomized_init():
    ts = _chain()
    cone = coi(ts, {"root"})
    outside = [r for r in ts.registers if r not in cone]
    rnd = random.Random(7)
    sim = Simulator(ts, ["root"])
    for _ in range(100):
        ins = [[rnd.getrandbits(4)] for _ in range(20)]
        base = sim.init()
        alt = list(base)
        for r in outside:
            alt[sim.reg_names.index(r)] = rnd.getrandbits(4)
        ra, rb = base, alt
        for row in ins:
            na, oa, _ = sim.step(ra, row)
            nb, ob, _ = sim.step(rb, row)
            assert oa == ob
            ra, rb = na, nb
