import csv

import pytest

from seutrace import oracle as O
from seutrace.env import CONCRETE, SYMBOLIC, EnvConfig, ProgramImage, attach_env, loop_program
from seutrace.rv32 import SLEEP, TRAP, isa

STORE_PROGRAM = "addi x1, x0, 5\nsw x1, 1024(x0)\naddi x2, x0, 1\naddi x2, x0, 1"


def concrete(core, img, align=True):
    return attach_env(core.ts, EnvConfig(CONCRETE, img, alignment_constraint=align), core.config)


@pytest.fixture(scope="module")
def loop_oracle(core8):
    return O.Oracle(concrete(core8, loop_program()), O.Stimulus(), 12)


def test_loop_program_retires_expected_sequence(core8):
    img = loop_program()
    ts = concrete(core8, img)
    insns = [r["insn"] for r in O.retired(ts, O.simulate(ts, O.Stimulus(), 150))]
    w = img.words
    assert insns == [w[0]] + [w[1], w[2], w[3]] * 10 + [w[1], w[4]]


def test_wfi_enters_sleep(core8):
    ts = concrete(core8, ProgramImage.assemble("addi x1, x0, 1\nwfi\naddi x2, x0, 2"))
    fsm = [s["ctrl_fsm_cs"] for s in O.simulate(ts, O.Stimulus(), 20).states]
    assert fsm[-1] == SLEEP and SLEEP in fsm[:8]


def test_illegal_word_traps_code2(core8):
    ts = concrete(core8, ProgramImage(0, (0, 0)), align=False)
    last = O.simulate(ts, O.Stimulus(), 12).states[-1]
    assert (last["ctrl_fsm_cs"], last["mcause_q"]) == (TRAP, isa.CAUSE_ILLEGAL_INSN)


def test_illegal_word_rejected_with_alignment(core8):
    with pytest.raises(ValueError):
        concrete(core8, ProgramImage(0, (0,)))


def test_golden_run_is_clean(core8):
    assert O.golden_sanity(concrete(core8, loop_program()), O.Stimulus(), 12) == {0: ([], [], 12)}


def test_unread_register_has_no_effect(core8, loop_oracle):
    for lab in ("rf_x7:3", "rf_x3:0", "rf_x5:31"):
        eff, ev = loop_oracle.bit_effects(core8.census.resolve(lab).bit_id)
        assert eff == frozenset() and ev is None


def test_loop_counter_flip_is_sdc(core8, loop_oracle):
    eff, ev = loop_oracle.bit_effects(core8.census.resolve("rf_x1:31").bit_id)
    assert eff == {O.SDC} and ev.first_divergence > ev.cycle


def test_flip_lands_one_cycle_later(core8, loop_oracle):
    rec = loop_oracle.inject(core8.census.resolve("pc_q:0").bit_id, 0)
    assert rec.effects == {O.CRASH, O.HANG}
    assert rec.crash_codes == {isa.CAUSE_INSN_MISALIGNED} and rec.hang_kinds == {"dead_state"}
    # the trap surfaces after the flipped pc reaches execute
    assert rec.first_divergence >= 1


def test_store_address_flip_is_store_fault(core8):
    orc = O.Oracle(concrete(core8, ProgramImage.assemble(STORE_PROGRAM)), O.Stimulus(), 12)
    bit = core8.census.resolve("instr_rdata_q:31").bit_id
    codes = set()
    for cycle in range(12):
        codes |= orc.inject(bit, cycle).crash_codes
    assert isa.CAUSE_STORE_ACCESS_FAULT in codes


def test_deterministic(core8, loop_oracle):
    again = O.Oracle(concrete(core8, loop_program()), O.Stimulus(), 12)
    for lab in ("pc_q:2", "instr_rdata_q:20", "ctrl_fsm_cs:1"):
        b = core8.census.resolve(lab).bit_id
        assert loop_oracle.bit_effects(b)[0] == again.bit_effects(b)[0]


def test_argument_checks(core8, loop_oracle):
    with pytest.raises(ValueError):
        loop_oracle.inject(core8.census.total_bits, 0)
    with pytest.raises(ValueError):
        loop_oracle.inject(0, 12)
    with pytest.raises(ValueError):
        O.Oracle(concrete(core8, loop_program()), [], 12)


def test_campaign_csv(core8, tmp_path):
    ts = concrete(core8, loop_program())
    x7 = core8.census.resolve("rf_x7:0").bit_id
    bits = list(range(0, 20)) + list(range(x7, x7 + 20))
    res = O.exhaustive_campaign(ts, O.Stimulus(), 12, bits=bits)
    assert len(res.effects) == 40 and res.runs == 40 * 12
    path = tmp_path / "o.csv"
    res.write_csv(str(path))
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["bit_id", "register_name", "bit_index", "effects", "first_divergence_cycle",
                             "evidence_ref"]
    assert {r["effects"] for r in rows} >= {"None"}
    assert res.vulnerable() == {int(r["bit_id"]) for r in rows if r["effects"] != "None"}


def test_symbolic_enumeration(core8):
    ts = attach_env(core8.ts, EnvConfig(SYMBOLIC), core8.config)
    pool = (isa.NOP_WORD, isa.encode(isa.ADDI, rd=1, rs1=1, imm=1))
    stims = O.enumerate_stimuli(ts, pool, 2, 12)
    assert len(stims) == 4
    for s in stims:
        O.simulate(ts, s, 13)  # no assumption violated
    with pytest.raises(ValueError):
        O.enumerate_stimuli(ts, pool, 4, 12)
