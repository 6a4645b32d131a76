import random

import pytest
from hypothesis import given, settings, strategies as st

from seutrace.env import (CONCRETE, SYMBOLIC, EnvConfig, ProgramImage, attach_env,
                          instruction_validity_constraint, loop_program, well_formed_constraint)
from seutrace.ir import Simulator
from seutrace.ir import expr as E
from seutrace.ir.system import NetlistError
from seutrace.rv32 import CoreConfig, isa

WORD, ADDR = E.ref("w", 32), E.ref("a", 32)


def _valid(word, addr, alignment=True, regfile_size=32):
    return E.evaluate(instruction_validity_constraint(WORD, ADDR, regfile_size, alignment), {"w": word, "a": addr})


def test_validity_examples():
    addi = isa.encode(isa.ADDI, rd=1, rs1=0, imm=10)
    assert _valid(addi, 0x10)
    assert not _valid(addi, 0x12)
    assert _valid(addi, 0x12, alignment=False)
    assert not _valid(0x00000000, 0x10)
    assert not _valid(0xFFFFFFFF, 0x10, alignment=False)
    # register index above the configured file size
    assert not _valid(isa.encode(isa.ADDI, rd=9, rs1=0, imm=1), 0, regfile_size=8)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_validity_matches_decoder_and_is_monotone(word, addr):
    on = _valid(word, addr, True)
    off = _valid(word, addr, False)
    assert off == (isa.decode(word).cls != isa.ILLEGAL)
    assert not on or off  # the alignment clause only removes stimuli
    assert on == (off and addr % 4 == 0)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 0xFF).map(lambda x: x * 4))
def test_well_formed_implies_valid(word, addr):
    cfg = CoreConfig(regfile_size=8)
    wf = E.evaluate(well_formed_constraint(WORD, ADDR, cfg), {"w": word, "a": addr})
    if wf and _valid(word, addr, True, 8):
        d = isa.decode(word, 8)
        assert d.cls not in (isa.ECALL, isa.EBREAK, isa.WFI)


def test_image_round_trip(tmp_path):
    img = loop_program(0x40)
    p = tmp_path / "prog.hex"
    img.save(str(p))
    assert ProgramImage.load(str(p)) == img
    assert ProgramImage.from_text("# comment\n00000000\n00a00093  # addi\n").words == (0x00A00093,)
    with pytest.raises(ValueError):
        ProgramImage.from_text("zz\n")
    with pytest.raises(ValueError):
        ProgramImage(2, (0,))


def test_env_config_checks(core8):
    with pytest.raises(ValueError):
        EnvConfig("weird")
    with pytest.raises(ValueError):
        EnvConfig(CONCRETE)
    with pytest.raises(ValueError):
        attach_env(core8.ts, EnvConfig(CONCRETE, ProgramImage(0, (0,))))  # illegal word in the image


def test_interface_mismatch(core8):
    ts = core8.ts.copy()
    ts.bind_input("instr_gnt_i", 0)
    with pytest.raises(NetlistError, match="interface"):
        attach_env(ts, EnvConfig(SYMBOLIC), core8.config)


def _concrete_run(core8, img, cycles):
    ts = attach_env(core8.ts, EnvConfig(CONCRETE, img), core8.config)
    obs = ["valid", "insn", "pc_rdata", "rd_wdata", "instr_req_o", "instr_addr_o"]
    sim = Simulator(ts, obs)
    regs = sim.init()
    rows = []
    for _ in range(cycles):
        st = dict(zip(sim.reg_names, regs))
        regs, o, ok = sim.step(regs, [0] * len(sim.in_names))
        assert ok
        rows.append((st, dict(zip(obs, o))))
    return rows


def test_grant_one_cycle_after_request(core8):
    rows = _concrete_run(core8, loop_program(), 30)
    for t in range(len(rows) - 1):
        st_next = rows[t + 1][0]
        assert st_next["env_imem_req_q"] == rows[t][1]["instr_req_o"]
        if rows[t][1]["instr_req_o"]:
            assert st_next["env_imem_addr_q"] == rows[t][1]["instr_addr_o"]


def test_loop_program_retire_sequence(core8):
    img = loop_program()
    rows = _concrete_run(core8, img, 200)
    insns = [o["insn"] for _, o in rows if o["valid"]]
    w = img.words
    expected = [w[0]] + [w[1], w[2], w[3]] * 10 + [w[1], w[4]]
    assert insns == expected
    last = [o for _, o in rows if o["valid"]][-1]
    assert last["rd_wdata"] == 0


def test_symbolic_fetches_respect_assumption(core8):
    ts = attach_env(core8.ts, EnvConfig(SYMBOLIC), core8.config)
    sim = Simulator(ts, ["valid", "insn"])
    rng = random.Random(2)
    regs = sim.init()
    bad = 0
    for _ in range(200):
        ins = [rng.getrandbits(ts.inputs[n].width) for n in sim.in_names]
        regs, _, ok = sim.step(regs, ins)
        bad += not ok
    # random words are almost never legal: the assumption notices
    assert bad > 0
