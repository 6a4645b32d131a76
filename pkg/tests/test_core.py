import random

import pytest

from seutrace.ir import Simulator
from seutrace.rv32 import RETIRE_FIELDS, TRAP, CoreConfig, build_core, compose_lockstep, isa
from seutrace.rv32.core import Census

IDLE = {"instr_gnt_i": 0, "instr_rdata_i": 0, "instr_err_i": 0, "data_gnt_i": 0, "data_rdata_i": 0,
        "data_err_i": 0, "halt_i": 0}


class Bench:
    """Drives a bare core with a dictionary memory (grant one cycle after request)."""

    def __init__(self, core, imem, dmem=None):
        self.core = core
        self.sim = Simulator(core.ts)
        self.ob = {n: i for i, n in enumerate(self.sim.observe)}
        self.imem = imem
        self.dmem = dmem if dmem is not None else {}
        self.regs = self.sim.init()
        self.ireq = self.dreq = None

    def state(self):
        return dict(zip(self.sim.reg_names, self.regs))

    def step(self):
        inp = dict(IDLE)
        if self.ireq is not None:
            inp["instr_gnt_i"] = 1
            inp["instr_rdata_i"] = self.imem(self.ireq)
        if self.dreq is not None:
            inp["data_gnt_i"] = 1
            inp["data_rdata_i"] = self.dmem.get(self.dreq, 0)
        nxt, obs, _ = self.sim.step(self.regs, [inp[n] for n in self.sim.in_names])
        o = {n: obs[i] for n, i in self.ob.items()}
        self.ireq = o["instr_addr_o"] if o["instr_req_o"] else None
        self.dreq = o["data_addr_o"] if o["data_req_o"] else None
        self.regs = nxt
        return o


def run_words(core, words, cycles=40, base=0):
    b = Bench(core, lambda a: words[(a - base) // 4] if 0 <= (a - base) // 4 < len(words) else isa.NOP_WORD)
    retires = []
    for _ in range(cycles):
        o = b.step()
        if o["valid"]:
            retires.append(o)
    return b, retires


def test_decode_examples():
    assert isa.decode(0x10500073).cls == isa.WFI
    bge = isa.encode(isa.BGE, rs1=1, rs2=2, imm=8)
    f = isa.fields(bge)
    assert (f["opcode"], f["funct3"]) == (0b1100011, 0b101)
    assert isa.decode(bge).cls == isa.BGE
    d = isa.decode(0x00A00093)
    assert (d.cls, d.rd, d.rs1, d.imm_i) == (isa.ADDI, 1, 0, 10)
    assert isa.assemble("addi x1, x0, 10") == [0x00A00093]
    assert isa.decode(0).cls == isa.ILLEGAL


def test_mcause_codes():
    assert isa.CAUSES.keys() >= {0, 1, 2, 3, 5, 7, 11}
    assert isa.CAUSE_STORE_ACCESS_FAULT == 7
    assert (isa.CAUSE_INSN_MISALIGNED, isa.CAUSE_INSN_ACCESS_FAULT, isa.CAUSE_ILLEGAL_INSN, isa.CAUSE_BREAKPOINT,
            isa.CAUSE_LOAD_ACCESS_FAULT, isa.CAUSE_ECALL_M) == (0, 1, 2, 3, 5, 11)


def test_first_retire_at_reset_pc():
    core = build_core(CoreConfig(reset_pc=0x40))
    _, ret = run_words(core, [isa.NOP_WORD] * 64, 10)
    assert ret[0]["pc_rdata"] == 0x40


@pytest.mark.parametrize("word,code", [
    (isa.ECALL_WORD, 11),
    (isa.EBREAK_WORD, 3),
    (0, 2),
    (isa.encode(isa.SW, rs1=0, rs2=1, imm=0x10), 7),
    (isa.encode(isa.LW, rd=1, rs1=0, imm=0x10), 5),
    (isa.encode(isa.JAL, rd=0, imm=0x600), 1),
])
def test_trap_codes(core8, word, code):
    _, _ = run_words(core8, [word], 1)
    b = Bench(core8, lambda a: word if a == 0 else isa.NOP_WORD)
    for _ in range(12):
        b.step()
    s = b.state()
    assert s["ctrl_fsm_cs"] == TRAP and s["mcause_q"] == code


def test_misaligned_fetch_traps_code0(core8):
    # jalr to an odd-halfword address
    words = [isa.encode(isa.JALR, rd=0, rs1=0, imm=0x22)]
    b = Bench(core8, lambda a: words[0] if a == 0 else isa.NOP_WORD)
    for _ in range(12):
        b.step()
    assert b.state()["mcause_q"] == 0


def test_ecall_enters_trap_next_cycle(core8):
    b = Bench(core8, lambda a: isa.ECALL_WORD)
    for _ in range(10):
        s = b.state()
        if s["instr_valid_q"] and s["ctrl_fsm_cs"] == 1:
            b.step()
            s = b.state()
            assert s["mcause_q"] == 11 and s["ctrl_fsm_cs"] == TRAP
            return
        b.step()
    pytest.fail("ECALL never reached execute")


def test_wfi_sleeps(core8):
    _, ret = run_words(core8, [isa.WFI_WORD], 20)
    assert len(ret) == 1 and ret[0]["insn"] == isa.WFI_WORD


def _random_insn(rng, cfg):
    c = rng.choice(isa.CLASSES)
    r = lambda: rng.randrange(cfg.regfile_size)  # noqa: E731
    if c in isa.LOADS + isa.STORES:
        imm = rng.choice([rng.randrange(0x400, 0x800), rng.randrange(-2048, 2048)])
        imm = imm if imm <= 2047 else rng.randrange(0, 2047)
        return isa.encode(c, rd=r(), rs1=rng.choice([0, 0, r()]), rs2=r(), imm=imm)
    if c in isa.BRANCHES:
        return isa.encode(c, rs1=r(), rs2=r(), imm=rng.choice([-8, 4, 8, 12, -4, 6]))
    if c == isa.JAL:
        return isa.encode(c, rd=r(), imm=rng.choice([4, 8, -4, 16]))
    if c == isa.JALR:
        return isa.encode(c, rd=r(), rs1=rng.choice([0, r()]), imm=rng.choice([0x10, 0x20, 0x7F]))
    if c in (isa.SLLI, isa.SRLI, isa.SRAI):
        return isa.encode(c, rd=r(), rs1=r(), imm=rng.randrange(32))
    if c in (isa.LUI, isa.AUIPC):
        return isa.encode(c, rd=r(), imm=rng.getrandbits(20) << 12)
    if c in isa.SYSTEM:
        return isa.encode(c) if rng.random() < 0.2 else isa.NOP_WORD
    return isa.encode(c, rd=r(), rs1=r(), rs2=r(), imm=rng.randrange(-2048, 2048))


def test_core_matches_reference_iss():
    """Random programs: every retire record equals the ISS; traps agree on mcause."""
    cfg = CoreConfig(regfile_size=8)
    core = build_core(cfg)
    rng = random.Random(5)
    n_retired = 0
    for _ in range(60):
        mem, dmem = {}, {}

        def word(a):
            if a not in mem:
                mem[a] = _random_insn(rng, cfg) if rng.random() < 0.97 else rng.getrandbits(32)
            return mem[a]

        def dword(a):
            if a not in dmem:
                dmem[a] = rng.getrandbits(32)
            return dmem[a]

        st = isa.IsaState(pc=cfg.reset_pc)
        b = Bench(core, word)
        b.dmem = _Lazy(dword)
        for _ in range(50):
            o = b.step()
            if o["valid"]:
                got = {f: o[f] for f in RETIRE_FIELDS if f not in ("valid", "halt")}
                exp = isa.step(st, word(st.pc), dword, cfg.regfile_size, cfg.dmem_range, cfg.imem_range)
                assert exp is not None and got == vars(exp)
                n_retired += 1
        s = b.state()
        if s["ctrl_fsm_cs"] == TRAP:
            if st.trapped is None:
                isa.step(st, word(st.pc), dword, cfg.regfile_size, cfg.dmem_range, cfg.imem_range)
            assert st.trapped == s["mcause_q"]
    assert n_retired > 300


class _Lazy(dict):
    def __init__(self, f):
        super().__init__()
        self.f = f

    def get(self, k, default=None):
        return self.f(k)


def test_x0_reads_zero_after_write(core8):
    words = isa.assemble("addi x0, x0, 5\nadd x1, x0, x0\naddi x2, x0, 0")
    _, ret = run_words(core8, words + [isa.NOP_WORD] * 8, 30)
    assert ret[1]["rs1_rdata"] == 0 and ret[1]["rd_wdata"] == 0
    assert ret[0]["rd_addr"] == 0


def test_retire_atomicity_and_pc_chain(core8):
    rng = random.Random(1)
    words = [isa.encode(isa.ADDI, rd=rng.randrange(1, 8), rs1=rng.randrange(8), imm=rng.randrange(-50, 50))
             for _ in range(40)]
    b = Bench(core8, lambda a: words[a // 4] if a // 4 < len(words) else isa.NOP_WORD)
    prev = None
    for _ in range(80):
        o = b.step()
        if o["valid"]:
            if prev is not None:
                assert o["pc_rdata"] == prev["pc_wdata"]
            prev = o


def test_fault_free_determinism(core8):
    words = isa.assemble("addi x1, x0, 3\nadd x2, x1, x1\nsw x2, 1024(x0)\nlw x3, 1024(x0)")
    a = [tuple(sorted(o.items())) for o in run_words(core8, words, 40)[1]]
    b = [tuple(sorted(o.items())) for o in run_words(core8, words, 40)[1]]
    assert a == b and a


def test_census_is_dense_and_stable(core8):
    c = core8.census
    assert [e.bit_id for e in c.entries] == list(range(c.total_bits))
    assert Census.from_text(c.to_text()).fingerprint() == c.fingerprint()
    assert c.resolve("pc_q:2").register == "pc_q"
    assert build_core(CoreConfig(regfile_size=8)).census.fingerprint() == c.fingerprint()


def test_config_validation():
    with pytest.raises(ValueError):
        CoreConfig(regfile_size=12)
    with pytest.raises(ValueError):
        CoreConfig(imem_range=(2, 0x400))
    with pytest.raises(ValueError):
        CoreConfig(imem_range=(0x400, 0x400))


def test_lockstep_no_fault_identical(core8):
    from seutrace.env import CONCRETE, EnvConfig, attach_env, loop_program

    env = EnvConfig(CONCRETE, loop_program())
    g = attach_env(core8.ts, env, core8.config)
    f = attach_env(core8.ts, env, core8.config)
    ls = compose_lockstep(g, f)
    sim = Simulator(ls.ts, [ls.golden["valid"], ls.faulty["valid"], ls.golden["insn"], ls.faulty["insn"]])
    regs = sim.init()
    rng = random.Random(0)
    for _ in range(500):
        regs, o, _ = sim.step(regs, [rng.getrandbits(1) for _ in sim.in_names])
        assert o[0] == o[1] and o[2] == o[3]


def test_lockstep_config_mismatch(core8):
    from seutrace.ir.system import NetlistError

    other = build_core(CoreConfig(regfile_size=16))
    with pytest.raises(NetlistError, match="config"):
        compose_lockstep(core8.ts, other.ts)
