"""Two-stage RV32I-subset core as a transition system.

IF: ``pc_q`` plus the fetched-instruction register ``instr_rdata_q`` /
``instr_valid_q``.  ID/EX: decode, ALU, branch resolution, a load/store unit
that waits for the data grant (``ls_wait_q``), register-file write-back, and
trap entry into ``ctrl_fsm_cs = TRAP`` with the cause in ``mcause_q``.

Memory handshake (both ports): the core raises ``*_req_o`` with an address;
the environment answers with ``*_gnt_i`` and data on a later cycle.  The core
retires one instruction per completed execute, i.e. every second cycle for
ALU/branch instructions with single-cycle memories.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..ir import expr as E
from ..ir.expr import Expr
from ..ir.system import TransitionSystem
from . import isa

BOOT, RUN, TRAP, SLEEP = 0, 1, 2, 3
FSM_STATES = {"BOOT": BOOT, "RUN": RUN, "TRAP": TRAP, "SLEEP": SLEEP}
MCAUSE_RESET = 0x3F

RETIRE_FIELDS = {
    "valid": 1,
    "insn": 32,
    "rs1_addr": 5,
    "rs2_addr": 5,
    "rs1_rdata": 32,
    "rs2_rdata": 32,
    "rd_addr": 5,
    "rd_wdata": 32,
    "pc_rdata": 32,
    "pc_wdata": 32,
    "mem_addr": 32,
    "mem_rmask": 4,
    "mem_wmask": 4,
    "mem_rdata": 32,
    "mem_wdata": 32,
    "halt": 1,
}

CORE_INPUTS = {
    "instr_gnt_i": 1,
    "instr_rdata_i": 32,
    "instr_err_i": 1,
    "data_gnt_i": 1,
    "data_rdata_i": 32,
    "data_err_i": 1,
    "halt_i": 1,
}

CORE_OUTPUTS = ("instr_req_o", "instr_addr_o", "data_req_o", "data_addr_o", "data_we_o", "data_be_o", "data_wdata_o")


@dataclass(frozen=True)
class CoreConfig:
    regfile_size: int = 8
    reset_pc: int = 0x0
    trap_vector: int = 0x80
    imem_range: tuple[int, int] = (0x0, 0x400)
    dmem_range: tuple[int, int] = (0x400, 0x800)
    cycle_counter_width: int = 8
    debug_register_width: int = 0

    def __post_init__(self):
        if self.regfile_size not in (8, 16, 32):
            raise ValueError("regfile_size must be 8, 16 or 32")
        for name in ("imem_range", "dmem_range"):
            lo, hi = getattr(self, name)
            if not 0 <= lo < hi <= 1 << 32:
                raise ValueError(f"{name} must be a non-empty interval within 32-bit space")
            if lo % 4:
                raise ValueError(f"{name} base must be 4-aligned")
        for name in ("reset_pc", "trap_vector"):
            if not 0 <= getattr(self, name) < 1 << 32:
                raise ValueError(f"{name} must be a 32-bit address")
        if not 1 <= self.cycle_counter_width <= 32:
            raise ValueError("cycle_counter_width must be in 1..32")
        if not 0 <= self.debug_register_width <= 64:
            raise ValueError("debug_register_width must be in 0..64")

    def key(self) -> tuple:
        return (self.regfile_size, self.reset_pc, self.trap_vector, tuple(self.imem_range),
                tuple(self.dmem_range), self.cycle_counter_width, self.debug_register_width)


@dataclass(frozen=True)
class RetireInterface:
    """Net names of the observation interface, keyed by field name."""

    nets: dict = field(default_factory=dict)

    def __getitem__(self, key: str) -> str:
        return self.nets[key]

    def prefixed(self, prefix: str) -> RetireInterface:
        return RetireInterface({k: prefix + v for k, v in self.nets.items()})


@dataclass(frozen=True)
class CensusEntry:
    register: str
    bit: int
    bit_id: int

    @property
    def label(self) -> str:
        return f"{self.register}:{self.bit}"


class Census:
    """Every stored bit of the core, with a dense global id."""

    def __init__(self, widths: list[tuple[str, int]]):
        self.entries: list[CensusEntry] = []
        self._by_key: dict[tuple[str, int], CensusEntry] = {}
        self.registers: dict[str, int] = {}
        for name, width in widths:
            self.registers[name] = width
            for b in range(width):
                e = CensusEntry(name, b, len(self.entries))
                self.entries.append(e)
                self._by_key[(name, b)] = e

    @classmethod
    def of(cls, ts: TransitionSystem, registers=None) -> Census:
        names = list(ts.registers) if registers is None else list(registers)
        return cls([(n, ts.registers[n].net.width) for n in names])

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, bit_id: int) -> CensusEntry:
        return self.entries[bit_id]

    @property
    def total_bits(self) -> int:
        return len(self.entries)

    def lookup(self, register: str, bit: int) -> CensusEntry:
        try:
            return self._by_key[(register, bit)]
        except KeyError:
            raise KeyError(f"no census bit {register}:{bit}") from None

    def resolve(self, spec: str | int) -> CensusEntry:
        """Accepts a global id or ``register:bit``."""
        if isinstance(spec, int) or str(spec).isdigit():
            i = int(spec)
            if not 0 <= i < len(self.entries):
                raise KeyError(f"bit id {i} outside census of {len(self.entries)} bits")
            return self.entries[i]
        reg, _, bit = str(spec).rpartition(":")
        if not reg:
            raise KeyError(f"bad bit spec {spec!r}; expected register:bit or an id")
        return self.lookup(reg, int(bit))

    def to_text(self) -> str:
        lines = ["bit_id register bit"]
        lines.extend(f"{e.bit_id} {e.register} {e.bit}" for e in self.entries)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Census:
        widths: dict[str, int] = {}
        order: list[str] = []
        for i, line in enumerate(text.strip().splitlines()[1:]):
            bid, reg, bit = line.split()
            if int(bid) != i:
                raise ValueError(f"census ids must be dense; line {i + 2} has id {bid}")
            if reg not in widths:
                order.append(reg)
                widths[reg] = 0
            if int(bit) != widths[reg]:
                raise ValueError(f"census bits of {reg} must be listed in order")
            widths[reg] += 1
        return cls([(r, widths[r]) for r in order])

    def fingerprint(self) -> tuple:
        return tuple((n, w) for n, w in self.registers.items())


@dataclass
class Core:
    ts: TransitionSystem
    retire: RetireInterface
    census: Census
    config: CoreConfig


# ----------------------------------------------------------- decoder logic


def in_range(addr: Expr, rng: tuple[int, int]) -> Expr:
    lo, hi = rng
    terms = []
    if lo > 0:
        terms.append(E.ule(E.const(32, lo), addr))
    if hi < 1 << 32:
        terms.append(E.ult(addr, E.const(32, hi)))
    return E.all_of(*terms) if terms else E.true()


def decode_signals(insn: Expr, regfile_size: int) -> dict[str, Expr]:
    """Width-1 class predicates (``is_<CLASS>``) plus field and immediate slices.

    Driven by the mask/match table; register fields outside the register file
    make a word illegal.
    """
    out: dict[str, Expr] = {}
    rd, rs1, rs2 = insn.slice(11, 7), insn.slice(19, 15), insn.slice(24, 20)
    k = regfile_size.bit_length() - 1
    ok = {}
    for name, f in (("rd", rd), ("rs1", rs1), ("rs2", rs2)):
        ok[name] = E.true() if k >= 5 else E.eq(f.slice(4, k), 0)
    for cls, mask, match in isa.ENCODINGS:
        hit = E.eq(E.and_(insn, E.const(32, mask)), E.const(32, match))
        legal = E.all_of(*(ok[r] for r in isa.reg_fields(cls)))
        out["is_" + cls] = E.and_(hit, legal)
    out["illegal"] = E.not_(E.any_of(*(out["is_" + c] for c in isa.CLASSES)))
    out["rd"], out["rs1"], out["rs2"] = rd, rs1, rs2
    out["funct3"] = insn.slice(14, 12)
    sign = insn.bit(31)
    out["imm_i"] = E.sext(insn.slice(31, 20), 32)
    out["imm_s"] = E.sext(E.concat(insn.slice(31, 25), insn.slice(11, 7)), 32)
    out["imm_b"] = E.sext(E.concat(sign, insn.bit(7), insn.slice(30, 25), insn.slice(11, 8), E.const(1, 0)), 32)
    out["imm_u"] = E.concat(insn.slice(31, 12), E.const(12, 0))
    out["imm_j"] = E.sext(E.concat(sign, insn.slice(19, 12), insn.bit(20), insn.slice(30, 21), E.const(1, 0)), 32)
    for group, members in (("branch", isa.BRANCHES), ("load", isa.LOADS), ("store", isa.STORES),
                           ("op_imm", isa.OP_IMM), ("op", isa.OP)):
        out["is_" + group] = E.any_of(*(out["is_" + c] for c in members))
    out["writes_rd"] = E.any_of(*(out["is_" + c] for c in isa.CLASSES if isa.writes_rd(c)))
    return out


def _mux_tree(sel: Expr, items: list[Expr]) -> Expr:
    """items[i] selected by sel == i (len(items) == 2**sel.width)."""
    level = items
    for b in range(sel.width):
        s = sel.bit(b)
        level = [E.ite(s, level[i + 1], level[i]) for i in range(0, len(level), 2)]
    return level[0]


def byte_mask_word(be: Expr) -> Expr:
    return E.concat(*(E.replicate(be.bit(i), 8) for i in (3, 2, 1, 0)))


# ---------------------------------------------------------------- builder


def build_core(config: CoreConfig | None = None, name: str = "core") -> Core:
    cfg = config or CoreConfig()
    ts = TransitionSystem(name=name)
    ts.meta["core_config"] = cfg
    c32 = lambda v: E.const(32, v & 0xFFFFFFFF)  # noqa: E731

    fsm = ts.add_register("ctrl_fsm_cs", 2, BOOT)
    pc = ts.add_register("pc_q", 32, cfg.reset_pc)
    instr = ts.add_register("instr_rdata_q", 32, 0)
    ivalid = ts.add_register("instr_valid_q", 1, 0)
    ls_wait = ts.add_register("ls_wait_q", 1, 0)
    mcause = ts.add_register("mcause_q", 6, MCAUSE_RESET)
    rf = {i: ts.add_register(f"rf_x{i}", 32, 0) for i in range(1, cfg.regfile_size)}
    if cfg.debug_register_width:
        dbg = ts.add_register("dbg_scratch_q", cfg.debug_register_width, 0)
        ts.set_next("dbg_scratch_q", dbg)

    ins = {n: ts.add_input(n, w) for n, w in CORE_INPUTS.items()}

    w = ts.add_wire
    priv = w("priv_mode", E.const(2, 3))
    del priv
    run = w("st_run", E.eq(fsm, RUN))
    boot = w("st_boot", E.eq(fsm, BOOT))

    # ---- decode
    D = decode_signals(instr, cfg.regfile_size)
    dec = {k: w("id_" + k, v) for k, v in D.items() if k.startswith("is_") or k in ("illegal", "writes_rd")}
    f3 = D["funct3"]
    rd_f, rs1_f, rs2_f = D["rd"], D["rs1"], D["rs2"]

    # ---- register file read (x0 and indices past the file read as zero)
    entries = [E.const(32, 0)] + [rf[i] for i in range(1, cfg.regfile_size)]
    kbits = cfg.regfile_size.bit_length() - 1

    def read(idx: Expr) -> Expr:
        v = _mux_tree(idx.slice(kbits - 1, 0), entries)
        if kbits < 5:
            v = E.ite(E.eq(idx.slice(4, kbits), 0), v, E.const(32, 0))
        return v

    rs1_v = w("rs1_rdata", read(rs1_f))
    rs2_v = w("rs2_rdata", read(rs2_f))

    # ---- ALU
    is_op = dec["is_op"]
    alu_b = w("ex_alu_b", E.ite(is_op, rs2_v, D["imm_i"]))
    alt = E.and_(instr.bit(30), is_op)  # SUB (OP only); SRA/SRAI use bit 30 for both
    shamt = E.zext(alu_b.slice(4, 0), 32)
    sum_ = E.add(rs1_v, alu_b)
    diff = E.sub(rs1_v, alu_b)
    res_by_f3 = [
        E.ite(alt, diff, sum_),
        E.shl(rs1_v, shamt),
        E.zext(E.slt(rs1_v, alu_b), 32),
        E.zext(E.ult(rs1_v, alu_b), 32),
        E.xor(rs1_v, alu_b),
        E.ite(instr.bit(30), E.ashr(rs1_v, shamt), E.lshr(rs1_v, shamt)),
        E.or_(rs1_v, alu_b),
        E.and_(rs1_v, alu_b),
    ]
    alu_res = w("ex_alu_result", _mux_tree(f3, res_by_f3))

    # ---- branch / next pc
    beq = E.eq(rs1_v, rs2_v)
    blt = E.slt(rs1_v, rs2_v)
    bltu = E.ult(rs1_v, rs2_v)
    cond = _mux_tree(f3, [beq, E.not_(beq), E.false(), E.false(), blt, E.not_(blt), bltu, E.not_(bltu)])
    taken = w("ex_branch_taken", E.and_(dec["is_branch"], cond))
    pc_off = E.ite(dec["is_JAL"], D["imm_j"], E.ite(dec["is_AUIPC"], D["imm_u"], D["imm_b"]))
    pc_rel = w("ex_pc_rel", E.add(pc, pc_off))
    pc4 = w("ex_pc_plus4", pc + 4)
    addr_sum = w("ex_addr_sum", E.add(rs1_v, E.ite(dec["is_store"], D["imm_s"], D["imm_i"])))
    jalr_t = E.and_(addr_sum, c32(0xFFFFFFFE))
    next_pc = w(
        "ex_next_pc",
        E.ite(dec["is_JALR"], jalr_t, E.ite(E.or_(dec["is_JAL"], taken), pc_rel, pc4)),
    )

    # ---- load/store unit
    is_load, is_store = dec["is_load"], dec["is_store"]
    is_mem = w("ex_is_mem", E.or_(is_load, is_store))
    off = addr_sum.slice(1, 0)
    size = f3.slice(1, 0)  # 0 byte, 1 half, 2 word
    misaligned = E.or_(E.and_(E.eq(size, 1), off.bit(0)), E.and_(E.eq(size, 2), E.neq(off, 0)))
    size_bad = E.eq(size, 3)
    mem_bad = w("ex_mem_fault", E.and_(is_mem, E.any_of(misaligned, size_bad, E.not_(in_range(addr_sum, cfg.dmem_range)))))
    be_base = _mux_tree(size, [E.const(4, 1), E.const(4, 3), E.const(4, 0xF), E.const(4, 0)])
    be = w("ex_byte_enable", E.ite(E.eq(size, 2), E.const(4, 0xF), E.shl(be_base, E.zext(off, 4))))
    byte_shift = E.zext(E.concat(off, E.const(3, 0)), 32)
    wdata = w("ex_store_data", E.and_(E.shl(rs2_v, byte_shift), byte_mask_word(be)))
    mem_word_addr = w("ex_mem_word_addr", E.and_(addr_sum, c32(0xFFFFFFFC)))
    shifted = E.lshr(ins["data_rdata_i"], byte_shift)
    load_res = w(
        "ex_load_result",
        _mux_tree(f3, [
            E.sext(shifted.slice(7, 0), 32),
            E.sext(shifted.slice(15, 0), 32),
            shifted,
            E.const(32, 0),
            E.zext(shifted.slice(7, 0), 32),
            E.zext(shifted.slice(15, 0), 32),
            E.const(32, 0),
            E.const(32, 0),
        ]),
    )

    # ---- events
    exec_ = w("ex_exec", E.all_of(run, ivalid, E.not_(ls_wait)))
    pc_mis = E.neq(pc.slice(1, 0), 0)
    exc_any = E.any_of(pc_mis, dec["illegal"], dec["is_EBREAK"], dec["is_ECALL"], mem_bad)
    exc_code = E.ite(
        pc_mis, E.const(6, isa.CAUSE_INSN_MISALIGNED),
        E.ite(dec["illegal"], E.const(6, isa.CAUSE_ILLEGAL_INSN),
              E.ite(dec["is_EBREAK"], E.const(6, isa.CAUSE_BREAKPOINT),
                    E.ite(dec["is_ECALL"], E.const(6, isa.CAUSE_ECALL_M),
                          E.ite(is_load, E.const(6, isa.CAUSE_LOAD_ACCESS_FAULT),
                                E.const(6, isa.CAUSE_STORE_ACCESS_FAULT))))))
    exec_trap = w("ex_trap", E.and_(exec_, exc_any))
    exec_ok = E.and_(exec_, E.not_(exc_any))
    mem_issue = w("lsu_issue", E.and_(exec_ok, is_mem))
    complete = w("lsu_complete", E.all_of(run, ls_wait, ins["data_gnt_i"]))
    complete_err = E.and_(complete, ins["data_err_i"])
    retire = w("valid", E.or_(E.and_(exec_ok, E.not_(is_mem)), E.and_(complete, E.not_(ins["data_err_i"]))))
    wfi_retire = w("ex_wfi_retire", E.and_(retire, dec["is_WFI"]))
    fetch_issue = w("if_fetch", E.or_(boot, E.and_(retire, E.not_(dec["is_WFI"]))))
    fetch_addr = w("if_fetch_addr", E.ite(boot, pc, next_pc))
    fetch_bad = w("if_fetch_fault", E.and_(fetch_issue, E.not_(in_range(fetch_addr, cfg.imem_range))))
    grant = E.and_(run, ins["instr_gnt_i"])
    grant_err = E.and_(grant, ins["instr_err_i"])
    grant_ok = w("if_grant", E.and_(grant, E.not_(ins["instr_err_i"])))
    trap = w("trap_enter", E.any_of(exec_trap, complete_err, fetch_bad, grant_err))
    trap_code = w("trap_cause", E.ite(exec_trap, exc_code, E.ite(
        complete_err, E.ite(is_load, E.const(6, isa.CAUSE_LOAD_ACCESS_FAULT), E.const(6, isa.CAUSE_STORE_ACCESS_FAULT)),
        E.const(6, isa.CAUSE_INSN_ACCESS_FAULT))))

    # ---- write-back
    result = E.ite(dec["is_LUI"], D["imm_u"],
                   E.ite(dec["is_AUIPC"], pc_rel,
                         E.ite(E.or_(dec["is_JAL"], dec["is_JALR"]), pc4,
                               E.ite(is_load, load_res, alu_res))))
    rd_nz = E.neq(rd_f, 0)
    rf_we = w("wb_we", E.all_of(retire, dec["writes_rd"], rd_nz))
    rf_wdata = w("wb_wdata", result)

    # ---- retire interface
    zero32 = E.const(32, 0)
    w("insn", instr)
    w("rs1_addr", rs1_f)
    w("rs2_addr", rs2_f)
    w("rd_addr", E.ite(E.and_(dec["writes_rd"], rd_nz), rd_f, E.const(5, 0)))
    w("rd_wdata", E.ite(rf_we, rf_wdata, zero32))
    w("pc_rdata", pc)
    w("pc_wdata", next_pc)
    w("mem_addr", E.ite(is_mem, mem_word_addr, zero32))
    w("mem_rmask", E.ite(is_load, be, E.const(4, 0)))
    w("mem_wmask", E.ite(is_store, be, E.const(4, 0)))
    w("mem_rdata", E.ite(is_load, ins["data_rdata_i"], zero32))
    w("mem_wdata", E.ite(is_store, wdata, zero32))
    w("halt", ins["halt_i"])

    # ---- memory-side outputs
    w("instr_req_o", E.and_(fetch_issue, E.not_(fetch_bad)))
    w("instr_addr_o", fetch_addr)
    w("data_req_o", mem_issue)
    w("data_addr_o", mem_word_addr)
    w("data_we_o", is_store)
    w("data_be_o", be)
    w("data_wdata_o", wdata)

    # ---- next state
    ts.set_next("ctrl_fsm_cs", E.ite(trap, E.const(2, TRAP), E.ite(wfi_retire, E.const(2, SLEEP),
                                                                   E.ite(boot, E.const(2, RUN), fsm))))
    ts.set_next("mcause_q", E.ite(trap, trap_code, mcause))
    ts.set_next("pc_q", E.ite(trap, c32(cfg.trap_vector), E.ite(retire, next_pc, pc)))
    ts.set_next("instr_rdata_q", E.ite(grant_ok, ins["instr_rdata_i"], instr))
    ts.set_next("instr_valid_q", E.ite(trap, E.false(), E.ite(grant_ok, E.true(), E.ite(retire, E.false(), ivalid))))
    ts.set_next("ls_wait_q", E.ite(trap, E.false(), E.ite(mem_issue, E.true(), E.ite(complete, E.false(), ls_wait))))
    rd_lo = rd_f.slice(kbits - 1, 0)
    for i, reg in rf.items():
        ts.set_next(f"rf_x{i}", E.ite(E.and_(rf_we, E.eq(rd_lo, i)), rf_wdata, reg))

    for f_ in RETIRE_FIELDS:
        ts.add_output(f_, f_)
    for o in CORE_OUTPUTS:
        ts.add_output(o, o)
    ts.validate()
    retire_if = RetireInterface({f_: f_ for f_ in RETIRE_FIELDS})
    census = Census.of(ts)
    ts.meta["census"] = census
    return Core(ts=ts, retire=retire_if, census=census, config=cfg)
