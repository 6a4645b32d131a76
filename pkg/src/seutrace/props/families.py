"""Builtin property families: strobe, arch, crash and hang.

Every property is produced as text in the assertion language and then
parsed and elaborated, so the builtin corpus doubles as a parser workload.
Identifiers in the text are logical names; ``name_map`` binds them to the
(possibly prefixed) nets of the target system.
"""

from __future__ import annotations

from ..ir import expr as E
from ..ir.system import TransitionSystem
from ..rv32 import isa
from ..rv32.core import BOOT, RETIRE_FIELDS, SLEEP, TRAP
from ..rv32.lockstep import FAULTY, Lockstep
from .elaborate import AuxNet, Property, compile_property

FAMILIES = ("strobe", "arch", "crash", "hang")

# Retire-interface signals compared by the strobe family, with the row names
# used in the lockstep comparison tables.
STROBE_SIGNALS = {
    "valid": "Instruction_is_done",
    "insn": "Instruction",
    "rs1_addr": "rs1_address",
    "rs2_addr": "rs2_address",
    "rs1_rdata": "rs1_read_data",
    "rs2_rdata": "rs2_read_data",
    "rd_addr": "rd_address",
    "rd_wdata": "rd_write_data",
    "pc_rdata": "current_PC",
    "pc_wdata": "next_PC",
    "mem_addr": "memory_address",
    "mem_rmask": "memory_read_mask",
    "mem_rdata": "memory_read_data",
    "mem_wmask": "memory_write_mask",
    "mem_wdata": "memory_write_data",
}

CRASH_CODES = {
    isa.CAUSE_INSN_MISALIGNED: "insn_misaligned",
    isa.CAUSE_INSN_ACCESS_FAULT: "insn_access_fault",
    isa.CAUSE_ILLEGAL_INSN: "illegal_insn",
    isa.CAUSE_BREAKPOINT: "breakpoint",
    isa.CAUSE_LOAD_ACCESS_FAULT: "load_access_fault",
    isa.CAUSE_STORE_ACCESS_FAULT: "store_access_fault",
    isa.CAUSE_ECALL_M: "ecall_mmode",
}

DEAD_STATE_WINDOW = 8


# ------------------------------------------------------------------ strobe

def strobe_text(field: str, literal_valid: bool = False) -> str:
    if field == "valid" and literal_valid:
        return "a_valid: assert property (golden_valid == faulty_valid);"
    if field == "valid":
        # a retire the faulty core loses by trapping is a crash, not a silent corruption
        return (f"a_valid: assert property (!faulty_trap_enter && faulty_ctrl_fsm_cs != 2'd{TRAP} "
                f"|-> golden_valid == faulty_valid);")
    return f"a_{field}: assert property (golden_valid && faulty_valid |-> golden_{field} == faulty_{field});"


def gen_strobe_properties(ls: Lockstep, literal_valid: bool = False) -> list[Property]:
    """One equality assertion per compared retire signal (15 in total).

    By default ``a_valid`` is waived while the faulty core enters or sits in
    TRAP, leaving trap-induced loss of retirement to the crash family;
    ``literal_valid`` gives the unconditional form.
    """
    names = {}
    for f in STROBE_SIGNALS:
        names[f"golden_{f}"] = ls.golden[f]
        names[f"faulty_{f}"] = ls.faulty[f]
    names["faulty_trap_enter"] = FAULTY + "trap_enter"
    names["faulty_ctrl_fsm_cs"] = FAULTY + "ctrl_fsm_cs"
    out = []
    for f in STROBE_SIGNALS:
        p = compile_property(strobe_text(f, literal_valid), ls.ts, names, name=f"strobe.{f}", family="strobe")
        out.append(p)
    return out


# ------------------------------------------------------------------- crash

def crash_text(code: int) -> str:
    name = CRASH_CODES[code]
    return f"a_{name}: assert property (crash_priv_mode==2'b11 |-> crash_mcause_q!=6'd{code});"


def gen_crash_properties(core: TransitionSystem, prefix: str = "") -> list[Property]:
    names = {"crash_priv_mode": prefix + "priv_mode", "crash_mcause_q": prefix + "mcause_q"}
    return [compile_property(crash_text(c), core, names, name=f"crash.{n}", family="crash")
            for c, n in CRASH_CODES.items()]


# -------------------------------------------------------------------- hang

HANG_WFI_TEXT = f"a_hang_WFI: assert property (!halt&&valid |-> insn!=32'h{isa.WFI_WORD:08x});"


def dead_state_text(window: int) -> str:
    return (f"c_dead_state: cover property (hang_fsm != 2'd{BOOT} && hang_fsm != 2'd{SLEEP} "
            f"&& hang_quiet >= {window});")


def dead_state_monitor(core: TransitionSystem, prefix: str = "", window: int = DEAD_STATE_WINDOW) -> tuple[AuxNet, ...]:
    """Counts consecutive non-retiring cycles in one FSM state (saturating at ``window``).

    The count includes the current cycle, so ``quiet >= window`` means the
    FSM held its value and nothing retired for ``window`` cycles ending now.
    """
    if window < 1:
        raise ValueError("dead-state window must be >= 1")
    w = window.bit_length()
    fsm = core.ref(prefix + "ctrl_fsm_cs")
    valid = core.ref(prefix + "valid")
    prev = E.ref(prefix + "aux_hang_prev_fsm_q", fsm.width)
    run_q = E.ref(prefix + "aux_hang_quiet_q", w)
    inc = E.ite(E.eq(run_q, window), run_q, run_q + 1)
    same = E.and_(E.eq(fsm, prev), E.neq(run_q, 0))
    quiet = E.ite(valid, E.const(w, 0), E.ite(same, inc, E.const(w, 1)))
    quiet_net = E.ref(prefix + "aux_hang_quiet", w)
    return (
        AuxNet("register", prev.name, fsm.width, fsm),
        AuxNet("register", run_q.name, w, quiet_net),
        AuxNet("wire", quiet_net.name, w, quiet),
    )


def gen_hang_properties(core: TransitionSystem, prefix: str = "", window: int = DEAD_STATE_WINDOW) -> list[Property]:
    names = {n: prefix + n for n in ("halt", "valid", "insn")}
    wfi = compile_property(HANG_WFI_TEXT, core, names, name="hang.wfi", family="hang")
    aux = dead_state_monitor(core, prefix, window)
    names = {"hang_fsm": prefix + "ctrl_fsm_cs", "hang_quiet": prefix + "aux_hang_quiet"}
    dead = compile_property(dead_state_text(window), core, names, name="hang.dead_state", family="hang", aux=aux)
    return [wfi, dead]


# -------------------------------------------------------------------- arch

IMM_I = "{{20{insn[31]}}, insn[31:20]}"
IMM_S = "{{20{insn[31]}}, insn[31:25], insn[11:7]}"
IMM_B = "{{20{insn[31]}}, insn[7], insn[30:25], insn[11:8], 1'b0}"
IMM_U = "{insn[31:12], 12'd0}"
IMM_J = "{{12{insn[31]}}, insn[19:12], insn[20], insn[30:21], 1'b0}"
PC4 = "pc_rdata + 32'd4"
SHAMT = "{27'd0, insn[24:20]}"


def _wb(value: str) -> str:
    return f"rd_addr == insn[11:7] && rd_wdata == (insn[11:7] == 5'd0 ? 32'd0 : ({value}))"


_NO_WB = "rd_addr == 5'd0 && rd_wdata == 32'd0"
_NO_MEM = "mem_rmask == 4'd0 && mem_wmask == 4'd0"

_OPC = {
    "LUI": "0110111", "AUIPC": "0010111", "JAL": "1101111", "JALR": "1100111",
    "BRANCH": "1100011", "LOAD": "0000011", "STORE": "0100011", "OP_IMM": "0010011", "OP": "0110011",
}

_F3 = {
    "BEQ": 0, "BNE": 1, "BLT": 4, "BGE": 5, "BLTU": 6, "BGEU": 7,
    "LB": 0, "LH": 1, "LW": 2, "LBU": 4, "LHU": 5, "SB": 0, "SH": 1, "SW": 2,
    "ADDI": 0, "SLTI": 2, "SLTIU": 3, "XORI": 4, "ORI": 6, "ANDI": 7, "SLLI": 1, "SRLI": 5, "SRAI": 5,
    "ADD": 0, "SUB": 0, "SLL": 1, "SLT": 2, "SLTU": 3, "XOR": 4, "SRL": 5, "SRA": 5, "OR": 6, "AND": 7,
    "JALR": 0,
}

_BRANCH_COND = {
    "BEQ": "rs1_rdata == rs2_rdata",
    "BNE": "rs1_rdata != rs2_rdata",
    "BLT": "$signed(rs1_rdata) < $signed(rs2_rdata)",
    "BGE": "$signed(rs1_rdata) >= $signed(rs2_rdata)",
    "BLTU": "rs1_rdata < rs2_rdata",
    "BGEU": "rs1_rdata >= rs2_rdata",
}

_OP_VALUE = {
    "ADD": "rs1_rdata + {b}",
    "SUB": "rs1_rdata - {b}",
    "SLL": "rs1_rdata << {sh}",
    "SLT": "{{31'd0, $signed(rs1_rdata) < $signed({b})}}",
    "SLTU": "{{31'd0, rs1_rdata < {b}}}",
    "XOR": "rs1_rdata ^ {b}",
    "SRL": "rs1_rdata >> {sh}",
    "SRA": "rs1_rdata >>> {sh}",
    "OR": "rs1_rdata | {b}",
    "AND": "rs1_rdata & {b}",
}

_LOAD_VALUE = {
    "LB": "{{24{ld[7]}}, ld[7:0]}",
    "LH": "{{16{ld[15]}}, ld[15:0]}",
    "LW": "ld",
    "LBU": "{24'd0, ld[7:0]}",
    "LHU": "{16'd0, ld[15:0]}",
}

_SIZE_MASK = {"B": "4'b0001", "H": "4'b0011", "W": "4'b1111"}


def _match(cls: str) -> str:
    if cls == "ECALL":
        return f"insn == 32'h{isa.ECALL_WORD:08x}"
    if cls == "EBREAK":
        return f"insn == 32'h{isa.EBREAK_WORD:08x}"
    if cls == "WFI":
        return f"insn == 32'h{isa.WFI_WORD:08x}"
    if cls in ("LUI", "AUIPC", "JAL"):
        return f"insn[6:0] == 7'b{_OPC[cls]}"
    group = ("BRANCH" if cls in isa.BRANCHES else "LOAD" if cls in isa.LOADS else "STORE" if cls in isa.STORES
             else "OP_IMM" if cls in isa.OP_IMM else "OP" if cls in isa.OP else cls)
    m = f"insn[6:0] == 7'b{_OPC[group]} && insn[14:12] == 3'd{_F3[cls]}"
    if cls in ("SLLI", "SRLI", "ADD", "SLL", "SLT", "SLTU", "XOR", "SRL", "OR", "AND"):
        m += " && insn[31:25] == 7'd0"
    if cls in ("SRAI", "SUB", "SRA"):
        m += " && insn[31:25] == 7'b0100000"
    return m


def _effect(cls: str) -> str:
    seq = f"pc_wdata == {PC4}"
    if cls == "LUI":
        return f"{_wb(IMM_U)} && {seq}"
    if cls == "AUIPC":
        return f"{_wb('pc_rdata + ' + IMM_U)} && {seq}"
    if cls == "JAL":
        return f"{_wb(PC4)} && pc_wdata == pc_rdata + {IMM_J}"
    if cls == "JALR":
        return f"{_wb(PC4)} && pc_wdata == ((rs1_rdata + {IMM_I}) & 32'hfffffffe)"
    if cls in isa.BRANCHES:
        return f"{_NO_WB} && pc_wdata == (({_BRANCH_COND[cls]}) ? pc_rdata + {IMM_B} : {PC4})"
    if cls in isa.LOADS:
        addr = f"(rs1_rdata + {IMM_I})"
        size = {"LB": "B", "LBU": "B", "LH": "H", "LHU": "H", "LW": "W"}[cls]
        ld = f"(mem_rdata >> {{27'd0, {addr}[1:0], 3'd0}})"
        value = _LOAD_VALUE[cls].replace("ld", ld)
        return (f"{_wb(value)} && {seq} && mem_addr == {{{addr}[31:2], 2'b00}} && "
                f"mem_rmask == ({_SIZE_MASK[size]} << {addr}[1:0]) && mem_wmask == 4'd0")
    if cls in isa.STORES:
        addr = f"(rs1_rdata + {IMM_S})"
        size = cls[1]
        shifted = f"(rs2_rdata << {{27'd0, {addr}[1:0], 3'd0}})"
        keep = f"({{{{8{{mem_wmask[3]}}}}, {{8{{mem_wmask[2]}}}}, {{8{{mem_wmask[1]}}}}, {{8{{mem_wmask[0]}}}}}})"
        return (f"{_NO_WB} && {seq} && mem_addr == {{{addr}[31:2], 2'b00}} && "
                f"mem_wmask == ({_SIZE_MASK[size]} << {addr}[1:0]) && mem_rmask == 4'd0 && "
                f"mem_wdata == ({shifted} & {keep})")
    if cls in isa.OP_IMM:
        base = {"ADDI": "ADD", "SLTI": "SLT", "SLTIU": "SLTU", "XORI": "XOR", "ORI": "OR", "ANDI": "AND",
                "SLLI": "SLL", "SRLI": "SRL", "SRAI": "SRA"}[cls]
        value = _OP_VALUE[base].format(b=f"({IMM_I})", sh=SHAMT)
        return f"{_wb(value)} && {seq} && {_NO_MEM}"
    if cls in isa.OP:
        value = _OP_VALUE[cls].format(b="rs2_rdata", sh="{27'd0, rs2_rdata[4:0]}")
        return f"{_wb(value)} && {seq} && {_NO_MEM}"
    if cls == "WFI":
        return f"{_NO_WB} && {seq} && {_NO_MEM}"
    # ECALL and EBREAK trap instead of retiring
    return "1'b0"


def arch_text(cls: str) -> str:
    return f"a_arch_{cls.lower()}: assert property (valid && {_match(cls)} |-> {_effect(cls)});"


_RS1_USERS = "insn[6:0] != 7'b0110111 && insn[6:0] != 7'b0010111 && insn[6:0] != 7'b1101111"
_RS2_USERS = "(insn[6:0] == 7'b0110011 || insn[6:0] == 7'b0100011 || insn[6:0] == 7'b1100011)"

OPERANDS_TEXT = "a_arch_operands: assert property (valid |-> rs1_addr == insn[19:15] && rs2_addr == insn[24:20]);"
REGS_TEXT = (f"a_arch_regs: assert property (valid |-> ({_RS1_USERS} ? rs1_rdata == arch_rs1 : 1'b1) "
             f"&& ({_RS2_USERS} ? rs2_rdata == arch_rs2 : 1'b1));")
PC_TEXT = "a_arch_pc: assert property (valid |-> (arch_seen ? pc_rdata == arch_last_pc : pc_rdata == arch_reset_pc));"
FETCH_TEXT = "a_arch_fetch: assert property (valid |-> insn == arch_fetched);"


def arch_monitor(core: TransitionSystem, prefix: str, regfile_size: int, reset_pc: int) -> tuple[AuxNet, ...]:
    """Shadow register file, last next-pc and last fetched word, fed only by interface signals."""
    r = lambda n: core.ref(prefix + n)  # noqa: E731
    aux = []
    valid, rd, wd = r("valid"), r("rd_addr"), r("rd_wdata")
    shadow = []
    for i in range(1, regfile_size):
        name = f"{prefix}aux_arch_x{i}"
        q = E.ref(name, 32)
        aux.append(AuxNet("register", name, 32, E.ite(E.and_(valid, E.eq(rd, i)), wd, q)))
        shadow.append(q)

    def read(idx):
        out = E.const(32, 0)
        for i, q in enumerate(shadow, start=1):
            out = E.ite(E.eq(idx, i), q, out)
        return out

    aux.append(AuxNet("wire", prefix + "aux_arch_rs1", 32, read(r("rs1_addr"))))
    aux.append(AuxNet("wire", prefix + "aux_arch_rs2", 32, read(r("rs2_addr"))))
    seen = E.ref(prefix + "aux_arch_seen_q", 1)
    last = E.ref(prefix + "aux_arch_last_pc_q", 32)
    aux.append(AuxNet("register", seen.name, 1, E.or_(seen, valid)))
    aux.append(AuxNet("register", last.name, 32, E.ite(valid, r("pc_wdata"), last)))
    aux.append(AuxNet("wire", prefix + "aux_arch_reset_pc", 32, E.const(32, reset_pc)))
    fetched = E.ref(prefix + "aux_arch_fetched_q", 32)
    gnt, word = r("instr_gnt_i"), r("instr_rdata_i")
    aux.append(AuxNet("register", fetched.name, 32, E.ite(gnt, word, fetched)))
    return tuple(aux)


def gen_architectural_properties(core: TransitionSystem, prefix: str = "", regfile_size: int | None = None) -> list[Property]:
    """One ISA-effect assertion per instruction class plus operand, register, pc and fetch consistency."""
    cfg = core.meta.get("core_config")
    n = regfile_size or (cfg.regfile_size if cfg else 32)
    reset_pc = cfg.reset_pc if cfg else 0
    names = {f: prefix + f for f in RETIRE_FIELDS}
    out = []
    for cls in isa.CLASSES:
        out.append(compile_property(arch_text(cls), core, names, name=f"arch.{cls.lower()}", family="arch"))
    aux = arch_monitor(core, prefix, n, reset_pc)
    names = dict(names)
    names.update({"arch_rs1": prefix + "aux_arch_rs1", "arch_rs2": prefix + "aux_arch_rs2",
                  "arch_seen": prefix + "aux_arch_seen_q", "arch_last_pc": prefix + "aux_arch_last_pc_q",
                  "arch_reset_pc": prefix + "aux_arch_reset_pc", "arch_fetched": prefix + "aux_arch_fetched_q"})
    for tag, text in (("operands", OPERANDS_TEXT), ("regs", REGS_TEXT), ("pc", PC_TEXT), ("fetch", FETCH_TEXT)):
        out.append(compile_property(text, core, names, name=f"arch.{tag}", family="arch", aux=aux))
    return out


def builtin_corpus(regfile_size: int = 8) -> list[str]:
    """Text of every builtin property (for parser round-trip checks)."""
    out = [strobe_text(f) for f in STROBE_SIGNALS]
    out += [crash_text(c) for c in CRASH_CODES]
    out += [HANG_WFI_TEXT, dead_state_text(DEAD_STATE_WINDOW)]
    out += [arch_text(c) for c in isa.CLASSES]
    out += [OPERANDS_TEXT, REGS_TEXT, PC_TEXT, FETCH_TEXT]
    return out
