"""RV32I subset: decoding, encoding, a tiny assembler and a reference ISS.

The reference decoder here works field by field; the netlist decoder in
:mod:`seutrace.rv32.core` is driven by the mask/match table :data:`ENCODINGS`.
The two are cross-checked in the tests.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

# instruction classes
LUI, AUIPC, JAL, JALR = "LUI", "AUIPC", "JAL", "JALR"
BEQ, BNE, BLT, BGE, BLTU, BGEU = "BEQ", "BNE", "BLT", "BGE", "BLTU", "BGEU"
LB, LH, LW, LBU, LHU = "LB", "LH", "LW", "LBU", "LHU"
SB, SH, SW = "SB", "SH", "SW"
ADDI, SLTI, SLTIU, XORI, ORI, ANDI, SLLI, SRLI, SRAI = (
    "ADDI", "SLTI", "SLTIU", "XORI", "ORI", "ANDI", "SLLI", "SRLI", "SRAI")
ADD, SUB, SLL, SLT, SLTU, XOR, SRL, SRA, OR, AND = (
    "ADD", "SUB", "SLL", "SLT", "SLTU", "XOR", "SRL", "SRA", "OR", "AND")
ECALL, EBREAK, WFI = "ECALL", "EBREAK", "WFI"
ILLEGAL = "ILLEGAL"

BRANCHES = (BEQ, BNE, BLT, BGE, BLTU, BGEU)
LOADS = (LB, LH, LW, LBU, LHU)
STORES = (SB, SH, SW)
OP_IMM = (ADDI, SLTI, SLTIU, XORI, ORI, ANDI, SLLI, SRLI, SRAI)
OP = (ADD, SUB, SLL, SLT, SLTU, XOR, SRL, SRA, OR, AND)
SYSTEM = (ECALL, EBREAK, WFI)
CLASSES = (LUI, AUIPC, JAL, JALR) + BRANCHES + LOADS + STORES + OP_IMM + OP + SYSTEM

WFI_WORD = 0x10500073
ECALL_WORD = 0x00000073
EBREAK_WORD = 0x00100073
NOP_WORD = 0x00000013

# mcause exception codes
CAUSE_INSN_MISALIGNED = 0
CAUSE_INSN_ACCESS_FAULT = 1
CAUSE_ILLEGAL_INSN = 2
CAUSE_BREAKPOINT = 3
CAUSE_LOAD_ACCESS_FAULT = 5
CAUSE_STORE_ACCESS_FAULT = 7
CAUSE_ECALL_M = 11
CAUSES = {
    CAUSE_INSN_MISALIGNED: "insn_misaligned",
    CAUSE_INSN_ACCESS_FAULT: "insn_access_fault",
    CAUSE_ILLEGAL_INSN: "illegal_insn",
    CAUSE_BREAKPOINT: "breakpoint",
    CAUSE_LOAD_ACCESS_FAULT: "load_access_fault",
    CAUSE_STORE_ACCESS_FAULT: "store_access_fault",
    CAUSE_ECALL_M: "ecall_mmode",
}

# register operands read/written by each format
_FMT = {}
for _c in (LUI, AUIPC, JAL):
    _FMT[_c] = ("rd",)
for _c in (JALR,) + LOADS + OP_IMM:
    _FMT[_c] = ("rd", "rs1")
for _c in BRANCHES + STORES:
    _FMT[_c] = ("rs1", "rs2")
for _c in OP:
    _FMT[_c] = ("rd", "rs1", "rs2")
for _c in SYSTEM:
    _FMT[_c] = ()


def reg_fields(cls: str) -> tuple[str, ...]:
    """Register fields an instruction class actually uses."""
    return _FMT.get(cls, ())


def writes_rd(cls: str) -> bool:
    return "rd" in _FMT.get(cls, ())


# (class, mask, match): the netlist decoder's table
ENCODINGS: list[tuple[str, int, int]] = [
    (LUI, 0x7F, 0x37),
    (AUIPC, 0x7F, 0x17),
    (JAL, 0x7F, 0x6F),
    (JALR, 0x707F, 0x67),
    (BEQ, 0x707F, 0x0063),
    (BNE, 0x707F, 0x1063),
    (BLT, 0x707F, 0x4063),
    (BGE, 0x707F, 0x5063),
    (BLTU, 0x707F, 0x6063),
    (BGEU, 0x707F, 0x7063),
    (LB, 0x707F, 0x0003),
    (LH, 0x707F, 0x1003),
    (LW, 0x707F, 0x2003),
    (LBU, 0x707F, 0x4003),
    (LHU, 0x707F, 0x5003),
    (SB, 0x707F, 0x0023),
    (SH, 0x707F, 0x1023),
    (SW, 0x707F, 0x2023),
    (ADDI, 0x707F, 0x0013),
    (SLTI, 0x707F, 0x2013),
    (SLTIU, 0x707F, 0x3013),
    (XORI, 0x707F, 0x4013),
    (ORI, 0x707F, 0x6013),
    (ANDI, 0x707F, 0x7013),
    (SLLI, 0xFE00707F, 0x00001013),
    (SRLI, 0xFE00707F, 0x00005013),
    (SRAI, 0xFE00707F, 0x40005013),
    (ADD, 0xFE00707F, 0x00000033),
    (SUB, 0xFE00707F, 0x40000033),
    (SLL, 0xFE00707F, 0x00001033),
    (SLT, 0xFE00707F, 0x00002033),
    (SLTU, 0xFE00707F, 0x00003033),
    (XOR, 0xFE00707F, 0x00004033),
    (SRL, 0xFE00707F, 0x00005033),
    (SRA, 0xFE00707F, 0x40005033),
    (OR, 0xFE00707F, 0x00006033),
    (AND, 0xFE00707F, 0x00007033),
    (ECALL, 0xFFFFFFFF, ECALL_WORD),
    (EBREAK, 0xFFFFFFFF, EBREAK_WORD),
    (WFI, 0xFFFFFFFF, WFI_WORD),
]


def _sx(value: int, bits: int) -> int:
    """Sign-extend ``bits`` wide value to 32 bits (unsigned result)."""
    value &= (1 << bits) - 1
    if value >> (bits - 1):
        value |= 0xFFFFFFFF ^ ((1 << bits) - 1)
    return value


def to_signed32(v: int) -> int:
    v &= 0xFFFFFFFF
    return v - (1 << 32) if v >> 31 else v


@dataclass(frozen=True)
class DecodedInsn:
    word: int
    opcode: int
    funct3: int
    funct7: int
    rs1: int
    rs2: int
    rd: int
    imm_i: int
    imm_s: int
    imm_b: int
    imm_u: int
    imm_j: int
    cls: str

    @property
    def imm(self) -> int:
        """The immediate relevant for this class (0 when it has none)."""
        c = self.cls
        if c in (LUI, AUIPC):
            return self.imm_u
        if c == JAL:
            return self.imm_j
        if c in BRANCHES:
            return self.imm_b
        if c in STORES:
            return self.imm_s
        if c in (JALR,) + LOADS + OP_IMM:
            return self.imm_i
        return 0


def fields(word: int) -> dict:
    w = word & 0xFFFFFFFF
    return dict(
        opcode=w & 0x7F,
        rd=(w >> 7) & 0x1F,
        funct3=(w >> 12) & 0x7,
        rs1=(w >> 15) & 0x1F,
        rs2=(w >> 20) & 0x1F,
        funct7=(w >> 25) & 0x7F,
        imm_i=_sx(w >> 20, 12),
        imm_s=_sx(((w >> 25) << 5) | ((w >> 7) & 0x1F), 12),
        imm_b=_sx(((w >> 31) << 12) | (((w >> 7) & 1) << 11) | (((w >> 25) & 0x3F) << 5) | (((w >> 8) & 0xF) << 1), 13),
        imm_u=w & 0xFFFFF000,
        imm_j=_sx(((w >> 31) << 20) | (((w >> 12) & 0xFF) << 12) | (((w >> 20) & 1) << 11) | (((w >> 21) & 0x3FF) << 1), 21),
    )


def _classify(f: dict, word: int) -> str:
    op, f3, f7 = f["opcode"], f["funct3"], f["funct7"]
    if op == 0b0110111:
        return LUI
    if op == 0b0010111:
        return AUIPC
    if op == 0b1101111:
        return JAL
    if op == 0b1100111:
        return JALR if f3 == 0 else ILLEGAL
    if op == 0b1100011:
        return {0: BEQ, 1: BNE, 4: BLT, 5: BGE, 6: BLTU, 7: BGEU}.get(f3, ILLEGAL)
    if op == 0b0000011:
        return {0: LB, 1: LH, 2: LW, 4: LBU, 5: LHU}.get(f3, ILLEGAL)
    if op == 0b0100011:
        return {0: SB, 1: SH, 2: SW}.get(f3, ILLEGAL)
    if op == 0b0010011:
        if f3 == 1:
            return SLLI if f7 == 0 else ILLEGAL
        if f3 == 5:
            return {0: SRLI, 0x20: SRAI}.get(f7, ILLEGAL)
        return {0: ADDI, 2: SLTI, 3: SLTIU, 4: XORI, 6: ORI, 7: ANDI}[f3]
    if op == 0b0110011:
        if f7 == 0:
            return (ADD, SLL, SLT, SLTU, XOR, SRL, OR, AND)[f3]
        if f7 == 0x20:
            return {0: SUB, 5: SRA}.get(f3, ILLEGAL)
        return ILLEGAL
    if op == 0b1110011:
        return {ECALL_WORD: ECALL, EBREAK_WORD: EBREAK, WFI_WORD: WFI}.get(word, ILLEGAL)
    return ILLEGAL


def decode(word: int, regfile_size: int = 32) -> DecodedInsn:
    """Total decoder; register fields beyond ``regfile_size`` make the word illegal."""
    word &= 0xFFFFFFFF
    f = fields(word)
    cls = _classify(f, word)
    if cls != ILLEGAL and any(f[r] >= regfile_size for r in reg_fields(cls)):
        cls = ILLEGAL
    return DecodedInsn(word=word, cls=cls, **f)


# ------------------------------------------------------------------ encoding

_OPC = {
    "LUI": 0x37, "AUIPC": 0x17, "JAL": 0x6F, "JALR": 0x67, "BRANCH": 0x63,
    "LOAD": 0x03, "STORE": 0x23, "OP_IMM": 0x13, "OP": 0x33,
}
_F3 = {
    JALR: 0, BEQ: 0, BNE: 1, BLT: 4, BGE: 5, BLTU: 6, BGEU: 7,
    LB: 0, LH: 1, LW: 2, LBU: 4, LHU: 5, SB: 0, SH: 1, SW: 2,
    ADDI: 0, SLTI: 2, SLTIU: 3, XORI: 4, ORI: 6, ANDI: 7, SLLI: 1, SRLI: 5, SRAI: 5,
    ADD: 0, SUB: 0, SLL: 1, SLT: 2, SLTU: 3, XOR: 4, SRL: 5, SRA: 5, OR: 6, AND: 7,
}


def _check_imm(imm: int, bits: int, cls: str, align: int = 1) -> int:
    lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    if not lo <= imm <= hi:
        raise ValueError(f"{cls}: immediate {imm} out of range")
    if imm % align:
        raise ValueError(f"{cls}: immediate {imm} not a multiple of {align}")
    return imm & ((1 << bits) - 1)


def encode(cls: str, rd: int = 0, rs1: int = 0, rs2: int = 0, imm: int = 0) -> int:
    """Assemble one instruction from its class and operands."""
    for r in (rd, rs1, rs2):
        if not 0 <= r < 32:
            raise ValueError(f"bad register x{r}")
    if cls in (LUI, AUIPC):
        if imm & 0xFFF:
            raise ValueError(f"{cls}: immediate {imm:#x} has nonzero low 12 bits")
        return (imm & 0xFFFFF000) | (rd << 7) | _OPC[cls]
    if cls == JAL:
        v = _check_imm(imm, 21, cls, 2)
        body = ((v >> 20) & 1) << 31 | ((v >> 1) & 0x3FF) << 21 | ((v >> 11) & 1) << 20 | ((v >> 12) & 0xFF) << 12
        return body | (rd << 7) | _OPC["JAL"]
    if cls in BRANCHES:
        v = _check_imm(imm, 13, cls, 2)
        body = ((v >> 12) & 1) << 31 | ((v >> 5) & 0x3F) << 25 | ((v >> 1) & 0xF) << 8 | ((v >> 11) & 1) << 7
        return body | rs2 << 20 | rs1 << 15 | _F3[cls] << 12 | _OPC["BRANCH"]
    if cls in STORES:
        v = _check_imm(imm, 12, cls)
        return (v >> 5) << 25 | rs2 << 20 | rs1 << 15 | _F3[cls] << 12 | (v & 0x1F) << 7 | _OPC["STORE"]
    if cls in (SLLI, SRLI, SRAI):
        if not 0 <= imm < 32:
            raise ValueError(f"{cls}: shift amount {imm} out of range")
        f7 = 0x20 if cls == SRAI else 0
        return f7 << 25 | imm << 20 | rs1 << 15 | _F3[cls] << 12 | rd << 7 | _OPC["OP_IMM"]
    if cls in (JALR,) + LOADS + OP_IMM:
        v = _check_imm(imm, 12, cls)
        opc = _OPC["JALR"] if cls == JALR else _OPC["LOAD"] if cls in LOADS else _OPC["OP_IMM"]
        return v << 20 | rs1 << 15 | _F3[cls] << 12 | rd << 7 | opc
    if cls in OP:
        f7 = 0x20 if cls in (SUB, SRA) else 0
        return f7 << 25 | rs2 << 20 | rs1 << 15 | _F3[cls] << 12 | rd << 7 | _OPC["OP"]
    if cls == ECALL:
        return ECALL_WORD
    if cls == EBREAK:
        return EBREAK_WORD
    if cls == WFI:
        return WFI_WORD
    raise ValueError(f"cannot encode {cls}")


_REG = re.compile(r"^x(\d+)$")
_ALIASES = {"zero": 0, "ra": 1, "sp": 2, "gp": 3, "tp": 4, "t0": 5, "t1": 6, "t2": 7, "s0": 8, "fp": 8, "s1": 9}


def _reg(tok: str) -> int:
    tok = tok.strip().lower()
    if tok in _ALIASES:
        return _ALIASES[tok]
    m = _REG.match(tok)
    if not m or int(m.group(1)) > 31:
        raise ValueError(f"bad register {tok!r}")
    return int(m.group(1))


def assemble(source: str, base: int = 0) -> list[int]:
    """Two-pass assembler for the supported subset.

    One instruction per line, ``label:`` prefixes, ``#`` comments.  Pseudo
    instructions: ``nop``, ``li rd, imm`` (12-bit), ``mv``, ``j``, ``beqz``,
    ``bnez``.  Loads/stores use ``off(rs1)``.
    """
    lines = []
    labels: dict[str, int] = {}
    for raw in source.splitlines():
        line = raw.split("#", 1)[0].strip()
        while ":" in line:
            lab, line = line.split(":", 1)
            labels[lab.strip()] = base + 4 * len(lines)
            line = line.strip()
        if line:
            lines.append(line)
    words = []
    for i, line in enumerate(lines):
        pc = base + 4 * i
        parts = line.replace(",", " ").split()
        mnem, ops = parts[0].upper(), parts[1:]

        def target(tok: str) -> int:
            if tok in labels:
                return labels[tok] - pc
            return int(tok, 0)

        def memop(tok: str) -> tuple[int, int]:
            m = re.match(r"^(-?\w+)\((\w+)\)$", tok)
            if not m:
                raise ValueError(f"bad memory operand {tok!r}")
            return int(m.group(1), 0), _reg(m.group(2))

        if mnem == "NOP":
            words.append(NOP_WORD)
        elif mnem == "LI":
            words.append(encode(ADDI, rd=_reg(ops[0]), imm=int(ops[1], 0)))
        elif mnem == "MV":
            words.append(encode(ADDI, rd=_reg(ops[0]), rs1=_reg(ops[1])))
        elif mnem == "J":
            words.append(encode(JAL, rd=0, imm=target(ops[0])))
        elif mnem in ("BEQZ", "BNEZ"):
            words.append(encode(BEQ if mnem == "BEQZ" else BNE, rs1=_reg(ops[0]), rs2=0, imm=target(ops[1])))
        elif mnem in (LUI, AUIPC):
            words.append(encode(mnem, rd=_reg(ops[0]), imm=int(ops[1], 0) << 12))
        elif mnem == JAL:
            if len(ops) == 1:
                ops = ["x1"] + ops
            words.append(encode(JAL, rd=_reg(ops[0]), imm=target(ops[1])))
        elif mnem == JALR:
            if len(ops) == 2 and "(" in ops[1]:
                off, rs1 = memop(ops[1])
            else:
                rs1, off = _reg(ops[1]), int(ops[2], 0) if len(ops) > 2 else 0
            words.append(encode(JALR, rd=_reg(ops[0]), rs1=rs1, imm=off))
        elif mnem in BRANCHES:
            words.append(encode(mnem, rs1=_reg(ops[0]), rs2=_reg(ops[1]), imm=target(ops[2])))
        elif mnem in LOADS:
            off, rs1 = memop(ops[1])
            words.append(encode(mnem, rd=_reg(ops[0]), rs1=rs1, imm=off))
        elif mnem in STORES:
            off, rs1 = memop(ops[1])
            words.append(encode(mnem, rs2=_reg(ops[0]), rs1=rs1, imm=off))
        elif mnem in OP_IMM:
            words.append(encode(mnem, rd=_reg(ops[0]), rs1=_reg(ops[1]), imm=int(ops[2], 0)))
        elif mnem in OP:
            words.append(encode(mnem, rd=_reg(ops[0]), rs1=_reg(ops[1]), rs2=_reg(ops[2])))
        elif mnem in SYSTEM:
            words.append(encode(mnem))
        else:
            raise ValueError(f"line {i + 1}: unknown mnemonic {parts[0]!r}")
    return words


def disassemble(word: int) -> str:
    d = decode(word)
    c = d.cls
    if c == ILLEGAL:
        return f".word 0x{word:08x}"
    if c in (LUI, AUIPC):
        return f"{c.lower()} x{d.rd}, 0x{d.imm_u >> 12:x}"
    if c == JAL:
        return f"jal x{d.rd}, {to_signed32(d.imm_j)}"
    if c == JALR:
        return f"jalr x{d.rd}, {to_signed32(d.imm_i)}(x{d.rs1})"
    if c in BRANCHES:
        return f"{c.lower()} x{d.rs1}, x{d.rs2}, {to_signed32(d.imm_b)}"
    if c in LOADS:
        return f"{c.lower()} x{d.rd}, {to_signed32(d.imm_i)}(x{d.rs1})"
    if c in STORES:
        return f"{c.lower()} x{d.rs2}, {to_signed32(d.imm_s)}(x{d.rs1})"
    if c in (SLLI, SRLI, SRAI):
        return f"{c.lower()} x{d.rd}, x{d.rs1}, {d.rs2}"
    if c in OP_IMM:
        return f"{c.lower()} x{d.rd}, x{d.rs1}, {to_signed32(d.imm_i)}"
    if c in OP:
        return f"{c.lower()} x{d.rd}, x{d.rs1}, x{d.rs2}"
    return c.lower()


# --------------------------------------------------------- reference ISS


_SIZE = {LB: 1, LBU: 1, SB: 1, LH: 2, LHU: 2, SH: 2, LW: 4, SW: 4}


@dataclass
class Retire:
    """What one completed instruction makes architecturally visible."""

    insn: int
    pc_rdata: int
    pc_wdata: int
    rs1_addr: int
    rs2_addr: int
    rs1_rdata: int
    rs2_rdata: int
    rd_addr: int = 0
    rd_wdata: int = 0
    mem_addr: int = 0
    mem_rmask: int = 0
    mem_wmask: int = 0
    mem_rdata: int = 0
    mem_wdata: int = 0


@dataclass
class IsaState:
    pc: int
    regs: list[int] = field(default_factory=lambda: [0] * 32)
    trapped: int | None = None
    sleeping: bool = False


def alu(cls: str, a: int, b: int) -> int:
    """Register/immediate ALU result for OP and OP-IMM classes (32-bit unsigned)."""
    a &= 0xFFFFFFFF
    b &= 0xFFFFFFFF
    sh = b & 31
    if cls in (ADD, ADDI):
        return (a + b) & 0xFFFFFFFF
    if cls == SUB:
        return (a - b) & 0xFFFFFFFF
    if cls in (SLL, SLLI):
        return (a << sh) & 0xFFFFFFFF
    if cls in (SLT, SLTI):
        return int(to_signed32(a) < to_signed32(b))
    if cls in (SLTU, SLTIU):
        return int(a < b)
    if cls in (XOR, XORI):
        return a ^ b
    if cls in (SRL, SRLI):
        return a >> sh
    if cls in (SRA, SRAI):
        return (to_signed32(a) >> sh) & 0xFFFFFFFF
    if cls in (OR, ORI):
        return a | b
    if cls in (AND, ANDI):
        return a & b
    raise ValueError(cls)


def branch_taken(cls: str, a: int, b: int) -> bool:
    return {
        BEQ: a == b,
        BNE: a != b,
        BLT: to_signed32(a) < to_signed32(b),
        BGE: to_signed32(a) >= to_signed32(b),
        BLTU: a < b,
        BGEU: a >= b,
    }[cls]


def step(state: IsaState, word: int, load_word, regfile_size: int = 32, dmem: tuple[int, int] | None = None,
         imem: tuple[int, int] | None = None) -> Retire | None:
    """Execute ``word`` at ``state.pc``.

    ``load_word(aligned_addr)`` supplies data memory.  Returns the retire
    record, or None if the instruction trapped (``state.trapped`` holds the
    cause).  ``imem``/``dmem`` are half-open legal ranges; a successor pc
    outside ``imem`` traps with an instruction access fault after the current
    instruction retires, as in the modelled core.
    """
    if state.trapped is not None or state.sleeping:
        return None
    pc = state.pc
    if pc & 3:
        state.trapped = CAUSE_INSN_MISALIGNED
        return None
    d = decode(word, regfile_size)
    c = d.cls
    regs = state.regs
    if c == ILLEGAL:
        state.trapped = CAUSE_ILLEGAL_INSN
        return None
    if c == EBREAK:
        state.trapped = CAUSE_BREAKPOINT
        return None
    if c == ECALL:
        state.trapped = CAUSE_ECALL_M
        return None
    r1 = regs[d.rs1] if d.rs1 < regfile_size else 0
    r2 = regs[d.rs2] if d.rs2 < regfile_size else 0
    ret = Retire(insn=word, pc_rdata=pc, pc_wdata=(pc + 4) & 0xFFFFFFFF, rs1_addr=d.rs1, rs2_addr=d.rs2,
                 rs1_rdata=r1, rs2_rdata=r2)
    result = None
    if c == LUI:
        result = d.imm_u
    elif c == AUIPC:
        result = (pc + d.imm_u) & 0xFFFFFFFF
    elif c == JAL:
        result = ret.pc_wdata
        ret.pc_wdata = (pc + d.imm_j) & 0xFFFFFFFF
    elif c == JALR:
        result = ret.pc_wdata
        ret.pc_wdata = (r1 + d.imm_i) & 0xFFFFFFFE
    elif c in BRANCHES:
        if branch_taken(c, r1, r2):
            ret.pc_wdata = (pc + d.imm_b) & 0xFFFFFFFF
    elif c in OP_IMM:
        b = d.rs2 if c in (SLLI, SRLI, SRAI) else d.imm_i
        result = alu(c, r1, b)
    elif c in OP:
        result = alu(c, r1, r2)
    elif c in LOADS or c in STORES:
        addr = (r1 + (d.imm_i if c in LOADS else d.imm_s)) & 0xFFFFFFFF
        size = _SIZE[c]
        bad = addr % size != 0 or (dmem is not None and not dmem[0] <= addr < dmem[1])
        if bad:
            state.trapped = CAUSE_LOAD_ACCESS_FAULT if c in LOADS else CAUSE_STORE_ACCESS_FAULT
            return None
        off = addr & 3
        bmask = ((1 << size) - 1) << off
        ret.mem_addr = addr & ~3
        if c in LOADS:
            data = load_word(addr & ~3) & 0xFFFFFFFF
            ret.mem_rmask = bmask
            ret.mem_rdata = data
            raw = (data >> (8 * off)) & ((1 << (8 * size)) - 1)
            result = raw if c in (LBU, LHU, LW) else _sx(raw, 8 * size)
        else:
            ret.mem_wmask = bmask
            ret.mem_wdata = (r2 << (8 * off)) & _byte_mask(bmask)
    elif c == WFI:
        state.sleeping = True
    if result is not None and d.rd != 0:
        ret.rd_addr = d.rd
        ret.rd_wdata = result
        regs[d.rd] = result
    state.pc = ret.pc_wdata
    if imem is not None and not state.sleeping and not imem[0] <= state.pc < imem[1]:
        state.trapped = CAUSE_INSN_ACCESS_FAULT
    return ret


def _byte_mask(bmask: int) -> int:
    return sum(0xFF << (8 * i) for i in range(4) if bmask >> i & 1)
