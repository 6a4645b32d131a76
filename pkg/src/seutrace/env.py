"""Abstract instruction/data memories attached to a core.

Both ports answer a request one cycle later: the environment registers the
request (``env_*_req_q``) and drives the grant from that register.

Symbolic mode: the instruction returned on a grant is the free input
``imem_word``, constrained by :func:`instruction_validity_constraint` (and by
default by :func:`well_formed_constraint`); load data is the free input
``dmem_rdata``.  Concrete mode: fetches read a program image and a fetch
outside the image raises the instruction access-fault path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ir import expr as E
from .ir.expr import Expr
from .ir.system import NetlistError, TransitionSystem
from .rv32 import isa
from .rv32.core import CORE_INPUTS, CoreConfig, decode_signals, in_range

SYMBOLIC = "symbolic"
CONCRETE = "concrete"

IMEM_WORD = "imem_word"
DMEM_RDATA = "dmem_rdata"

LOOP_PROGRAM = """\
        addi x1, x0, 10
loop:   beqz x1, loopend
        addi x1, x1, -1
        j    loop
loopend: addi x3, x1, 0
"""


@dataclass(frozen=True)
class ProgramImage:
    base: int
    words: tuple[int, ...]

    def __post_init__(self):
        if self.base % 4:
            raise ValueError(f"program base {self.base:#x} is not 4-aligned")
        for w in self.words:
            if not 0 <= w < 1 << 32:
                raise ValueError(f"program word {w!r} is not a 32-bit value")

    @property
    def end(self) -> int:
        return self.base + 4 * len(self.words)

    @property
    def last_address(self) -> int:
        return self.end - 4

    def word_at(self, addr: int) -> int | None:
        if not self.base <= addr < self.end:
            return None
        return self.words[(addr - self.base) >> 2]

    def to_text(self) -> str:
        return "\n".join([f"{self.base:08x}"] + [f"{w:08x}" for w in self.words]) + "\n"

    @classmethod
    def from_text(cls, text: str) -> ProgramImage:
        lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines:
            raise ValueError("empty program image")
        try:
            vals = [int(ln, 16) for ln in lines]
        except ValueError as e:
            raise ValueError(f"program image lines must be hex words: {e}") from None
        return cls(vals[0], tuple(vals[1:]))

    @classmethod
    def load(cls, path: str) -> ProgramImage:
        with open(path) as fh:
            return cls.from_text(fh.read())

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def assemble(cls, source: str, base: int = 0) -> ProgramImage:
        return cls(base, tuple(isa.assemble(source, base)))


def loop_program(base: int = 0) -> ProgramImage:
    """Counting loop: ``x1 = 10``, decrement to zero, then copy to ``x3``."""
    return ProgramImage.assemble(LOOP_PROGRAM, base)


@dataclass(frozen=True)
class EnvConfig:
    mode: str = SYMBOLIC
    program: ProgramImage | None = None
    alignment_constraint: bool = True
    well_formed: bool = True
    grant_latency: int = 1
    data: ProgramImage | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.mode not in (SYMBOLIC, CONCRETE):
            raise ValueError(f"unknown env mode {self.mode!r}")
        if self.mode == CONCRETE and self.program is None:
            raise ValueError("concrete mode needs a program image")
        if self.grant_latency != 1:
            raise ValueError("only grant latency 1 is supported")

    def key(self) -> tuple:
        prog = (self.program.base, self.program.words) if self.program else None
        data = (self.data.base, self.data.words) if self.data else None
        return (self.mode, prog, self.alignment_constraint, self.well_formed, self.grant_latency, data)


def instruction_validity_constraint(word: Expr, addr: Expr, regfile_size: int = 32, alignment: bool = True) -> Expr:
    """True iff ``word`` decodes to a supported instruction (and, with the
    alignment clause on, ``addr`` is 4-aligned)."""
    legal = E.not_(decode_signals(word, regfile_size)["illegal"])
    if alignment:
        legal = E.and_(legal, E.eq(addr.slice(1, 0), 0))
    return legal


def well_formed_constraint(word: Expr, addr: Expr, cfg: CoreConfig) -> Expr:
    """Extra program discipline for symbolic stimulus.

    No ECALL/EBREAK/WFI; every successor pc 4-aligned and inside the
    instruction range (relative to ``addr``); loads, stores and JALR use base
    ``x0`` with an aligned, legal absolute address.  Fault-free programs drawn
    from this set never trap.
    """
    D = decode_signals(word, cfg.regfile_size)
    ok_imem = lambda a: E.and_(in_range(a, cfg.imem_range), E.eq(a.slice(1, 0), 0))  # noqa: E731
    seq_ok = ok_imem(addr + 4)
    branch_ok = E.and_(seq_ok, ok_imem(E.add(addr, D["imm_b"])))
    jal_ok = ok_imem(E.add(addr, D["imm_j"]))
    base_x0 = E.eq(D["rs1"], 0)
    jalr_ok = E.and_(base_x0, ok_imem(E.and_(D["imm_i"], E.const(32, 0xFFFFFFFE))))
    f3 = D["funct3"]
    size = f3.slice(1, 0)
    def data_ok(imm: Expr) -> Expr:
        aligned = E.any_of(E.eq(size, 0), E.and_(E.eq(size, 1), E.eq(imm.bit(0), 0)),
                           E.and_(E.eq(size, 2), E.eq(imm.slice(1, 0), 0)))
        return E.all_of(base_x0, aligned, in_range(imm, cfg.dmem_range))
    return E.all_of(
        E.not_(D["is_ECALL"]), E.not_(D["is_EBREAK"]), E.not_(D["is_WFI"]),
        E.implies(D["is_branch"], branch_ok),
        E.implies(D["is_JAL"], jal_ok),
        E.implies(D["is_JALR"], jalr_ok),
        E.implies(D["is_load"], data_ok(D["imm_i"])),
        E.implies(D["is_store"], data_ok(D["imm_s"])),
        E.implies(E.not_(E.any_of(D["is_branch"], D["is_JAL"], D["is_JALR"])), seq_ok),
    )


def reachability_invariants(ts: TransitionSystem, cfg: CoreConfig, config: EnvConfig) -> list[tuple[str, Expr]]:
    """Facts about fault-free reachable states of core + symbolic environment.

    They are candidate lemmas for induction: a checker must prove them before
    relying on them.
    """
    from .rv32.core import BOOT, RUN

    r = ts.ref
    fsm, pc = r("ctrl_fsm_cs"), r("pc_q")
    ivalid, ls_wait = r("instr_valid_q"), r("ls_wait_q")
    ireq, iaddr, dreq = r("env_imem_req_q"), r("env_imem_addr_q"), r("env_dmem_req_q")
    run = E.eq(fsm, RUN)
    word_ok = instruction_validity_constraint(r("instr_rdata_q"), pc, cfg.regfile_size, config.alignment_constraint)
    if config.well_formed:
        word_ok = E.and_(word_ok, well_formed_constraint(r("instr_rdata_q"), pc, cfg))
    pc_ok = E.and_(in_range(pc, cfg.imem_range), E.eq(pc.slice(1, 0), 0))
    return [
        ("inv_fetch_in_flight", E.implies(ireq, E.all_of(run, E.not_(ivalid), E.not_(ls_wait), E.eq(iaddr, pc)))),
        ("inv_valid_insn", E.implies(ivalid, E.and_(run, word_ok))),
        ("inv_lsu_wait", E.implies(ls_wait, E.all_of(run, ivalid, dreq))),
        ("inv_dmem_req", E.implies(dreq, ls_wait)),
        ("inv_pc", E.implies(E.or_(run, E.eq(fsm, BOOT)), pc_ok)),
    ]


def _rom(addr: Expr, image: ProgramImage) -> Expr:
    word_addr = addr.slice(31, 2)
    out = E.const(32, 0)
    for i, w in enumerate(image.words):
        a = (image.base >> 2) + i
        out = E.ite(E.eq(word_addr, a), E.const(32, w), out)
    return out


def _in_image(addr: Expr, image: ProgramImage) -> Expr:
    return in_range(E.and_(addr, E.const(32, 0xFFFFFFFC)), (image.base, image.end))


def attach_env(ts: TransitionSystem, config: EnvConfig, core_config: CoreConfig | None = None) -> TransitionSystem:
    """Copy of ``ts`` with the memory-side inputs driven by the environment."""
    cfg = core_config or ts.meta.get("core_config")
    if cfg is None:
        raise NetlistError("attach_env needs the core configuration")
    for n, width in CORE_INPUTS.items():
        if n not in ts.inputs or ts.inputs[n].width != width:
            raise NetlistError(f"interface mismatch: core input {n!r} missing or of wrong width")
    for n in ("instr_req_o", "instr_addr_o", "data_req_o"):
        if n not in ts.wires:
            raise NetlistError(f"interface mismatch: core output {n!r} missing")
    out = ts.copy(name=ts.name + "_env")
    req = out.ref("instr_req_o")
    iaddr = out.ref("instr_addr_o")
    ireq_q = out.add_register("env_imem_req_q", 1, 0)
    iaddr_q = out.add_register("env_imem_addr_q", 32, 0)
    dreq_q = out.add_register("env_dmem_req_q", 1, 0)
    out.set_next("env_imem_req_q", req)
    out.set_next("env_imem_addr_q", E.ite(req, iaddr, iaddr_q))
    out.set_next("env_dmem_req_q", out.ref("data_req_o"))

    out.bind_input("instr_gnt_i", ireq_q)
    out.bind_input("data_gnt_i", dreq_q)

    if config.data is None:
        drd = out.add_input(DMEM_RDATA, 32) if not out.has(DMEM_RDATA) else out.ref(DMEM_RDATA)
        out.bind_input("data_rdata_i", drd)
        out.bind_input("data_err_i", 0)
    else:
        daddr_q = out.add_register("env_dmem_addr_q", 32, 0)
        dwe_q = out.add_register("env_dmem_we_q", 1, 0)
        out.set_next("env_dmem_addr_q", E.ite(out.ref("data_req_o"), out.ref("data_addr_o"), daddr_q))
        out.set_next("env_dmem_we_q", E.ite(out.ref("data_req_o"), out.ref("data_we_o"), dwe_q))
        out.bind_input("data_rdata_i", _rom(daddr_q, config.data))
        out.bind_input("data_err_i", E.all_of(dreq_q, E.not_(dwe_q), E.not_(_in_image(daddr_q, config.data))))

    if config.mode == SYMBOLIC:
        word = out.add_input(IMEM_WORD, 32)
        out.bind_input("instr_rdata_i", word)
        out.bind_input("instr_err_i", 0)
        out.bind_input("halt_i", 0)
        ok = instruction_validity_constraint(word, iaddr_q, cfg.regfile_size, config.alignment_constraint)
        if config.well_formed:
            ok = E.and_(ok, well_formed_constraint(word, iaddr_q, cfg))
        out.add_wire("env_insn_ok", ok)
        out.add_assumption(E.implies(ireq_q, out.ref("env_insn_ok")), "env_instruction_validity")
        if config.data is None:
            out.meta["invariants"] = reachability_invariants(out, cfg, config)
    else:
        image = config.program
        if config.alignment_constraint:
            for i, w in enumerate(image.words):
                if isa.decode(w, cfg.regfile_size).cls == isa.ILLEGAL:
                    raise ValueError(f"program word {i} ({w:08x}) is not a supported instruction")
        out.bind_input("instr_rdata_i", _rom(iaddr_q, image))
        out.bind_input("instr_err_i", E.and_(ireq_q, E.not_(_in_image(iaddr_q, image))))
        out.bind_input("halt_i", E.eq(out.ref("pc_q"), E.const(32, image.last_address)))
        if config.alignment_constraint:
            out.add_assumption(E.implies(ireq_q, E.eq(iaddr_q.slice(1, 0), 0)), "env_fetch_alignment")
    out.propagate_constants()
    out.meta["env_config"] = config
    out.validate()
    return out
