"""Campaign configuration and its TOML file format.

Schema (every key optional)::

    [core]
    regfile_size = 8            # 8, 16 or 32
    debug_register_width = 0    # >0 adds an unconsumed register
    reset_pc = 0
    trap_vector = 0x80
    imem_range = [0, 0x400]
    dmem_range = [0x400, 0x800]

    [env]
    mode = "symbolic"           # or "concrete"
    program = "loop"            # "loop", a hex image file, or omitted
    assembly = "..."            # inline program source (concrete mode)
    alignment_constraint = true
    well_formed = true

    [campaign]
    families = ["strobe", "crash", "hang"]
    k_max = 12
    budget = 60.0               # seconds per check
    bits = "pc_q:.*"            # regex over register:bit labels, or "lo-hi"
    workers = 1
    solver = "auto"             # auto | internal | pysat | external
    solver_command = "kissat -q"
    mode = "harvest"            # or "pin"
    coi_prepass = true
    induction = true
    cache = "verdicts.jsonl"
    property_file = "extra.sva"
    literal_valid = false       # unconditional a_valid, traps count as SDC too
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field, replace

from ..bmc.engine import DEFAULT_BUDGET, DEFAULT_K
from ..env import CONCRETE, SYMBOLIC, EnvConfig, ProgramImage, loop_program
from ..props.families import FAMILIES
from ..rv32.core import Census, CoreConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MODES = ("harvest", "pin")
SOLVERS = ("auto", "internal", "pysat", "external")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CampaignConfig:
    core: CoreConfig = field(default_factory=CoreConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    families: tuple[str, ...] = ("strobe", "crash", "hang")
    k_max: int = DEFAULT_K
    budget: float = DEFAULT_BUDGET
    bits: str | None = None
    workers: int = 1
    solver: str = "auto"
    solver_command: str | None = None
    mode: str = "harvest"
    coi_prepass: bool = True
    induction: bool = True
    cache: str | None = None
    property_file: str | None = None
    literal_valid: bool = False

    def __post_init__(self):
        if self.k_max < 1:
            raise ConfigError("k_max must be >= 1")
        if not self.families:
            raise ConfigError("at least one property family must be selected")
        for f in self.families:
            if f not in FAMILIES and f != "custom":
                raise ConfigError(f"unknown property family {f!r}; choose from {', '.join(FAMILIES)}")
        if "custom" in self.families and not self.property_file:
            raise ConfigError("family 'custom' needs a property_file")
        if self.budget <= 0:
            raise ConfigError("budget must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}")
        if self.solver == "external" and not self.solver_command:
            raise ConfigError("solver 'external' needs solver_command")

    def with_(self, **kw) -> CampaignConfig:
        return replace(self, **kw)

    def select_bits(self, census: Census) -> list[int]:
        """Bit ids picked by the ``bits`` filter (all bits without one)."""
        if not self.bits:
            return list(range(census.total_bits))
        m = re.fullmatch(r"\s*(\d+)\s*-\s*(\d+)\s*", self.bits)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if lo > hi or hi >= census.total_bits:
                raise ConfigError(f"bit range {self.bits!r} outside 0..{census.total_bits - 1}")
            return list(range(lo, hi + 1))
        try:
            rx = re.compile(self.bits)
        except re.error as e:
            raise ConfigError(f"bad bit filter {self.bits!r}: {e}") from None
        out = [e.bit_id for e in census.entries if rx.fullmatch(e.label) or rx.fullmatch(e.register)]
        if not out:
            raise ConfigError(f"bit filter {self.bits!r} selects no census bit")
        return out


def _program(env: dict, base_dir: str | None):
    if "assembly" in env:
        return ProgramImage.assemble(env["assembly"])
    prog = env.get("program")
    if prog is None:
        return None
    if prog == "loop":
        return loop_program()
    import os

    path = prog if os.path.isabs(prog) or base_dir is None else os.path.join(base_dir, prog)
    try:
        return ProgramImage.load(path)
    except OSError as e:
        raise ConfigError(f"cannot read program image {prog!r}: {e}") from None


def config_from_dict(d: dict, base_dir: str | None = None) -> CampaignConfig:
    known = {"core", "env", "campaign"}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(extra))}")
    try:
        core_kw = dict(d.get("core", {}))
        for k in ("imem_range", "dmem_range"):
            if k in core_kw:
                core_kw[k] = tuple(core_kw[k])
        core = CoreConfig(**core_kw)
        env_d = dict(d.get("env", {}))
        prog = _program(env_d, base_dir)
        mode = env_d.get("mode", CONCRETE if prog is not None else SYMBOLIC)
        env = EnvConfig(
            mode=mode,
            program=prog,
            alignment_constraint=bool(env_d.get("alignment_constraint", True)),
            well_formed=bool(env_d.get("well_formed", True)),
        )
        unknown_env = set(env_d) - {"mode", "program", "assembly", "alignment_constraint", "well_formed"}
        if unknown_env:
            raise ConfigError(f"unknown [env] key(s): {', '.join(sorted(unknown_env))}")
        c = dict(d.get("campaign", {}))
        if "families" in c:
            fam = c["families"]
            c["families"] = tuple(fam.split(",") if isinstance(fam, str) else fam)
        return CampaignConfig(core=core, env=env, **c)
    except TypeError as e:
        raise ConfigError(str(e)) from None
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from None


def load_config(path: str) -> CampaignConfig:
    import os

    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path!r}: {e}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"config {path!r} is not valid TOML: {e}") from None
    return config_from_dict(data, os.path.dirname(os.path.abspath(path)))


def desk_config(**kw) -> CampaignConfig:
    """The regfile-8 core running the counting loop from a concrete image."""
    kw.setdefault("core", CoreConfig(regfile_size=8))
    kw.setdefault("env", EnvConfig(CONCRETE, loop_program()))
    return CampaignConfig(**kw)
