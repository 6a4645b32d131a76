"""RV32I-subset device under test: ISA helpers, core netlist, lockstep pair."""

from . import isa
from .core import (
    BOOT,
    RETIRE_FIELDS,
    RUN,
    SLEEP,
    TRAP,
    Census,
    CensusEntry,
    Core,
    CoreConfig,
    RetireInterface,
    build_core,
    decode_signals,
)
from .isa import DecodedInsn, assemble, decode, encode
from .lockstep import Lockstep, compose_lockstep

__all__ = [
    "BOOT", "RETIRE_FIELDS", "RUN", "SLEEP", "TRAP", "Census", "CensusEntry", "Core", "CoreConfig",
    "DecodedInsn", "Lockstep", "RetireInterface", "assemble", "build_core", "compose_lockstep",
    "decode", "decode_signals", "encode", "isa",
]
