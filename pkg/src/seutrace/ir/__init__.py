"""Bit-level IR: expressions, transition systems, simulation, bit-blasting, COI."""

from . import expr
from .blast import bitblast
from .coi import coi, reduce as coi_reduce_roots
from .expr import Expr, WidthError, evaluate
from .sim import Simulator, assumptions_hold, eval_step, simulator
from .system import INPUT, REGISTER, WIRE, Net, NetlistError, RegisterDef, TransitionSystem

__all__ = [
    "Expr",
    "INPUT",
    "Net",
    "NetlistError",
    "REGISTER",
    "RegisterDef",
    "Simulator",
    "TransitionSystem",
    "WIRE",
    "WidthError",
    "assumptions_hold",
    "bitblast",
    "coi",
    "coi_reduce_roots",
    "eval_step",
    "evaluate",
    "expr",
    "simulator",
]
