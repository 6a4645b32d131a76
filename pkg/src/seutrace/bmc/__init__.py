"""Bounded model checking, k-induction, cover checks and witness traces."""

from .engine import (
    BOUNDED,
    DEFAULT_BUDGET,
    DEFAULT_K,
    FAILED,
    PROVEN,
    VERDICTS,
    CheckOptions,
    CheckResult,
    CheckStats,
    Checker,
    EngineError,
    HarvestResult,
    check,
    check_assert,
    check_cover,
    coi_reduce,
    fault_free_view,
    fault_register,
    harvest,
    merge_lockstep_copies,
    property_cone,
)
from .trace import ReplayError, ReplayReport, Trace, replay, simulate_inputs
from .unroll import Unroller, lits_value, unroll

__all__ = [
    "BOUNDED",
    "CheckOptions",
    "CheckResult",
    "CheckStats",
    "Checker",
    "DEFAULT_BUDGET",
    "DEFAULT_K",
    "EngineError",
    "FAILED",
    "HarvestResult",
    "PROVEN",
    "ReplayError",
    "ReplayReport",
    "Trace",
    "Unroller",
    "VERDICTS",
    "check",
    "check_assert",
    "check_cover",
    "coi_reduce",
    "fault_free_view",
    "fault_register",
    "harvest",
    "lits_value",
    "merge_lockstep_copies",
    "property_cone",
    "replay",
    "simulate_inputs",
    "unroll",
]
