"""Golden/faulty core pair sharing one environment stimulus."""

from __future__ import annotations

from dataclasses import dataclass

from ..ir.system import NetlistError, TransitionSystem
from .core import RetireInterface

GOLDEN = "golden_"
FAULTY = "faulty_"


@dataclass
class Lockstep:
    ts: TransitionSystem
    golden: RetireInterface
    faulty: RetireInterface
    shared_inputs: tuple[str, ...]
    port: object = None


def compose_lockstep(golden: TransitionSystem, faulty: TransitionSystem, retire: RetireInterface | None = None) -> Lockstep:
    """Prefix every net with ``golden_``/``faulty_``; inputs present in both are shared.

    The fault port of an instrumented faulty system keeps its unprefixed
    input names.
    """
    gk = _config_key(golden)
    fk = _config_key(faulty)
    if gk is None or fk is None or gk != fk:
        raise NetlistError("config mismatch: golden and faulty cores were built from different configurations")
    if "fault_port" in golden.meta:
        raise NetlistError("the golden core must not be fault-instrumented")
    genv, fenv = golden.meta.get("env_config"), faulty.meta.get("env_config")
    if (genv is None) != (fenv is None) or (genv is not None and genv.key() != fenv.key()):
        raise NetlistError("config mismatch: golden and faulty environments differ")
    shared = tuple(n for n in golden.inputs if n in faulty.inputs)
    for n in shared:
        if golden.inputs[n].width != faulty.inputs[n].width:
            raise NetlistError(f"shared input {n!r} has different widths")
    port = faulty.meta.get("fault_port")
    keep_f = set(shared) | (set(port.inputs) if port is not None else set())
    g = golden.prefixed(GOLDEN, keep=shared)
    f = faulty.prefixed(FAULTY, keep=keep_f)
    out = TransitionSystem(name="lockstep")
    out.merge(g)
    out.merge(f)
    out.meta["core_config"] = golden.meta["core_config"]
    if genv is not None:
        out.meta["env_config"] = genv
    new_port = port.renamed(FAULTY) if port is not None else None
    if new_port is not None:
        out.meta["fault_port"] = new_port
        out.meta["census"] = faulty.meta["census"]
        out.meta["fault_target_prefix"] = FAULTY
    out.meta["lockstep"] = True
    out.validate()
    r = retire or RetireInterface({k: k for k in _retire_fields()})
    ls = Lockstep(out, r.prefixed(GOLDEN), r.prefixed(FAULTY), shared, new_port)
    return ls


def _retire_fields():
    from .core import RETIRE_FIELDS

    return RETIRE_FIELDS


def _config_key(ts: TransitionSystem):
    cfg = ts.meta.get("core_config")
    return None if cfg is None else cfg.key()
