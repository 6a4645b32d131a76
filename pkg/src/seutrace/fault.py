"""Single-bit upset injection: an XOR mask in front of every register.

For register bit ``b`` with global id ``g`` the instrumented next state is
``next(b) ^ mask(b)`` with ``mask(b) = fault_enable & (fault_cycle_q ==
fault_time) & (fault_location == g)``.  ``fault_cycle_q`` is a saturating
cycle counter, so at most one cycle of a trace can match ``fault_time`` and
at most one location can match, which gives the single-fault guarantee.
The three port inputs are frozen (one value per trace).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .ir import expr as E
from .ir.system import NetlistError, TransitionSystem
from .rv32.core import Census


@dataclass(frozen=True)
class FaultPort:
    location_width: int
    time_width: int
    total_bits: int
    enable: str = "fault_enable"
    location: str = "fault_location"
    time: str = "fault_time"
    counter: str = "fault_cycle_q"
    prefix: str = ""

    @property
    def inputs(self) -> tuple[str, str, str]:
        return (self.enable, self.location, self.time)

    def renamed(self, prefix: str) -> FaultPort:
        """Port after the owning system's non-input nets were prefixed."""
        return replace(self, counter=prefix + self.counter, prefix=prefix + self.prefix)

    def mask_net(self, register: str) -> str:
        return f"{self.prefix}fault_mask_{register}"


def location_width(total_bits: int) -> int:
    return max(1, (total_bits - 1).bit_length())


def instrument(ts: TransitionSystem, census: Census, cycle_counter_width: int = 8) -> tuple[TransitionSystem, FaultPort]:
    """Copy of ``ts`` with a fault port and one XOR mask per register bit."""
    regs = {n: r.net.width for n, r in ts.registers.items()}
    if dict(census.registers) != regs:
        missing = set(regs) ^ set(census.registers)
        raise NetlistError(f"census mismatch: census does not cover exactly the registers of {ts.name!r}"
                           + (f" (differs on {sorted(missing)})" if missing else " (widths differ)"))
    port = FaultPort(location_width(census.total_bits), cycle_counter_width, census.total_bits)
    out = ts.copy(name=ts.name + "_faulty")
    en = out.add_input(port.enable, 1, frozen=True)
    loc = out.add_input(port.location, port.location_width, frozen=True)
    when = out.add_input(port.time, port.time_width, frozen=True)
    counter = out.add_register(port.counter, cycle_counter_width, 0)
    top = E.mask(cycle_counter_width)
    out.set_next(port.counter, E.ite(E.eq(counter, top), counter, counter + 1))
    hit = out.add_wire("fault_hit", E.and_(en, E.eq(counter, when)))
    for reg, width in census.registers.items():
        first = census.lookup(reg, 0).bit_id
        bits = [E.and_(hit, E.eq(loc, E.const(port.location_width, first + i))) for i in range(width)]
        mask = out.add_wire(port.mask_net(reg), E.concat(*reversed(bits)))
        nxt = out.registers[reg].next
        out.set_next(reg, E.xor(nxt, mask))
    out.meta["fault_port"] = port
    out.meta["census"] = census
    out.validate()
    return out, port


def pin_fault(ts: TransitionSystem, port: FaultPort, bit: int | None = None, time: int | None = None,
              enable: bool = True) -> list[tuple[str, E.Expr]]:
    """Assumptions fixing parts of the fault port.

    ``None`` leaves the location or time free.  Constancy needs no assumption
    here: the port inputs are frozen in the instrumented system.
    """
    out = []
    en = ts.ref(port.enable)
    if enable:
        out.append(("pin_fault_enable", E.eq(en, 1)))
    else:
        out.append(("pin_fault_disable", E.eq(en, 0)))
    if bit is not None:
        if not 0 <= bit < port.total_bits:
            raise ValueError(f"bit id {bit} outside 0..{port.total_bits - 1}")
        out.append(("pin_fault_location", E.eq(ts.ref(port.location), bit)))
    if time is not None:
        if not 0 <= time <= E.mask(port.time_width):
            raise ValueError(f"fault time {time} does not fit {port.time_width} bits")
        out.append(("pin_fault_time", E.eq(ts.ref(port.time), time)))
    return out


def pin_values(port: FaultPort, bit: int | None = None, time: int | None = None, enable: bool = True) -> dict[str, int]:
    """Same pinning as :func:`pin_fault`, as input values (for solver assumptions)."""
    pins = {port.enable: int(enable)}
    if bit is not None:
        pins[port.location] = bit
    if time is not None:
        pins[port.time] = time
    return pins


def apply_pins(ts: TransitionSystem, assumptions: list[tuple[str, E.Expr]]) -> TransitionSystem:
    out = ts.copy()
    for name, ex in assumptions:
        out.add_assumption(ex, name)
    return out


def without_faults(ts: TransitionSystem, port: FaultPort) -> TransitionSystem:
    """Fault-free view: ``fault_enable`` tied to 0 so every mask folds away."""
    out = ts.copy()
    out.bind_input(port.enable, 0)
    out.propagate_constants()
    return out
