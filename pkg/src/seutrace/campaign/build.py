"""Core, instrumentation, environment and property set for one configuration."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

from ..env import attach_env
from ..fault import FaultPort, instrument
from ..ir.system import TransitionSystem
from ..props import families as F
from ..props.elaborate import Property, compile_property
from ..props.parser import format_property, parse_file
from ..rv32.core import Census, Core, build_core
from ..rv32.lockstep import Lockstep, compose_lockstep
from .config import CampaignConfig, ConfigError


@dataclass
class Target:
    """Everything a campaign checks, built once per configuration.

    ``single`` is the instrumented core with its environment (crash, hang,
    arch and custom properties); ``lockstep`` pairs an uninstrumented golden
    copy with it (strobe properties); ``golden`` is the plain core with the
    same environment, which is what the forward oracle simulates.
    """

    config: CampaignConfig
    core: Core
    single: TransitionSystem
    golden: TransitionSystem
    port: FaultPort
    _props: dict = field(default_factory=dict)

    @property
    def census(self) -> Census:
        return self.core.census

    @cached_property
    def lockstep(self) -> Lockstep:
        return compose_lockstep(self.golden, self.single)

    def properties(self, families=None) -> list[Property]:
        out = []
        for fam in families or self.config.families:
            if fam not in self._props:
                self._props[fam] = self._family(fam)
            out.extend(self._props[fam])
        return out

    def _family(self, fam: str) -> list[Property]:
        if fam == "strobe":
            return F.gen_strobe_properties(self.lockstep, self.config.literal_valid)
        if fam == "crash":
            return F.gen_crash_properties(self.single)
        if fam == "hang":
            return F.gen_hang_properties(self.single)
        if fam == "arch":
            return F.gen_architectural_properties(self.single)
        if fam == "custom":
            return load_property_file(self.config.property_file, self.single)
        raise ConfigError(f"unknown property family {fam!r}")

    def property(self, name: str) -> Property:
        fam = name.split(".", 1)[0]
        pool = self.properties([fam]) if fam in F.FAMILIES else self.properties(["custom"]) \
            if self.config.property_file else []
        for p in pool:
            if p.name == name:
                return p
        raise KeyError(f"unknown property {name!r}")

    def system_for(self, prop: Property) -> TransitionSystem:
        return self.lockstep.ts if prop.family == "strobe" else self.single

    @cached_property
    def fingerprint(self) -> str:
        """Hash of everything a verdict depends on except bit, property and bound."""
        c = self.config
        h = hashlib.sha256()
        h.update(repr((c.core.key(), c.env.key(), self.census.fingerprint())).encode())
        return h.hexdigest()[:16]

    def property_key(self, prop: Property) -> str:
        return hashlib.sha256(f"{prop.name}\n{prop.text}".encode()).hexdigest()[:12]


def load_property_file(path: str, ts: TransitionSystem) -> list[Property]:
    """Statements of a property file, checked on the single faulty core."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read property file {path!r}: {e}") from None
    out = []
    for i, ast in enumerate(parse_file(text)):
        if ast.directive == "assume":
            raise ConfigError("assume statements are not supported in campaign property files")
        name = "custom." + (ast.name or f"p{i}")
        out.append(compile_property(format_property(ast), ts, name=name, family="custom"))
    return out


def build_target(config: CampaignConfig) -> Target:
    core = build_core(config.core)
    faulty, port = instrument(core.ts, core.census, config.core.cycle_counter_width)
    single = attach_env(faulty, config.env, config.core)
    golden = attach_env(core.ts, config.env, config.core)
    golden.meta["census"] = core.census
    return Target(config, core, single, golden, port)
