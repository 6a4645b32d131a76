"""Agreement between forward (oracle) and backward (formal) classifications."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .run import FAMILY_EFFECT, SAFE, UNDETERMINED, VULNERABLE

NO_EFFECT = "None"
EFFECT = "Effect"


@dataclass
class Agreement:
    matrix: Counter = field(default_factory=Counter)
    contradictions: list[tuple[int, str]] = field(default_factory=list)
    effect_mismatches: list[tuple[int, frozenset, frozenset]] = field(default_factory=list)
    compared: int = 0
    decided: int = 0

    @property
    def agreement(self) -> float:
        """Share of fully decided bits whose label matches the oracle."""
        if not self.decided:
            return 1.0
        bad = sum(1 for _, why in self.contradictions if not why.startswith("undetermined"))
        return 1.0 - bad / self.decided

    def lines(self) -> list[str]:
        out = [f"{'formal':<13} {'oracle None':>12} {'oracle Effect':>14}"]
        for lab in (SAFE, VULNERABLE, UNDETERMINED):
            out.append(f"{lab:<13} {self.matrix[(lab, NO_EFFECT)]:>12} {self.matrix[(lab, EFFECT)]:>14}")
        out.append(f"bits compared: {self.compared}, fully decided: {self.decided}")
        out.append(f"agreement on decided bits: {100 * self.agreement:.1f}%")
        out.append(f"contradictions: {len(self.contradictions)}")
        out.append(f"effect-set mismatches: {len(self.effect_mismatches)}")
        return out


def compare(formal: dict[int, tuple[str, frozenset]], oracle: dict[int, frozenset],
            oracle_exhaustive: bool = True, measured: frozenset | None = None) -> Agreement:
    """``formal`` maps bit -> (label, effects); ``oracle`` maps bit -> effect set.

    A formal Failed is a real execution, so it contradicts an exhaustive
    oracle that saw nothing.  A formal proof (Safe) contradicts any oracle
    effect.  Undetermined bits were checked to the same bound the oracle
    simulates, so an oracle effect on them is a contradiction as well.
    ``measured`` limits the oracle to the effects the formal run looked for.
    """
    ag = Agreement()
    for b in sorted(set(formal) & set(oracle)):
        label, feff = formal[b]
        oeff = frozenset(oracle[b]) - {NO_EFFECT}
        if measured is not None:
            oeff &= measured
        ag.compared += 1
        ag.matrix[(label, EFFECT if oeff else NO_EFFECT)] += 1
        if label != UNDETERMINED:
            ag.decided += 1
        if label == SAFE and oeff:
            ag.contradictions.append((b, "safe bit with oracle effect"))
        elif label == VULNERABLE and not oeff and oracle_exhaustive:
            ag.contradictions.append((b, "vulnerable bit without oracle effect"))
        elif label == UNDETERMINED and oeff:
            ag.contradictions.append((b, "undetermined bit with oracle effect"))
        if (feff or oeff) and feff != oeff and (oracle_exhaustive or not feff <= oeff):
            ag.effect_mismatches.append((b, feff, oeff))
    return ag


def compare_report(report, oracle_result, oracle_exhaustive: bool = True) -> Agreement:
    formal = {b: (c.label, c.effects) for b, c in report.classifications.items()}
    measured = frozenset(FAMILY_EFFECT[f] for f in set(report.families.values()))
    return compare(formal, oracle_result.effects, oracle_exhaustive, measured)
