"""A small conflict-driven clause-learning SAT solver.

Two watched literals, first-UIP learning with clause minimisation, VSIDS-style
activities, phase saving and Luby restarts.  Assumptions are decided first, in
order, the way MiniSat does it, so the solver can be used incrementally: add
clauses, solve under assumptions, add more clauses, solve again.

Running ``python -m seutrace.sat.cdcl file.cnf`` solves a DIMACS file and
prints the result in SAT-competition format.
"""

from __future__ import annotations

import heapq
import random
import sys
import time
from typing import Iterable, Sequence

from .cnf import parse_dimacs


def luby(i: int) -> int:
    """i-th element (from 1) of the Luby sequence 1 1 2 1 1 2 4 ..."""
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while (1 << k) - 1 != i:
        i -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < i:
            k += 1
    return 1 << (k - 1)


class Interrupted(Exception):
    pass


class CdclSolver:
    """Incremental CDCL solver over DIMACS literals.

    Internally literal ``v`` is ``2v`` and ``-v`` is ``2v+1``.
    """

    def __init__(self, seed: int = 0, restart_base: int = 100):
        self.nvars = 0
        self.clauses: list[list[int]] = []
        self.learnts = 0
        self.watches: list[list[list[int]]] = [[], []]
        self.value: list[int] = [-1]  # per var: -1 unassigned, 0 false, 1 true
        self.level: list[int] = [0]
        self.reason: list[list[int] | None] = [None]
        self.activity: list[float] = [0.0]
        self.phase: list[int] = [0]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.heap: list[tuple[float, int]] = []
        self.var_inc = 1.0
        self.ok = True
        self.restart_base = restart_base
        self._rng = random.Random(seed)
        self._seeded = seed != 0
        self._model: list[bool] | None = None
        self.conflict_limit: int | None = None
        self.deadline: float | None = None
        self.stats = {"conflicts": 0, "decisions": 0, "propagations": 0, "restarts": 0}

    # ----------------------------------------------------------- variables

    def _grow(self, v: int) -> None:
        while self.nvars < v:
            self.nvars += 1
            self.value.append(-1)
            self.level.append(0)
            self.reason.append(None)
            act = self._rng.random() * 1e-5 if self._seeded else 0.0
            self.activity.append(act)
            self.phase.append(0)
            self.watches.append([])
            self.watches.append([])
            heapq.heappush(self.heap, (-act, self.nvars))

    def new_var(self) -> int:
        self._grow(self.nvars + 1)
        return self.nvars

    @staticmethod
    def _enc(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    def _lit_value(self, L: int) -> int:
        v = self.value[L >> 1]
        if v < 0:
            return -1
        return v ^ (L & 1)

    # ------------------------------------------------------------- clauses

    def add_clause(self, lits: Iterable[int]) -> bool:
        """Add a clause; returns False once the formula is known unsatisfiable."""
        if not self.ok:
            return False
        self._cancel_until(0)
        lits = list(lits)
        if 0 in lits:
            raise ValueError("literal 0 in clause")
        if lits:
            # every mentioned variable gets a model slot, even if the clause is dropped
            self._grow(max(abs(x) for x in lits))
        seen: set[int] = set()
        clause: list[int] = []
        for lit in lits:
            L = self._enc(lit)
            if L ^ 1 in seen:
                return True
            if L in seen:
                continue
            val = self._lit_value(L)
            if val == 1:
                return True
            if val == 0:
                continue
            seen.add(L)
            clause.append(L)
        if not clause:
            self.ok = False
            return False
        if len(clause) == 1:
            self._assign(clause[0], None)
            if self._propagate() is not None:
                self.ok = False
            return self.ok
        self.clauses.append(clause)
        self.watches[clause[0]].append(clause)
        self.watches[clause[1]].append(clause)
        return True

    def add_clauses(self, clauses: Iterable[Iterable[int]]) -> bool:
        for c in clauses:
            if not self.add_clause(c):
                return False
        return True

    # ---------------------------------------------------------- core loop

    def _assign(self, L: int, reason) -> None:
        v = L >> 1
        self.value[v] = (L & 1) ^ 1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(L)

    def _propagate(self):
        """Unit propagation; returns a conflicting clause or None."""
        value = self.value
        watches = self.watches
        trail = self.trail
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            false_lit = p ^ 1
            ws = watches[false_lit]
            i = j = 0
            n = len(ws)
            self.stats["propagations"] += 1
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == false_lit:
                    c[0], c[1] = c[1], false_lit
                first = c[0]
                fv = value[first >> 1]
                if fv >= 0 and fv ^ (first & 1) == 1:
                    ws[j] = c
                    j += 1
                    continue
                found = False
                for k in range(2, len(c)):
                    L = c[k]
                    lv = value[L >> 1]
                    if lv < 0 or lv ^ (L & 1) == 1:
                        c[1], c[k] = L, false_lit
                        watches[L].append(c)
                        found = True
                        break
                if found:
                    continue
                ws[j] = c
                j += 1
                if fv >= 0:  # first literal false too: conflict
                    while i < n:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    self.qhead = len(trail)
                    return c
                self._assign(first, c)
            del ws[j:]
        return None

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(1, self.nvars + 1):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.nvars + 1) if self.value[u] < 0]
            heapq.heapify(self.heap)
        if self.value[v] < 0:
            heapq.heappush(self.heap, (-self.activity[v], v))

    def _analyze(self, confl: list[int]) -> tuple[list[int], int]:
        seen = [False] * (self.nvars + 1)
        learnt: list[int] = [0]
        counter = 0
        p = None
        idx = len(self.trail) - 1
        cur_level = len(self.trail_lim)
        while True:
            for q in confl if p is None else confl[1:]:
                v = q >> 1
                if not seen[v] and self.level[v] > 0:
                    seen[v] = True
                    self._bump(v)
                    if self.level[v] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[self.trail[idx] >> 1]:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            confl = self.reason[p >> 1]
            seen[p >> 1] = False
            counter -= 1
            if counter == 0:
                break
        learnt[0] = p ^ 1
        # minimisation: drop literals implied by the rest of the clause
        in_clause = {L >> 1 for L in learnt}
        kept = [learnt[0]]
        for L in learnt[1:]:
            r = self.reason[L >> 1]
            if r is None or any((q >> 1) not in in_clause and self.level[q >> 1] > 0 for q in r[1:]):
                kept.append(L)
        learnt = kept
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda i: self.level[learnt[i] >> 1])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[learnt[1] >> 1]

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        for L in reversed(self.trail[start:]):
            v = L >> 1
            self.phase[v] = self.value[v]
            self.value[v] = -1
            self.reason[v] = None
            heapq.heappush(self.heap, (-self.activity[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _pick(self) -> int:
        while self.heap:
            _, v = heapq.heappop(self.heap)
            if self.value[v] < 0:
                return 2 * v + (0 if self.phase[v] == 1 else 1)
        return -1

    def solve(self, assumptions: Sequence[int] = ()) -> bool | None:
        """True (SAT), False (UNSAT under the assumptions) or None (budget hit)."""
        self._model = None
        if not self.ok:
            return False
        for a in assumptions:
            self._grow(abs(a))
        self._cancel_until(0)
        if self._propagate() is not None:
            self.ok = False
            return False
        assume = [self._enc(a) for a in assumptions]
        conflicts = 0
        restart_no = 1
        restart_at = self.restart_base * luby(restart_no)
        since_restart = 0
        try:
            while True:
                confl = self._propagate()
                if confl is not None:
                    self.stats["conflicts"] += 1
                    conflicts += 1
                    since_restart += 1
                    if not self.trail_lim:
                        self.ok = False
                        return False
                    learnt, back = self._analyze(confl)
                    self._cancel_until(back)
                    if len(learnt) == 1:
                        self._assign(learnt[0], None)
                    else:
                        self.clauses.append(learnt)
                        self.learnts += 1
                        self.watches[learnt[0]].append(learnt)
                        self.watches[learnt[1]].append(learnt)
                        self._assign(learnt[0], learnt)
                    self.var_inc /= 0.95
                    self._check_budget(conflicts)
                    continue
                if since_restart >= restart_at:
                    self.stats["restarts"] += 1
                    restart_no += 1
                    restart_at = self.restart_base * luby(restart_no)
                    since_restart = 0
                    self._cancel_until(0)
                    continue
                lvl = len(self.trail_lim)
                if lvl < len(assume):
                    L = assume[lvl]
                    val = self._lit_value(L)
                    if val == 0:
                        self._cancel_until(0)
                        return False
                    self.trail_lim.append(len(self.trail))
                    if val < 0:
                        self._assign(L, None)
                    continue
                L = self._pick()
                if L < 0:
                    self._model = [False] + [self.value[v] == 1 for v in range(1, self.nvars + 1)]
                    self._cancel_until(0)
                    return True
                self.stats["decisions"] += 1
                self.trail_lim.append(len(self.trail))
                self._assign(L, None)
        except Interrupted:
            self._cancel_until(0)
            return None

    def _check_budget(self, conflicts: int) -> None:
        if self.conflict_limit is not None and conflicts >= self.conflict_limit:
            raise Interrupted
        if self.deadline is not None and conflicts % 64 == 0 and time.monotonic() > self.deadline:
            raise Interrupted

    def model(self) -> list[bool]:
        """Assignment indexed by variable (index 0 unused)."""
        if self._model is None:
            raise RuntimeError("no model available")
        return self._model


def solve_cnf(num_vars: int, clauses: Iterable[Sequence[int]], seed: int = 0):
    """One-shot convenience: returns ``(sat, model_or_None)``."""
    s = CdclSolver(seed=seed)
    s._grow(num_vars)
    s.add_clauses(clauses)
    res = s.solve()
    return res, (s.model() if res else None)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: python -m seutrace.sat.cdcl FILE.cnf", file=sys.stderr)
        return 1
    with open(argv[0]) as fh:
        f = parse_dimacs(fh.read())
    sat, model = solve_cnf(f.num_vars, f.clauses)
    if sat:
        print("s SATISFIABLE")
        lits = [v if model[v] else -v for v in range(1, f.num_vars + 1)]
        for i in range(0, len(lits), 16):
            print("v " + " ".join(map(str, lits[i : i + 16])))
        print("v 0")
        return 10
    print("s UNSATISFIABLE")
    return 20


if __name__ == "__main__":
    sys.exit(main())
