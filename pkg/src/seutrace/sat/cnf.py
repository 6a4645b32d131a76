"""CNF formulas, DIMACS exchange, and a Tseitin gate builder."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np


class DimacsError(ValueError):
    pass


@dataclass
class CnfFormula:
    num_vars: int
    clauses: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        for c in self.clauses:
            _check_clause(c, self.num_vars)

    def add(self, clause: Sequence[int]) -> None:
        clause = list(clause)
        _check_clause(clause, self.num_vars)
        self.clauses.append(clause)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        lines.extend(" ".join(map(str, c)) + " 0" for c in self.clauses)
        return "\n".join(lines) + "\n"

    def write(self, fh: TextIO) -> None:
        fh.write(self.to_dimacs())


def _check_clause(clause: Sequence[int], num_vars: int) -> None:
    if not clause:
        raise ValueError("empty clause")
    for lit in clause:
        if lit == 0 or abs(lit) > num_vars:
            raise ValueError(f"literal {lit} outside 1..{num_vars}")


def parse_dimacs(text: str) -> CnfFormula:
    header = None
    clauses: list[list[int]] = []
    cur: list[int] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: bad header {line!r}")
            header = (int(parts[2]), int(parts[3]))
            continue
        if header is None:
            raise DimacsError(f"line {lineno}: clause before header")
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(lit)
    if header is None:
        raise DimacsError("missing 'p cnf' header")
    if cur:
        clauses.append(cur)
    if len(clauses) != header[1]:
        raise DimacsError(f"header announces {header[1]} clauses, found {len(clauses)}")
    return CnfFormula(header[0], clauses)


class ClauseChecker:
    """Vectorised check that a model satisfies a (growing) clause list."""

    def __init__(self):
        self._lits = np.zeros(0, dtype=np.int64)
        self._starts = np.zeros(0, dtype=np.int64)
        self._count = 0

    def sync(self, clauses: list[list[int]]) -> None:
        new = clauses[self._count :]
        if not new:
            return
        lens = np.fromiter((len(c) for c in new), dtype=np.int64, count=len(new))
        flat = np.fromiter((l for c in new for l in c), dtype=np.int64, count=int(lens.sum()))
        starts = np.concatenate(([0], np.cumsum(lens)[:-1])) + len(self._lits)
        self._lits = np.concatenate((self._lits, flat))
        self._starts = np.concatenate((self._starts, starts))
        self._count = len(clauses)

    def first_violated(self, clauses: list[list[int]], model: Sequence[bool]) -> int | None:
        """Index of a falsified clause, or None."""
        self.sync(clauses)
        if self._count == 0:
            return None
        values = np.asarray(model, dtype=bool)
        lits = self._lits
        sat = values[np.abs(lits)] == (lits > 0)
        ok = np.logical_or.reduceat(sat, self._starts)
        bad = np.flatnonzero(~ok)
        return int(bad[0]) if len(bad) else None


class CnfBuilder:
    """Clause store with structurally hashed Tseitin gates.

    Variable 1 is the constant true; literals are DIMACS integers.  Gates fold
    constants and reuse identical gates, which keeps unrollings of mostly
    concrete systems small.
    """

    TRUE = 1
    FALSE = -1

    def __init__(self):
        self.num_vars = 1
        self.clauses: list[list[int]] = [[1]]
        self._and: dict[tuple[int, int], int] = {}
        self._xor: dict[tuple[int, int], int] = {}
        self._mux: dict[tuple[int, int, int], int] = {}
        self._maj: dict[tuple[int, int, int], int] = {}

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def new_vars(self, n: int) -> list[int]:
        return [self.new_var() for _ in range(n)]

    def add_clause(self, lits: Iterable[int]) -> None:
        clause = []
        for lit in lits:
            if lit == 1:
                return
            if lit == -1:
                continue
            clause.append(lit)
        if not clause:
            clause = [-1]
        self.clauses.append(clause)

    def formula(self) -> CnfFormula:
        return CnfFormula(self.num_vars, [list(c) for c in self.clauses])

    # ---------------------------------------------------------------- gates

    def NOT(self, a: int) -> int:
        return -a

    def AND(self, a: int, b: int) -> int:
        if a == -1 or b == -1 or a == -b:
            return -1
        if a == 1 or a == b:
            return b
        if b == 1:
            return a
        key = (a, b) if a < b else (b, a)
        x = self._and.get(key)
        if x is None:
            x = self.new_var()
            self.clauses.append([-x, a])
            self.clauses.append([-x, b])
            self.clauses.append([x, -a, -b])
            self._and[key] = x
        return x

    def OR(self, a: int, b: int) -> int:
        return -self.AND(-a, -b)

    def XOR(self, a: int, b: int) -> int:
        if a == 1:
            return -b
        if a == -1:
            return b
        if b == 1:
            return -a
        if b == -1:
            return a
        if a == b:
            return -1
        if a == -b:
            return 1
        neg = (a < 0) ^ (b < 0)
        a, b = abs(a), abs(b)
        key = (a, b) if a < b else (b, a)
        x = self._xor.get(key)
        if x is None:
            x = self.new_var()
            self.clauses.append([-x, a, b])
            self.clauses.append([-x, -a, -b])
            self.clauses.append([x, -a, b])
            self.clauses.append([x, a, -b])
            self._xor[key] = x
        return -x if neg else x

    def MUX(self, s: int, t: int, e: int) -> int:
        if s == 1:
            return t
        if s == -1:
            return e
        if t == e:
            return t
        if s < 0:
            s, t, e = -s, e, t
        if t == 1:
            return self.OR(s, e)
        if t == -1:
            return self.AND(-s, e)
        if e == 1:
            return self.OR(-s, t)
        if e == -1:
            return self.AND(s, t)
        if t == -e:
            return self.XOR(s, e)
        if t == s:
            return self.OR(s, e)
        if t == -s:
            return self.AND(-s, e)
        if e == s:
            return self.AND(s, t)
        if e == -s:
            return self.OR(-s, t)
        key = (s, t, e)
        x = self._mux.get(key)
        if x is None:
            x = self.new_var()
            self.clauses.append([-s, -t, x])
            self.clauses.append([-s, t, -x])
            self.clauses.append([s, -e, x])
            self.clauses.append([s, e, -x])
            self.clauses.append([-t, -e, x])
            self.clauses.append([t, e, -x])
            self._mux[key] = x
        return x

    def MAJ(self, a: int, b: int, c: int) -> int:
        for x, y, z in ((a, b, c), (b, a, c), (c, a, b)):
            if x == 1:
                return self.OR(y, z)
            if x == -1:
                return self.AND(y, z)
        if a == b or a == c:
            return a
        if b == c:
            return b
        if a == -b:
            return c
        if a == -c:
            return b
        if b == -c:
            return a
        key = tuple(sorted((a, b, c)))
        x = self._maj.get(key)
        if x is None:
            x = self.new_var()
            self.clauses.append([-a, -b, x])
            self.clauses.append([-a, -c, x])
            self.clauses.append([-b, -c, x])
            self.clauses.append([a, b, -x])
            self.clauses.append([a, c, -x])
            self.clauses.append([b, c, -x])
            self._maj[key] = x
        return x

    def AND_MANY(self, lits: Iterable[int]) -> int:
        acc = 1
        for l in lits:
            acc = self.AND(acc, l)
        return acc

    def OR_MANY(self, lits: Iterable[int]) -> int:
        lits = [l for l in lits if l != -1]
        if any(l == 1 for l in lits):
            return 1
        if not lits:
            return -1
        if len(lits) == 1:
            return lits[0]
        x = self.new_var()
        self.clauses.append([-x, *lits])
        for l in lits:
            self.clauses.append([x, -l])
        return x
