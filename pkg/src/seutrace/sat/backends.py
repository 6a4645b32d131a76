"""Uniform incremental solver interface over the available SAT engines.

Every backend is wrapped so that a SAT answer is only returned after the model
has been checked against all clauses and assumptions handed to the solver.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
import threading
import time
from typing import Iterable, Sequence

from .cdcl import CdclSolver
from .cnf import ClauseChecker, CnfFormula

try:  # optional accelerator
    from pysat.solvers import Solver as _PysatSolver
except ImportError:  # pragma: no cover - exercised only without python-sat
    _PysatSolver = None


class SolverError(RuntimeError):
    """Backend failure: bad model, I/O problem, unparsable output."""


class SatSolver:
    """Base class; subclasses implement ``_add``, ``_solve`` and ``_model``."""

    name = "abstract"

    def __init__(self, verify: bool = True):
        self.clauses: list[list[int]] = []
        self.num_vars = 0
        self.verify = verify
        self._checker = ClauseChecker()
        self._last_model: list[bool] | None = None
        self.calls = 0
        self.solve_time = 0.0

    def add_clause(self, clause: Sequence[int]) -> None:
        clause = list(clause)
        if not clause:
            raise ValueError("empty clause")
        for lit in clause:
            if lit == 0:
                raise ValueError("literal 0 in clause")
            if abs(lit) > self.num_vars:
                self.num_vars = abs(lit)
        self.clauses.append(clause)
        self._add(clause)

    def add_clauses(self, clauses: Iterable[Sequence[int]]) -> None:
        for c in clauses:
            self.add_clause(c)

    def ensure_vars(self, n: int) -> None:
        self.num_vars = max(self.num_vars, n)

    def solve(self, assumptions: Sequence[int] = (), budget: float | None = None) -> bool | None:
        """True / False, or None when the time budget ran out."""
        for a in assumptions:
            if abs(a) > self.num_vars:
                self.num_vars = abs(a)
        self.calls += 1
        t0 = time.monotonic()
        try:
            res = self._solve(list(assumptions), budget)
        finally:
            self.solve_time += time.monotonic() - t0
        self._last_model = None
        if res:
            model = self._model()
            if len(model) <= self.num_vars:
                model = list(model) + [False] * (self.num_vars + 1 - len(model))
            if self.verify:
                bad = self._checker.first_violated(self.clauses, model)
                if bad is not None:
                    raise SolverError(f"{self.name}: model violates clause {self.clauses[bad]}")
                for a in assumptions:
                    if model[abs(a)] != (a > 0):
                        raise SolverError(f"{self.name}: model violates assumption {a}")
            self._last_model = model
        return res

    def model(self) -> list[bool]:
        if self._last_model is None:
            raise SolverError("no model: last call was not SAT")
        return self._last_model

    def value(self, lit: int) -> bool:
        m = self.model()
        return m[abs(lit)] == (lit > 0)

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # subclass hooks
    def _add(self, clause: list[int]) -> None:
        raise NotImplementedError

    def _solve(self, assumptions: list[int], budget: float | None) -> bool | None:
        raise NotImplementedError

    def _model(self) -> Sequence[bool]:
        raise NotImplementedError


class InternalSolver(SatSolver):
    name = "internal"

    def __init__(self, seed: int = 0, verify: bool = True):
        super().__init__(verify)
        self._s = CdclSolver(seed=seed)

    def _add(self, clause):
        self._s.add_clause(clause)

    def _solve(self, assumptions, budget):
        self._s.deadline = None if budget is None else time.monotonic() + budget
        return self._s.solve(assumptions)

    def _model(self):
        return self._s.model()


class PysatSolver(SatSolver):
    """python-sat engines (CaDiCaL by default)."""

    def __init__(self, engine: str = "cadical153", verify: bool = True):
        if _PysatSolver is None:
            raise SolverError("python-sat is not installed")
        super().__init__(verify)
        self.engine = engine
        self.name = f"pysat:{engine}"
        self._s = _PysatSolver(name=engine)

    def _add(self, clause):
        self._s.add_clause(clause)

    def _solve(self, assumptions, budget):
        if budget is None:
            return self._s.solve(assumptions=assumptions)
        try:
            timer = threading.Timer(budget, self._s.interrupt)
            timer.start()
            try:
                return self._s.solve_limited(assumptions=assumptions, expect_interrupt=True)
            finally:
                timer.cancel()
                self._s.clear_interrupt()
        except NotImplementedError:
            # engine without interrupt support: budget is enforced between calls only
            return self._s.solve(assumptions=assumptions)

    def _model(self):
        raw = self._s.get_model() or []
        model = [False] * (max(self.num_vars, len(raw)) + 1)
        for lit in raw:
            if lit > 0:
                model[lit] = True
        return model

    def close(self):
        self._s.delete()


class ExternalSolver(SatSolver):
    """Runs a DIMACS solver as a subprocess for every query.

    ``command`` is a shell-style string or argument list; ``{cnf}`` is replaced
    by the input path and ``{out}``, if present, by an output path the solver
    writes its answer to (MiniSat style).  Otherwise the answer is read from
    stdout in SAT-competition format (``s ...`` / ``v ...`` lines).
    Assumptions are passed as unit clauses.
    """

    name = "external"

    def __init__(self, command: str | Sequence[str], verify: bool = True, timeout: float | None = None):
        super().__init__(verify)
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not any("{cnf}" in a for a in self.command):
            self.command.append("{cnf}")
        self.timeout = timeout
        self._m: list[bool] = []

    def _add(self, clause):
        pass

    def _solve(self, assumptions, budget):
        formula = CnfFormula(self.num_vars, [])
        formula.clauses = self.clauses + [[a] for a in assumptions]
        limit = budget if budget is not None else self.timeout
        with tempfile.TemporaryDirectory(prefix="seutrace-sat-") as tmp:
            cnf_path = os.path.join(tmp, "query.cnf")
            out_path = os.path.join(tmp, "answer.txt")
            with open(cnf_path, "w") as fh:
                formula.write(fh)
            argv = [a.replace("{cnf}", cnf_path).replace("{out}", out_path) for a in self.command]
            try:
                proc = subprocess.run(argv, capture_output=True, text=True, timeout=limit)
            except subprocess.TimeoutExpired:
                return None
            except OSError as e:
                raise SolverError(f"cannot run external solver {argv[0]!r}: {e}") from e
            if any("{out}" in a for a in self.command):
                try:
                    with open(out_path) as fh:
                        text = fh.read()
                except OSError as e:
                    raise SolverError(f"external solver wrote no answer file: {e}") from e
            else:
                text = proc.stdout
        sat, lits = parse_solver_output(text)
        if sat is None:
            raise SolverError(f"unrecognised external solver output (exit {proc.returncode}): {text[:200]!r}")
        if sat:
            self._m = [False] * (self.num_vars + 1)
            for lit in lits:
                if abs(lit) <= self.num_vars and lit > 0:
                    self._m[lit] = True
        return sat

    def _model(self):
        return self._m


def parse_solver_output(text: str) -> tuple[bool | None, list[int]]:
    """Understands SAT-competition output and MiniSat result files."""
    sat = None
    lits: list[int] = []
    for line in text.splitlines():
        tok = line.split()
        if not tok:
            continue
        head = tok[0]
        if head == "s" and len(tok) > 1:
            sat = {"SATISFIABLE": True, "UNSATISFIABLE": False}.get(tok[1], sat)
        elif head in ("SAT", "SATISFIABLE"):
            sat = True
        elif head in ("UNSAT", "UNSATISFIABLE"):
            sat = False
        elif head == "v":
            lits.extend(int(t) for t in tok[1:])
        elif sat and _is_int_line(tok):
            lits.extend(int(t) for t in tok)
    return sat, [l for l in lits if l != 0]


def _is_int_line(tok: list[str]) -> bool:
    try:
        for t in tok:
            int(t)
    except ValueError:
        return False
    return True


def available_backends() -> list[str]:
    out = ["internal", "external"]
    if _PysatSolver is not None:
        out.insert(1, "pysat")
    return out


def make_solver(kind: str = "auto", *, command: str | None = None, engine: str = "cadical153", seed: int = 0) -> SatSolver:
    """``auto`` picks python-sat when installed, else the internal solver."""
    if kind == "auto":
        kind = "pysat" if _PysatSolver is not None else "internal"
    if kind == "internal":
        return InternalSolver(seed=seed)
    if kind == "pysat":
        return PysatSolver(engine=engine)
    if kind == "external":
        if not command:
            raise SolverError("external solver needs a command")
        return ExternalSolver(command)
    raise SolverError(f"unknown solver kind {kind!r}")
