"""CNF construction and satisfiability backends."""

from .backends import (
    ExternalSolver,
    InternalSolver,
    PysatSolver,
    SatSolver,
    SolverError,
    available_backends,
    make_solver,
    parse_solver_output,
)
from .cdcl import CdclSolver, solve_cnf
from .cnf import ClauseChecker, CnfBuilder, CnfFormula, DimacsError, parse_dimacs

__all__ = [
    "CdclSolver",
    "ClauseChecker",
    "CnfBuilder",
    "CnfFormula",
    "DimacsError",
    "ExternalSolver",
    "InternalSolver",
    "PysatSolver",
    "SatSolver",
    "SolverError",
    "available_backends",
    "make_solver",
    "parse_dimacs",
    "parse_solver_output",
    "solve_cnf",
]
