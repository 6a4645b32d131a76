import random
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seutrace.sat import (
    CdclSolver,
    CnfBuilder,
    CnfFormula,
    DimacsError,
    SolverError,
    available_backends,
    make_solver,
    parse_dimacs,
    parse_solver_output,
    solve_cnf,
)


def brute_force_sat(n, clauses):
    """Truth-table enumeration over all 2^n assignments (vectorised)."""
    idx = np.arange(1 << n, dtype=np.int64)
    ok = np.ones(1 << n, dtype=bool)
    for c in clauses:
        sat = np.zeros(1 << n, dtype=bool)
        for lit in c:
            bit = (idx >> (abs(lit) - 1)) & 1
            sat |= (bit == 1) if lit > 0 else (bit == 0)
        ok &= sat
    return bool(ok.any())


def satisfies(model, clauses):
    return all(any(model[abs(l)] == (l > 0) for l in c) for c in clauses)


def random_cnf(rng, n):
    m = rng.randint(1, int(n * 4.26) + 2)
    return [[rng.choice([1, -1]) * rng.randint(1, n) for _ in range(3)] for _ in range(m)]


def test_small_examples():
    sat, model = solve_cnf(2, [[1, 2], [-1]])
    assert sat and model[2] is True and model[1] is False
    assert solve_cnf(1, [[1], [-1]])[0] is False


def test_random_3cnf_20_vars_matches_truth_table():
    rng = random.Random(11)
    for _ in range(20):
        cls = random_cnf(rng, 20)
        sat, model = solve_cnf(20, cls)
        assert sat == brute_force_sat(20, cls)
        if sat:
            assert satisfies(model, cls)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 12).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.lists(st.integers(1, n).flatmap(
        lambda v: st.sampled_from([v, -v])), min_size=1, max_size=4), min_size=1, max_size=50))))
def test_internal_solver_agrees_with_enumeration(case):
    n, cls = case
    sat, model = solve_cnf(n, cls)
    assert sat == brute_force_sat(n, cls)
    if sat:
        assert satisfies(model, cls)


def test_incremental_assumptions():
    s = make_solver("internal")
    s.add_clauses([[1, 2], [-1, 3]])
    assert s.solve([1]) is True and s.value(3)
    assert s.solve([1, -3]) is False
    assert s.solve() is True


def test_deterministic_given_seed():
    rng = random.Random(3)
    cls = random_cnf(rng, 18)
    a = solve_cnf(18, cls, seed=5)
    b = solve_cnf(18, cls, seed=5)
    assert a == b


def test_dimacs_round_trip_and_errors():
    f = CnfFormula(3, [[1, -2], [3], [-1, 2, -3]])
    text = f.to_dimacs()
    assert text.startswith("p cnf 3 3\n")
    assert parse_dimacs(text).clauses == f.clauses
    with pytest.raises(DimacsError):
        parse_dimacs("1 2 0\n")
    with pytest.raises(DimacsError):
        parse_dimacs("p cnf 2 2\n1 0\n")
    with pytest.raises(ValueError):
        CnfFormula(2, [[]])
    with pytest.raises(ValueError):
        CnfFormula(2, [[3]])


def test_solver_output_formats():
    assert parse_solver_output("s SATISFIABLE\nv 1 -2 0\n") == (True, [1, -2])
    assert parse_solver_output("s UNSATISFIABLE\n")[0] is False
    assert parse_solver_output("SAT\n1 -2 3 0\n") == (True, [1, -2, 3])


def test_external_solver_via_dimacs_files():
    cmd = f"{sys.executable} -m seutrace.sat.cdcl"
    s = make_solver("external", command=cmd)
    s.add_clauses([[1, 2], [-1]])
    assert s.solve() is True and s.value(2)
    assert s.solve([-2]) is False


def test_external_solver_io_failure():
    s = make_solver("external", command="/nonexistent/solver-binary")
    s.add_clauses([[1]])
    with pytest.raises(SolverError):
        s.solve()


@pytest.mark.skipif("pysat" not in available_backends(), reason="python-sat missing")
def test_pysat_backend_agrees():
    rng = random.Random(9)
    for _ in range(30):
        n = rng.randint(3, 15)
        cls = random_cnf(rng, n)
        s = make_solver("pysat")
        s.add_clauses(cls)
        assert s.solve() == brute_force_sat(n, cls)


def test_tseitin_gates():
    b = CnfBuilder()
    x, y, z = b.new_vars(3)
    outs = {"and": b.AND(x, y), "or": b.OR(x, y), "xor": b.XOR(x, y), "mux": b.MUX(z, x, y),
            "maj": b.MAJ(x, y, z)}
    f = b.formula()
    for vx in (0, 1):
        for vy in (0, 1):
            for vz in (0, 1):
                s = CdclSolver()
                s.add_clauses(f.clauses)
                assume = [x if vx else -x, y if vy else -y, z if vz else -z]
                assert s.solve(assume)
                m = s.model()
                val = lambda lit: m[abs(lit)] == (lit > 0)  # noqa: E731
                assert val(outs["and"]) == bool(vx and vy)
                assert val(outs["or"]) == bool(vx or vy)
                assert val(outs["xor"]) == bool(vx ^ vy)
                assert val(outs["mux"]) == bool(vx if vz else vy)
                assert val(outs["maj"]) == (vx + vy + vz >= 2)


def test_dropped_clause_still_sizes_model():
    from seutrace.sat.cdcl import CdclSolver

    s = CdclSolver()
    s.add_clauses([[1], [1, 7], [2, -2, 9]])
    assert s.solve() and len(s.model()) >= 10
