import pytest

from seutrace.campaign import build_target, desk_config
from seutrace.ir import expr as E
from seutrace.ir.system import TransitionSystem
from seutrace.rv32 import CoreConfig, build_core
from tests.acceptance_log import ACCEPTANCE


def counter_system(width: int = 3) -> TransitionSystem:
    ts = TransitionSystem(name=f"counter{width}")
    c = ts.add_register("c", width, 0)
    ts.set_next("c", c + 1)
    ts.validate()
    return ts


@pytest.fixture(scope="session")
def core8():
    return build_core(CoreConfig(regfile_size=8))


@pytest.fixture(scope="session")
def desk_target():
    return build_target(desk_config())




def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
