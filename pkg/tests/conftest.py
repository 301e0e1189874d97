import pytest

from percolab.lattice import BoxSpec, box_graph, build_box


@pytest.fixture
def unit_square():
    """[0,1]^2: vertices a=(0,0), b=(1,0), c=(1,1), d=(0,1)."""
    return box_graph([(0, 1), (0, 1)])


@pytest.fixture
def path3():
    return build_box(BoxSpec(d=1, n_max=2, margin=0))


@pytest.fixture
def box17():
    return build_box(BoxSpec(d=2, n_max=1, margin=1))


ACCEPTANCE_LINES = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    ACCEPTANCE_LINES[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"[{ACCEPTANCE_LINES[name]}] {name}")
