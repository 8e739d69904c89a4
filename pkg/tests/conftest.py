import pytest

from vra.instance import Instance, Point

ACCEPTANCE_RESULTS: list[tuple[str, str, str]] = []  # (criterion, PASS/FAIL/SKIP, detail)


@pytest.fixture
def unit_square():
    # depot at the origin, then counter-clockwise: (0,1), (1,1), (1,0)
    return Instance("square", (Point(0, 0), Point(0, 1), Point(1, 1), Point(1, 0)))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{status}  {name}  {detail}")
