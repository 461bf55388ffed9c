import pytest

import tictactoe

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def ttt_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "tic-tac-toe.csv"
    tictactoe.write_csv(path)
    return path


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""
    def record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
