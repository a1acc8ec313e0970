import pytest

from oracles import make_model

from stinqos import harq

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def model():
    return make_model()


@pytest.fixture(scope="session")
def hcfg():
    return harq.HarqConfig(sub_block_len=200, max_rounds=4, initial_rate=2.0, symbol_time=1 / 200)


@pytest.fixture
def report():
    """Record a pass/fail line for an acceptance criterion; lines are printed in the terminal summary."""

    def _record(criterion, passed, detail=""):
        _ACCEPTANCE_LINES.append(f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
