import pytest

from qfeedback.core import RngStream, haar_random_state


@pytest.fixture
def rng():
    return RngStream(20240611)


@pytest.fixture
def random_qubits():
    gen = RngStream(7)
    return [haar_random_state(1, gen) for _ in range(100)]


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::" not in report.nodeid:
        return
    if report.when == "call" or report.failed:
        _ACCEPTANCE.setdefault(report.nodeid, report.outcome)
        if report.failed:
            _ACCEPTANCE[report.nodeid] = "failed"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in sorted(_ACCEPTANCE.items()):
        name = nodeid.split("::")[-1].removeprefix("test_criterion_")
        number, _, title = name.partition("_")
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  criterion {int(number):>2}  {title.replace('_', ' ')}")
