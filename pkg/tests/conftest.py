import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, tuple[str, str, str]] = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion for the summary table."""

    def record(number: int, title: str):
        _CRITERIA[number] = (title, "FAIL", "")

        def detail(text: str) -> None:
            _CRITERIA[number] = (title, _CRITERIA[number][1], text)

        request.node.criterion_number = number
        return detail

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    number = getattr(item, "criterion_number", None)
    if number is not None and report.when == "call":
        title, _, text = _CRITERIA[number]
        _CRITERIA[number] = (title, "PASS" if report.passed else "FAIL", text)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, text = _CRITERIA[number]
        terminalreporter.write_line(f"[{status}] {number:2d}. {title}" + (f" -- {text}" if text else ""))
