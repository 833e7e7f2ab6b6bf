import sys
from pathlib import Path

import pytest

# make tests/helpers.py importable as ``helpers``
sys.path.insert(0, str(Path(__file__).resolve().parent))

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    failed = rep.failed or (rep.when == "call" and rep.outcome != "passed")
    if rep.when == "call" or failed:
        prev = _criteria.get(n, (title, "PASS"))[1]
        _criteria[n] = (title, "FAIL" if failed or prev == "FAIL" else "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, status = _criteria[n]
        terminalreporter.write_line(f"criterion {n:2d} {status}: {title}")
