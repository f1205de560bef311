import numpy as np
import pytest

_acceptance = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or not mark.args:
        return
    number, title = mark.args
    failed = rep.failed
    if rep.when == "call" or failed:
        detail = dict(item.user_properties).get("detail", "")
        prev = _acceptance.get(number)
        if prev is None or failed:
            _acceptance[number] = (title, "FAIL" if failed else "PASS", rep.duration, detail)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, status, secs, detail = _acceptance[number]
        line = f"criterion {number:>2}: {status}  {title} ({secs:.1f} s)"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
