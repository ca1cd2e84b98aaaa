import re

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = mark.args
        detail = dict(item.user_properties).get("detail", "")
        prev = _RESULTS.get((number, title), (True, []))
        _RESULTS[(number, title)] = (prev[0] and rep.passed, prev[1] + ([detail] if detail else []))


def _order(number):
    m = re.match(r"(\d+)(.*)", str(number))
    return (int(m.group(1)), m.group(2)) if m else (10**6, str(number))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), (ok, details) in sorted(_RESULTS.items(), key=lambda kv: _order(kv[0][0])):
        line = f"criterion {number:<3} {'PASS' if ok else 'FAIL'}  {title}"
        if details:
            line += "  [" + "; ".join(details) + "]"
        terminalreporter.write_line(line)
