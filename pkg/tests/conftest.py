"""Shared pytest hooks: per-criterion pass/fail summary for the acceptance suite."""

import pytest

_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call":
        marker = item.get_closest_marker("acceptance")
        if marker:
            _RESULTS[str(marker.args[0])] = report.passed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_RESULTS, key=lambda s: (len(s), s)):
        verdict = "PASS" if _RESULTS[name] else "FAIL"
        terminalreporter.write_line(f"criterion {name}: {verdict}")
