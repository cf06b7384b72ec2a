"""Shared pytest plumbing.

Acceptance tests are tagged with a `criterion` marker; their verdicts are
replayed as one PASS/FAIL line each in the terminal summary, after capture
has been torn down, so they survive piped and teed runs.
"""
import pytest

_criteria = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(label): acceptance criterion, reported in the summary"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    # a setup crash must still show as a failed criterion
    if report.when == "call" or (report.when == "setup" and report.failed):
        _criteria.append((marker.args[0], report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed in _criteria:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {label}")
