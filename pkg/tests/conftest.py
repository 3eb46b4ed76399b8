import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # synth / oracles helpers


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(num, name): acceptance criterion covered by this test"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and report.when in ("call", "setup"):
        report._criterion = (marker.args[0], marker.args[1])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = {}
    for status in ("passed", "failed", "skipped"):
        for report in terminalreporter.stats.get(status, []):
            crit = getattr(report, "_criterion", None)
            if crit is None:
                continue
            if status == "failed" or (status == "skipped" and results.get(crit) != "FAIL"):
                results[crit] = "FAIL" if status == "failed" else "SKIP"
            elif crit not in results:
                results[crit] = "PASS"
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name) in sorted(results):
        terminalreporter.write_line(
            f"criterion {num} ({name}): {results[(num, name)]}"
        )
