import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

from torofan import load_fixture  # noqa: E402

_CRITERIA = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def fixtures():
    names = ["FIX-Q", "FIX-QC", "QC-SPLIT", "FIX-R65", "P1", "P1-B", "P1-BC"]
    return {name: load_fixture(name) for name in names}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and report.passed):
        return
    results = item.config.stash.setdefault(_CRITERIA, {})
    number, title = marker.args
    if report.failed or report.when == "call":
        results[number] = (title, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_CRITERIA, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, status = results[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}: {title}")
