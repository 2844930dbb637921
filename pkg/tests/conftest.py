import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from voxpopuli.dataset import ingest  # noqa: E402

GALTON_ENV = "VOXPOPULI_GALTON_FILE"


@pytest.fixture(scope="session")
def galton():
    """The 787 Plymouth entries, if a file is supplied via $VOXPOPULI_GALTON_FILE."""
    path = os.environ.get(GALTON_ENV)
    if not path:
        pytest.skip(f"set {GALTON_ENV} to an entry file of the 787 Plymouth entries")
    data = ingest(path)
    if data.outcome is None:
        data = data.with_outcome(1197.0)
    if data.n != 787 or data.outcome != 1197:
        pytest.skip("supplied file is not the 787-entry set with outcome 1197")
    return data


_CRITERIA: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key, text): acceptance criterion reported in the summary")


def pytest_runtest_logreport(report):
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    key, text = marker
    if report.when == "call" or report.outcome != "passed":
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _CRITERIA[key] = (status, text)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result()._criterion = marker.args


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: int(k.lstrip("AC"))):
        status, text = _CRITERIA[key]
        terminalreporter.write_line(f"{status:4}  {key:5} {text}")
