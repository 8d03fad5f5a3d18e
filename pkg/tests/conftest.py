import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "src" / "ssao" / "data"
SEED = DATA / "seed" / "ssao-core.ssao"
SCENARIO = DATA / "scenarios" / "scenario-a1-a5.ssao"

sys.path.insert(0, str(Path(__file__).resolve().parent))

from ssao.dsl import load_files  # noqa: E402


@pytest.fixture(scope="session")
def seed_path() -> Path:
    return SEED


@pytest.fixture(scope="session")
def scenario_path() -> Path:
    return SCENARIO


def load_clean(*paths):
    kb, diags = load_files(paths)
    assert not diags, [str(d) for d in diags]
    return kb


@pytest.fixture
def seed_kb():
    return load_clean(SEED)


@pytest.fixture
def scenario_kb():
    return load_clean(SEED, SCENARIO)


_CRITERIA: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or report.failed:
        if report.failed or number not in _CRITERIA:
            _CRITERIA[number] = ("PASS" if report.passed else "FAIL", title)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA, key=int):
        status, title = _CRITERIA[number]
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")
