from pathlib import Path

import pytest

from cpesgraph import assets
from cpesgraph.augment import parse_rules
from cpesgraph.fixtures import demo_grid

DATA = Path(__file__).parent / "data"


@pytest.fixture
def sgen_shape_text():
    return (DATA / "sgen_shape.ttl").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def case_rules():
    return parse_rules(assets.graph("rules_casestudy.ttl"))


@pytest.fixture
def demo_tables():
    return demo_grid()


# -- acceptance summary ------------------------------------------------------------

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _criteria[number] = (title, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number in sorted(_criteria):
        title, status = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")
