import os

import pytest
from hypothesis import HealthCheck, settings

from stable_supremum import StableParams, parse_real

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def upper():
    """alpha = sqrt 2, rho = 1/2: the convergent series lives at small x."""
    return StableParams(parse_real("sqrt:2"), 0.5)


@pytest.fixture(scope="session")
def lower():
    """alpha = 1/sqrt 2, rho = 0.4: the convergent series lives at large x."""
    return StableParams(parse_real("surd:(0+1*sqrt:2)/2"), 0.4)


_CRITERIA = {}


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        num, title = crit
        prev = _CRITERIA.get(num, (title, "PASS"))[1]
        ok = report.outcome == "passed" and prev == "PASS"
        _CRITERIA[num] = (title, "PASS" if ok else "FAIL")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, verdict = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num}: {verdict}  {title}")
