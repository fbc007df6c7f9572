import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session", autouse=True)
def green_cache(tmp_path_factory):
    """Keep Green tables out of the user's cache directory."""
    path = tmp_path_factory.mktemp("green-cache")
    old = os.environ.get("LATSPEC_CACHE_DIR")
    os.environ["LATSPEC_CACHE_DIR"] = str(path)
    yield path
    if old is None:
        os.environ.pop("LATSPEC_CACHE_DIR", None)
    else:
        os.environ["LATSPEC_CACHE_DIR"] = old


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
