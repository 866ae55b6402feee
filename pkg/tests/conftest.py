import pytest

from crfdspam import kernels
from crfdspam.data import BusinessStats, Dataset, Review, ReviewerProfile
from crfdspam.synth import generate

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion this test checks")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        prev = _criteria.get(num, (title, "PASS"))[1]
        status = "PASS" if rep.outcome == "passed" and prev == "PASS" else "FAIL"
        if rep.outcome == "skipped":
            status = "SKIP"
        _criteria[num] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, status = _criteria[num]
        terminalreporter.write_line(f"[{status}] criterion {num}: {title}")


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.available_backends()[request.param]


@pytest.fixture
def tiny_dataset():
    """Two reviewers, two businesses, tagged and with stats derived."""
    reviews = (
        Review("r1", "alice", "b1", 5, 10.0, "fake"),
        Review("r2", "alice", "b2", 1, 20.0, "fake"),
        Review("r3", "bob", "b1", 3, 0.0, "non_fake"),
        Review("r4", "bob", "b2", 2, 5.0, "non_fake"),
        Review("r5", "bob", "b2", 4, 30.0, "non_fake"),
    )
    profiles = {
        "alice": ReviewerProfile("alice", 2, 3, 5.0, "fake"),
        "bob": ReviewerProfile("bob", 10, 40, 0.0, "genuine"),
    }
    businesses = {
        "b1": BusinessStats("b1", 4.0, 0.0),
        "b2": BusinessStats("b2", 7.0 / 3.0, 5.0),
    }
    return Dataset(reviews, profiles, businesses)


@pytest.fixture(scope="session")
def small_synth():
    return generate(300, seed=3)
