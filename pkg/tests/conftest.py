import numpy as np
import pytest

from ds2l.data import generate_synthetic

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, name): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    key = mark.args[0]
    passed = rep.passed if rep.when == "call" else not rep.failed
    prev = _criteria.get(key, (mark.args[1], True))
    _criteria[key] = (prev[0], prev[1] and passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_criteria):
        name, ok = _criteria[key]
        terminalreporter.write_line(f"criterion {key:>2} {name}: {'PASS' if ok else 'FAIL'}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_dataset():
    return generate_synthetic(n_per_class=8, c=3, d1=7, d2=6, noise_sigma=0.1, seed=3)
