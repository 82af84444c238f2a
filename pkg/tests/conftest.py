import contextlib

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gbslab import kernels
from gbslab.reference import reference_spec
from gbslab.state import build

settings.register_profile("gbslab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("gbslab")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _restore_kernel_limits():
    saved = (kernels.LIMITS.max_clicks, kernels.LIMITS.workers)
    yield
    kernels.LIMITS.max_clicks, kernels.LIMITS.workers = saved


@pytest.fixture(scope="session")
def ref8():
    return reference_spec(8)


@pytest.fixture(scope="session")
def ref8_state(ref8):
    return build(ref8)


def pytest_addoption(parser):
    parser.addoption("--update-golden", action="store_true", help="rewrite tests/golden from the current code")


@pytest.fixture(scope="session")
def update_golden(request):
    return request.config.getoption("--update-golden")


# --- acceptance criteria summary ----------------------------------------------------

_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


@pytest.fixture
def criterion(request):
    """Context manager recording one PASS/FAIL line for an acceptance criterion."""
    results = request.config.stash[_CRITERIA]

    @contextlib.contextmanager
    def run(number, title):
        detail = []
        try:
            yield detail
        except BaseException:
            results[number] = ("FAIL", title, "; ".join(detail))
            print(f"criterion {number:2d} FAIL  {title}  {'; '.join(detail)}")
            raise
        results[number] = ("PASS", title, "; ".join(detail))
        print(f"criterion {number:2d} PASS  {title}  {'; '.join(detail)}")

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_CRITERIA, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        verdict, title, detail = results[number]
        terminalreporter.write_line(f"criterion {number:2d} {verdict}  {title}" + (f"  [{detail}]" if detail else ""))
