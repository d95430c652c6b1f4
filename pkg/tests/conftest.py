import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion.

    Usage: ``acceptance(number, passed, detail)``; the lines are printed in
    the terminal summary and the caller still asserts on ``passed``.
    """

    def record(number: int, passed: bool, detail: str):
        _ACCEPTANCE[number] = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(_ACCEPTANCE[number])
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
