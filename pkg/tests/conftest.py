import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from symkio import _backend

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=40
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(params=_backend.available())
def backend(request):
    """Run the test once per available kernel backend."""
    with _backend.use_backend(request.param):
        yield request.param


def rel_err(got, want):
    got, want = np.asarray(got), np.asarray(want)
    return float(np.max(np.abs(got - want))) / max(1.0, float(np.max(np.abs(want))))


_ACCEPTANCE = pytest.StashKey[dict]()


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title = number, title
        self.details: list[str] = []

    def note(self, text):
        self.details.append(text)


@pytest.fixture
def criterion(request):
    """Context manager recording one acceptance criterion as PASS or FAIL.

    The criterion fails if the body raises; the line is printed immediately
    and again in the terminal summary.
    """
    from contextlib import contextmanager

    results = request.config.stash.setdefault(_ACCEPTANCE, {})

    @contextmanager
    def record(number, title):
        c = _Criterion(number, title)
        status = "FAIL"
        try:
            yield c
            status = "PASS"
        except BaseException as exc:
            c.note(f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
            raise
        finally:
            line = f"criterion {number} [{status}] {title}"
            if c.details:
                line += ": " + "; ".join(c.details)
            results[number] = line
            print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
