import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Context manager factory recording one pass/fail line per acceptance criterion."""
    from contextlib import contextmanager

    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    @contextmanager
    def record(number: int, title: str):
        detail = {}
        try:
            yield detail
        except BaseException:
            lines.append(f"criterion {number:>2}: FAIL  {title}  {_fmt(detail)}")
            print(lines[-1])
            raise
        lines.append(f"criterion {number:>2}: PASS  {title}  {_fmt(detail)}")
        print(lines[-1])

    return record


def _fmt(detail):
    return ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in detail.items())


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
