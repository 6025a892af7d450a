import pytest
from hypothesis import HealthCheck, settings

from fptsim.kernels import available_backends

settings.register_profile("fpt", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("fpt")


@pytest.fixture(params=available_backends())
def backend(request):
    return request.param


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Print one PASS/FAIL line for a criterion and collect it for the summary."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def report(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else "")
        print(line)
        lines.append(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
