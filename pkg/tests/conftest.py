import numpy as np
import pytest

from eigenfibre.numerics import make_rng

VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture
def verdict(request):
    """Record and print one acceptance line; the test still asserts."""
    lines = request.config.stash.setdefault(VERDICTS, [])

    def emit(number, text, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {text}" + (f" [{detail}]" if detail else "")
        lines.append(line)
        print(line)
        return ok

    return emit


def pytest_configure(config):
    np.set_printoptions(precision=12)


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
