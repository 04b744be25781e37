import numpy as np
import pytest

from fusedsafe import make_problem


def random_problem(rng, n, p, scale=1.0):
    X = rng.standard_normal((n, p))
    y = scale * rng.standard_normal(n)
    return make_problem(X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
