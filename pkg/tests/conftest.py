import numpy as np
import pytest

from adshap.data import Dataset

_ACCEPT = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPT] = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for an acceptance criterion."""
    lines = request.config.stash[_ACCEPT]

    def record(number, title, ok, detail=""):
        lines.append((number, title, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPT, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(lines, key=lambda t: t[0]):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:>2}: {title}" + (f"  ({detail})" if detail else ""))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def gaussian_dataset(n=60, d=3, seed=0, name="toy"):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, d))
    y = np.zeros(n, dtype=int)
    y[: max(1, n // 10)] = 1
    # random-sign offsets, so no single direction carries every anomaly
    X[y == 1] += 4.0 * r.choice([-1.0, 1.0], size=(int(y.sum()), d))
    return Dataset(X, y, tuple(f"f{j}" for j in range(d)), name)


@pytest.fixture
def toy():
    return gaussian_dataset()
