import numpy as np
import pytest

from sparsebo import _core_py

try:
    from sparsebo import _core as _core_c
except ImportError:  # extension not built
    _core_c = None

CORE_BACKENDS = [pytest.param(_core_py, id="python")]
if _core_c is not None:
    CORE_BACKENDS.append(pytest.param(_core_c, id="cython"))


@pytest.fixture(params=CORE_BACKENDS)
def core(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_nondominated(F):
    """O(n^2) reference filter: indices of rows no other row dominates."""
    F = np.asarray(F, dtype=float)
    keep = []
    for i in range(len(F)):
        dominated = False
        for j in range(len(F)):
            if j != i and np.all(F[j] <= F[i]) and np.any(F[j] < F[i]):
                dominated = True
                break
        if not dominated:
            keep.append(i)
    return keep


# acceptance criteria report ------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance():
    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
