import itertools

import numpy as np
import pytest

from demqubo.qubo import QuboInstance

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def enumerate_min(inst: QuboInstance):
    """Independent oracle: plain itertools scan of every vertex, no pinning or batching."""
    alphabet = (-1, 1) if inst.convention.value == "plus_minus_one" else (0, 1)
    best, arg = np.inf, None
    Q = inst.Q
    b = inst.linear
    for x in itertools.product(alphabet, repeat=inst.n):
        xv = np.array(x, dtype=float)
        v = xv @ Q @ xv + (b @ xv if b is not None else 0.0)
        if v < best:
            best, arg = v, xv
    return best, arg


def all_vertices(n, alphabet=(-1, 1)):
    return np.array(list(itertools.product(alphabet, repeat=n)), dtype=float)


@pytest.fixture
def acceptance():
    def record(key: str, ok: bool, detail: str):
        _ACCEPTANCE[key] = (bool(ok), detail)
        print(f"{key}: {'PASS' if ok else 'FAIL'} {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: int(k.split()[0][1:])):
        ok, detail = _ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}  {detail}")
