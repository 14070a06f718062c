import time

import numpy as np
import pytest

from nnorms import Frame, FrameFunctional, InnerProductSpace, ProductDomain


SUITE_BUDGET_S = 180.0
_SESSION_START = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    elapsed = time.perf_counter() - _SESSION_START
    ok = elapsed < SUITE_BUDGET_S
    terminalreporter.write_line(
        f"[{'PASS' if ok else 'FAIL'}] suite wall-clock {elapsed:.1f}s (budget {SUITE_BUDGET_S:.0f}s)"
    )


def pytest_sessionfinish(session, exitstatus):
    if time.perf_counter() - _SESSION_START >= SUITE_BUDGET_S and exitstatus == 0:
        session.exitstatus = 1


@pytest.fixture
def r3():
    return InnerProductSpace.euclidean(3)


@pytest.fixture
def plane(r3):
    """Frame {e1, e2} in R^3."""
    return Frame.from_coords(r3, [[1, 0, 0], [0, 1, 0]])


@pytest.fixture
def f1(plane):
    return FrameFunctional(ProductDomain((plane,)))


@pytest.fixture
def f2(plane):
    return FrameFunctional(ProductDomain((plane, plane)))


def rel(a, b):
    den = max(abs(a), abs(b))
    return 0.0 if den == 0.0 else abs(a - b) / den


def bordered_inner(x, y, trail):
    """Determinant of the Gram matrix of (x, trail) with its first column taken against y."""
    M = x.space.metric
    rows = [x.coords, *(z.coords for z in trail)]
    cols = [y.coords, *(z.coords for z in trail)]
    G = np.array([[r @ M @ c for c in cols] for r in rows])
    return float(np.linalg.det(G))
