import numpy as np
import pytest

from stripnls.solver import Scenario
from stripnls.spectral import Grid


def gaussian_sine(amp=0.1, x0=0.0):
    return lambda X, Y: amp * np.exp(-(X - x0) ** 2) * np.sin(np.pi * Y) + 0j


def small_defocusing(grid=None, T=0.1, dt=1e-3, window_dt=0.01, **kw):
    """Smooth compatible small-data run: lambda=-1, p=3, Gaussian x sine."""
    grid = grid or Grid(12.0, 128, 32)
    return Scenario.from_functions(grid, -1.0, 3, gaussian_sine(), None, None,
                                   T=T, dt=dt, window_dt=window_dt, **kw)


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm((a - b).ravel()) / max(np.linalg.norm(np.asarray(b).ravel()), 1e-300))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------- acceptance
#
# Acceptance tests report through ``criterion``; the terminal summary prints one
# PASS/FAIL line per criterion, failing it if any of its parts failed.

_ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


@pytest.fixture
def criterion(request):
    def record(number: int, ok: bool, detail: str):
        _ACCEPTANCE.setdefault(number, []).append((bool(ok), detail))
        assert ok, f"criterion {number}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        parts = _ACCEPTANCE[number]
        status = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  " + "; ".join(d for _, d in parts))
