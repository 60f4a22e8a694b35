import warnings
from dataclasses import dataclass

import numpy as np
import pytest

from nhqm.models import harmonic_oscillator, paper_example
from nhqm.numerics import Spectrum, eig_dense, make_grid
from nhqm.operators import MatrixRep, assemble_grid, lowest_resolved

_RESULTS = pytest.StashKey[dict]()


@dataclass
class Solved:
    grid: object
    H: MatrixRep
    spectrum: Spectrum

    def lowest(self, k: int) -> Spectrum:
        return lowest_resolved(self.spectrum, self.grid, k)


def _solve(model, L, N) -> Solved:
    grid = make_grid(L, N)
    H = assemble_grid(model.expr, grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        s = eig_dense(H.matrix)
    return Solved(grid, H, s)


@pytest.fixture(scope="session")
def paper400() -> Solved:
    return _solve(paper_example(1.0), 10.0, 400)


@pytest.fixture(scope="session")
def paper800() -> Solved:
    return _solve(paper_example(1.0), 10.0, 800)


@pytest.fixture(scope="session")
def oscillator400() -> Solved:
    return _solve(harmonic_oscillator(1.0), 10.0, 400)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion(request):
    """Record the outcome of one part of an acceptance criterion."""
    store = request.config.stash.setdefault(_RESULTS, {})

    def record(number: int, part: str, ok: bool, detail: str) -> bool:
        store.setdefault(number, []).append((part, bool(ok), detail))
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_RESULTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        parts = store[number]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAIL'} ({d})" for name, good, d in parts)
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
