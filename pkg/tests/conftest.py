import numpy as np
import pytest

from risvi.channel import ArrayGeometry, draw_realization

_CRITERIA: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def _record(number: int, ok: bool, detail: str) -> None:
        _CRITERIA.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}")
        print(_CRITERIA[-1])

    return _record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_geom():
    return ArrayGeometry(n_bs=4, ris_h=3, ris_v=2)


@pytest.fixture
def small_chan(small_geom):
    return draw_realization(7, small_geom, 2, [2, 3], 1e-2, [2e-2, 5e-3])


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
