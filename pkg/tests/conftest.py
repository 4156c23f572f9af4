import functools

import numpy as np
import pytest

from qplexkit.sic import Sic, search_fiducial

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def sic_for(d: int) -> Sic:
    result = search_fiducial(d, restarts=10, seed=0)
    assert result.converged, f"search failed at d={d}"
    return Sic.from_fiducial(result.fiducial)


@pytest.fixture(params=[2, 3, 4, 5])
def small_sic(request) -> Sic:
    return sic_for(request.param)


@pytest.fixture
def sic2() -> Sic:
    return sic_for(2)


@pytest.fixture
def sic3() -> Sic:
    return sic_for(3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
