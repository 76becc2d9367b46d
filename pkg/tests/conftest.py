import numpy as np
import pytest

from gibbs_forecast.series_gen import InnovationSpec, ProcessSpec, TimeSeries

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def ar3_gauss():
    return ProcessSpec.ar((0.2, 0.3, 0.2), InnovationSpec.gaussian(1.0))


@pytest.fixture
def ar3_mix():
    return ProcessSpec.ar((0.2, 0.3, 0.2), InnovationSpec.mixture_dirac_exp(1.0))


def make_series(values) -> TimeSeries:
    return TimeSeries(np.asarray(values, dtype=float))
