import numpy as np
import pytest
import torch

from seafield.data import TimeSeriesDataset

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_dataset():
    stamps = np.datetime64("2012-03-05T00:00") + np.arange(4) * np.timedelta64(5, "m")
    return TimeSeriesDataset(values=np.array([[1.0, 2.0], [3.0, 0.0], [5.0, 6.0], [7.0, 8.0]]),
                             timestamps=stamps, granularity=5, name="tiny")


@pytest.fixture
def float64():
    old = torch.get_default_dtype()
    torch.set_default_dtype(torch.float64)
    yield
    torch.set_default_dtype(old)


@pytest.fixture
def record():
    """Collects one pass/fail line per acceptance criterion for the summary."""
    def _record(label, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
