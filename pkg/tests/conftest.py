import numpy as np
import pytest

from hef_lab.series import Dataset, Frequency, TimeSeries


def make_series(sid: str, values, frequency: Frequency = Frequency.MONTHLY) -> TimeSeries:
    return TimeSeries(id=sid, frequency=frequency, values=tuple(float(v) for v in values))


def random_series(rng: np.random.Generator, sid: str, n: int = 48) -> TimeSeries:
    values = 50.0 + 10.0 * np.sin(np.arange(n) / 4.0) + rng.normal(0.0, 3.0, n)
    return make_series(sid, values)


@pytest.fixture
def small_dataset() -> Dataset:
    rng = np.random.default_rng(20240901)
    return Dataset("toy", tuple(random_series(rng, f"s{i:02d}") for i in range(4)))
