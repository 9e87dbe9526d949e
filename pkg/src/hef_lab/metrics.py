"""Forecast accuracy metrics and the per-run metric bundle.

All metrics are pure functions over 1-D sequences. The scaled errors
(``rmsse``, ``mase``) normalize test-window error by the training series'
one-step naive error, so values below 1 beat the naive forecast.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import (
    EmptyInputError,
    FlatTrainingSeriesError,
    LengthMismatchError,
    NonFiniteInputError,
    SeriesTooShortError,
    ZeroTotalVolumeError,
    ZeroVarianceError,
)

__all__ = [
    "mae",
    "rmse",
    "r2",
    "gra",
    "rmsse",
    "mase",
    "MetricBundle",
    "compute_bundle",
    "METRIC_NAMES",
    "HIGHER_BETTER",
    "LOWER_BETTER",
]

METRIC_NAMES = ("r2", "mae", "rmse", "gra", "rmsse", "mase", "exec_time")
HIGHER_BETTER = frozenset({"r2", "gra"})
LOWER_BETTER = frozenset(METRIC_NAMES) - HIGHER_BETTER


def _as_vector(values: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise NonFiniteInputError(f"{name} must be one-dimensional")
    if arr.size == 0:
        raise EmptyInputError(f"{name} is empty")
    if not np.isfinite(arr).all():
        raise NonFiniteInputError(f"{name} contains non-finite values")
    return arr


def _as_pair(actual: Sequence[float], predicted: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    y = _as_vector(actual, "actual")
    yhat = _as_vector(predicted, "predicted")
    if y.size != yhat.size:
        raise LengthMismatchError(f"actual has {y.size} values, predicted has {yhat.size}")
    return y, yhat


def mae(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Mean absolute error."""
    y, yhat = _as_pair(actual, predicted)
    return float(np.mean(np.abs(y - yhat)))


def rmse(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Root mean squared error."""
    y, yhat = _as_pair(actual, predicted)
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


def r2(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Coefficient of determination; may be negative for fits worse than the mean."""
    y, yhat = _as_pair(actual, predicted)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ZeroVarianceError("actual values are constant; r2 is undefined")
    ss_res = float(np.sum((y - yhat) ** 2))
    return 1.0 - ss_res / ss_tot


def gra(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Global relative accuracy: alignment of cumulative absolute totals.

    ``1 - |sum|yhat| - sum|y|| / sum|y|``; 1 means the forecast volume matches
    the actual volume exactly, and the value goes negative once the absolute
    gap exceeds the actual volume.
    """
    y, yhat = _as_pair(actual, predicted)
    total = float(np.sum(np.abs(y)))
    if total == 0.0:
        raise ZeroTotalVolumeError("actual values have zero total absolute volume")
    return 1.0 - abs(float(np.sum(np.abs(yhat))) - total) / total


def _naive_denominator(train: np.ndarray, *, squared: bool) -> float:
    diffs = np.diff(train)
    denom = float(np.mean(diffs**2)) if squared else float(np.mean(np.abs(diffs)))
    if denom == 0.0:
        raise FlatTrainingSeriesError("training series has no variation; naive error is zero")
    return denom


def rmsse(
    train: Sequence[float],
    actual_test: Sequence[float],
    predicted_test: Sequence[float],
    denominator: Literal["train", "test"] = "train",
) -> float:
    """Root mean squared scaled error over the forecast horizon.

    The squared test error is scaled by the mean squared one-step naive error
    of the training series (``denominator="test"`` scales by the test window's
    own naive error instead).
    """
    tr = _as_vector(train, "train")
    if tr.size < 2:
        raise SeriesTooShortError("train needs at least 2 observations")
    y, yhat = _as_pair(actual_test, predicted_test)
    ref = tr if denominator == "train" else y
    if ref.size < 2:
        raise SeriesTooShortError("denominator window needs at least 2 observations")
    denom = _naive_denominator(ref, squared=True)
    return float(np.sqrt(np.mean((y - yhat) ** 2) / denom))


def mase(
    train: Sequence[float],
    actual_test: Sequence[float],
    predicted_test: Sequence[float],
    denominator: Literal["train", "test"] = "train",
) -> float:
    """Mean absolute scaled error over the forecast horizon.

    Values below 1 beat the one-step naive forecast measured on the training
    series (or on the test window when ``denominator="test"``).
    """
    tr = _as_vector(train, "train")
    if tr.size < 2:
        raise SeriesTooShortError("train needs at least 2 observations")
    y, yhat = _as_pair(actual_test, predicted_test)
    ref = tr if denominator == "train" else y
    if ref.size < 2:
        raise SeriesTooShortError("denominator window needs at least 2 observations")
    denom = _naive_denominator(ref, squared=False)
    return float(np.mean(np.abs(y - yhat)) / denom)


@dataclass(frozen=True)
class MetricBundle:
    """The six accuracy metrics plus wall-clock time for one fitted model.

    ``rmse >= mae`` always holds (quadratic mean vs arithmetic mean of the
    absolute errors); ``exec_time`` is measured but never enters any score.
    """

    r2: float
    mae: float
    rmse: float
    gra: float
    rmsse: float
    mase: float
    exec_time: float

    def __post_init__(self) -> None:
        if self.exec_time < 0:
            raise NonFiniteInputError("exec_time must be >= 0")

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def compute_bundle(
    train: Sequence[float],
    actual_test: Sequence[float],
    predicted_test: Sequence[float],
    exec_time: float = 0.0,
) -> MetricBundle:
    """Evaluate all six metrics for one (train, test, forecast) triple."""
    return MetricBundle(
        r2=r2(actual_test, predicted_test),
        mae=mae(actual_test, predicted_test),
        rmse=rmse(actual_test, predicted_test),
        gra=gra(actual_test, predicted_test),
        rmsse=rmsse(train, actual_test, predicted_test),
        mase=mase(train, actual_test, predicted_test),
        exec_time=exec_time,
    )
