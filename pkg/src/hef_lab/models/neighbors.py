"""k-nearest-neighbors forecasting over sliding lag windows."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from ..spaces import GridDomain, HyperparameterSpace
from . import (
    FittedModel,
    ForecastModel,
    SearchKind,
    _validated_train,
    build_lag_matrix,
    lag_window_length,
    recursive_forecast,
    register,
)


class FittedKnn(FittedModel):
    def __init__(self, history: np.ndarray, windows: np.ndarray, targets: np.ndarray, k: int) -> None:
        self._history = history
        self._windows = windows
        self._targets = targets
        self._k = k

    def _step(self, window: np.ndarray) -> float:
        d2 = ((self._windows - window) ** 2).sum(axis=1)
        nearest = np.argsort(d2, kind="stable")[: self._k]
        return float(self._targets[nearest].mean())

    def predict(self, horizon: int) -> np.ndarray:
        return recursive_forecast(self._history, self._windows.shape[1], horizon, self._step)


@register
class KnnModel(ForecastModel):
    """Euclidean neighbors among training windows; forecast = mean of neighbor targets.

    ``n_neighbors`` is clamped to the number of available windows, so large k
    on a short series degrades to the global window-target mean.
    """

    name = "knn"
    search_kind = SearchKind.EXHAUSTIVE

    def space(self) -> HyperparameterSpace:
        return HyperparameterSpace({"n_neighbors": GridDomain(tuple(range(1, 16)))})

    def fixed_config(self) -> dict:
        return {"n_neighbors": 5}

    def fit(self, train: Sequence[float], config: Mapping) -> FittedKnn:
        window = lag_window_length(len(train), self.season_length)
        y = _validated_train(train, window + 2, self.name)
        windows, targets = build_lag_matrix(y, window)
        k = min(int(config["n_neighbors"]), len(targets))
        return FittedKnn(y, windows, targets, k)
