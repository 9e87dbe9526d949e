"""Simple exponential smoothing: level-only recursion, flat forecast."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from ..spaces import HyperparameterSpace, IntervalDomain
from . import FittedModel, ForecastModel, SearchKind, _validated_train, register


class FittedSes(FittedModel):
    def __init__(self, level: float) -> None:
        self.level = float(level)

    def predict(self, horizon: int) -> np.ndarray:
        return np.full(horizon, self.level, dtype=float)


@register
class SesModel(ForecastModel):
    """Exponentially weighted level, initialized at the first observation."""

    name = "ses"
    search_kind = SearchKind.CONTINUOUS

    def space(self) -> HyperparameterSpace:
        return HyperparameterSpace({"alpha": IntervalDomain(0.01, 0.99)})

    def fixed_config(self) -> dict:
        return {"alpha": 0.2}

    def fit(self, train: Sequence[float], config: Mapping) -> FittedSes:
        y = _validated_train(train, 3, self.name)
        alpha = float(config["alpha"])
        level = y[0]
        for value in y[1:]:
            level = alpha * value + (1.0 - alpha) * level
        return FittedSes(level)
