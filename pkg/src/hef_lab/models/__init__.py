"""Classical forecasting models behind one fit/predict interface.

Each model declares its search kind (exhaustive grid vs continuous space),
its hyperparameter space, and the fixed benchmark configuration used by the
no-search baseline condition. Regressive models consume the series through
sliding lag windows and forecast multi-step recursively.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from enum import Enum
from typing import Callable, ClassVar, Mapping, Sequence

import numpy as np

from ..errors import (
    InsufficientDataError,
    NonConvergenceError,
    NotImplementedModelError,
    UnknownModelError,
)
from ..spaces import HyperparameterSpace

__all__ = [
    "SearchKind",
    "FittedModel",
    "ForecastModel",
    "lag_window_length",
    "build_lag_matrix",
    "register",
    "create",
    "model_class",
    "available_models",
    "CLASSICAL_MODELS",
    "STUB_MODELS",
]


class SearchKind(Enum):
    EXHAUSTIVE = "es"
    CONTINUOUS = "scs"


class FittedModel(ABC):
    """Immutable fitted state; safe to share across threads."""

    @abstractmethod
    def predict(self, horizon: int) -> np.ndarray:
        """Forecast ``horizon`` values; always finite, never NaN."""


class ForecastModel(ABC):
    """One named model family with a declared hyperparameter space."""

    name: ClassVar[str]
    search_kind: ClassVar[SearchKind]

    def __init__(self, season_length: int = 12) -> None:
        if season_length < 1:
            raise InsufficientDataError("season_length must be >= 1")
        self.season_length = int(season_length)

    @abstractmethod
    def space(self) -> HyperparameterSpace: ...

    @abstractmethod
    def fixed_config(self) -> dict: ...

    @abstractmethod
    def fit(self, train: Sequence[float], config: Mapping) -> FittedModel: ...


def lag_window_length(n_train: int, season_length: int) -> int:
    """Width of the sliding lag window: min(season, n/4), floored at 2."""
    return max(2, min(season_length, n_train // 4))


def build_lag_matrix(values: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack sliding windows into a design matrix with next-value targets."""
    n = len(values)
    rows = n - window
    if rows < 1:
        raise InsufficientDataError(f"need more than {window} observations, got {n}")
    X = np.empty((rows, window), dtype=float)
    for i in range(rows):
        X[i] = values[i : i + window]
    y = np.asarray(values[window:], dtype=float)
    return X, y


def recursive_forecast(
    history: np.ndarray,
    window: int,
    horizon: int,
    step: Callable[[np.ndarray], float],
) -> np.ndarray:
    """Roll a one-step predictor forward, feeding forecasts back as inputs."""
    buf = list(np.asarray(history, dtype=float))
    out = np.empty(horizon, dtype=float)
    with np.errstate(all="ignore"):
        for k in range(horizon):
            out[k] = step(np.asarray(buf[-window:], dtype=float))
            buf.append(out[k])
    if not np.isfinite(out).all():
        raise NonConvergenceError("forecast diverged to non-finite values")
    return out


def _validated_train(train: Sequence[float], minimum: int, model: str) -> np.ndarray:
    y = np.asarray(train, dtype=float)
    if y.ndim != 1:
        raise InsufficientDataError(f"{model}: train must be one-dimensional")
    if len(y) < minimum:
        raise InsufficientDataError(f"{model}: needs at least {minimum} observations, got {len(y)}")
    if not np.isfinite(y).all():
        raise InsufficientDataError(f"{model}: train contains non-finite values")
    return y


# --- registry ---------------------------------------------------------------

_REGISTRY: dict[str, type[ForecastModel]] = {}

# Named but intentionally out of scope; configs referencing them fail loudly.
STUB_MODELS = (
    "svr",
    "gbr",
    "rfr",
    "xgboost",
    "catboost",
    "br",
    "mlp",
    "lstm",
    "dnn-lstm",
)


def register(cls: type[ForecastModel]) -> type[ForecastModel]:
    _REGISTRY[cls.name] = cls
    return cls


def model_class(name: str) -> type[ForecastModel]:
    if name in STUB_MODELS:
        raise NotImplementedModelError(
            f"model {name!r} is registered but not implemented in this package"
        )
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownModelError(name) from None


def create(name: str, season_length: int = 12) -> ForecastModel:
    """Instantiate a registered model; stub names raise, unknown names raise."""
    return model_class(name)(season_length=season_length)


def available_models() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


from . import arima, linear, neighbors, smoothing, tree  # noqa: E402,F401  (registration side effects)

CLASSICAL_MODELS = available_models()
