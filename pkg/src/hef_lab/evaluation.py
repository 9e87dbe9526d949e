"""Scoring functions that guide hyperparameter search.

Two interchangeable objectives, both minimized:

* the hierarchical composite score: weighted ``(1 - r2) + mae/mean + rmse/mean``
  with variability-adaptive tolerance thresholds and multiplicative penalties,
  plus a severe overwrite penalty for negative predictions;
* the plain MAE baseline, which returns the error unchanged.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError, NonFiniteInputError, SeriesTooShortError

__all__ = [
    "MEAN_GUARD",
    "MetricWeights",
    "PenaltyLevel",
    "PenaltySchedule",
    "DEFAULT_WEIGHTS",
    "DEFAULT_PENALTIES",
    "coefficient_of_variation",
    "recommend_mae_tolerance",
    "recommend_rmse_tolerance",
    "apply_penalty",
    "hef_score",
    "maef_score",
    "EvaluationFunction",
    "HierarchicalEvaluation",
    "MaeEvaluation",
    "make_evaluation_function",
]

# Near-zero training means are replaced by this guard before normalizing.
MEAN_GUARD = 1e-6


@dataclass(frozen=True)
class MetricWeights:
    """Relative weights of the three score components."""

    r2: float = 1.0
    mae: float = 1.0
    rmse: float = 0.5

    def __post_init__(self) -> None:
        for name in ("r2", "mae", "rmse"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"weight {name} must be >= 0")


class PenaltyLevel(Enum):
    """Progressive penalty tiers; level 4 is reserved for invalid predictions."""

    LEVEL_1 = 1
    LEVEL_2 = 2
    LEVEL_3 = 3
    LEVEL_4 = 4


@dataclass(frozen=True)
class PenaltySchedule:
    """Multipliers per penalty level; must be strictly increasing."""

    level_1: float = 1.2
    level_2: float = 1.3
    level_3: float = 1.5
    level_4: float = 1.8

    def __post_init__(self) -> None:
        seq = (self.level_1, self.level_2, self.level_3, self.level_4)
        if any(b <= a for a, b in zip(seq, seq[1:])):
            raise InvalidParameterError(f"penalty multipliers must be strictly increasing, got {seq}")

    def multiplier(self, level: PenaltyLevel) -> float:
        return (self.level_1, self.level_2, self.level_3, self.level_4)[level.value - 1]


DEFAULT_WEIGHTS = MetricWeights()
DEFAULT_PENALTIES = PenaltySchedule()


def _train_vector(y_train: Sequence[float]) -> np.ndarray:
    y = np.asarray(y_train, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise SeriesTooShortError("y_train needs at least 2 observations")
    if not np.isfinite(y).all():
        raise NonFiniteInputError("y_train contains non-finite values")
    return y


def coefficient_of_variation(y_train: Sequence[float]) -> float:
    """Std over |mean| of the training series, with the near-zero mean guard."""
    y = _train_vector(y_train)
    mean = abs(float(y.mean()))
    if mean < MEAN_GUARD:
        mean = MEAN_GUARD
    return float(y.std()) / mean


def recommend_mae_tolerance(y_train: Sequence[float]) -> float:
    """Adaptive MAE tolerance coefficient from the training variability.

    Strict bands on the coefficient of variation: below 0.2 -> 0.1,
    below 0.5 -> 0.2, below 1.0 -> 0.3, otherwise 0.4.
    """
    cv = coefficient_of_variation(y_train)
    if cv < 0.2:
        return 0.1
    if cv < 0.5:
        return 0.2
    if cv < 1.0:
        return 0.3
    return 0.4


def recommend_rmse_tolerance(y_train: Sequence[float]) -> float:
    """Adaptive RMSE tolerance coefficient; broader than the MAE bands."""
    cv = coefficient_of_variation(y_train)
    if cv < 0.2:
        return 0.15
    if cv < 0.5:
        return 0.25
    if cv < 1.0:
        return 0.35
    return 0.4


def apply_penalty(
    base_score: float,
    level: PenaltyLevel,
    schedule: PenaltySchedule = DEFAULT_PENALTIES,
) -> float:
    """Inflate a score by the multiplier of the given penalty level."""
    if not math.isfinite(base_score):
        raise NonFiniteInputError("base_score must be finite")
    return base_score * schedule.multiplier(level)


def hef_score(
    predictions: Sequence[float],
    r2: float,
    mae: float,
    rmse: float,
    y_train: Sequence[float],
    *,
    weights: MetricWeights = DEFAULT_WEIGHTS,
    penalties: PenaltySchedule = DEFAULT_PENALTIES,
    stack_level4: bool = False,
) -> float:
    """Hierarchical composite score to minimize.

    The base score is ``w_r2*(1-r2) + w_mae*mae/m + w_rmse*rmse/m`` with m the
    (guarded) training mean. Tolerance thresholds are the adaptive coefficients
    times m; missing one threshold inflates the base multiplicatively
    (mae under only -> level 1, rmse under only -> level 2, neither -> level 3).
    Any negative prediction overwrites the result with the level-4 inflation of
    the base score; ``stack_level4=True`` stacks it on the branched score
    instead. Non-finite metrics or predictions raise rather than score.
    """
    y = _train_vector(y_train)
    preds = np.asarray(predictions, dtype=float)
    if preds.size and not np.isfinite(preds).all():
        raise NonFiniteInputError("predictions contain non-finite values")
    for name, value in (("r2", r2), ("mae", mae), ("rmse", rmse)):
        if not math.isfinite(value):
            raise NonFiniteInputError(f"{name} is not finite")

    mean = float(y.mean())
    if abs(mean) < MEAN_GUARD:
        mean = MEAN_GUARD
    mae_threshold = recommend_mae_tolerance(y) * mean
    rmse_threshold = recommend_rmse_tolerance(y) * mean

    base = weights.r2 * (1.0 - r2) + weights.mae * (mae / mean) + weights.rmse * (rmse / mean)

    if mae < mae_threshold and rmse < rmse_threshold:
        score = base
    elif mae < mae_threshold:
        score = apply_penalty(base, PenaltyLevel.LEVEL_1, penalties)
    elif rmse < rmse_threshold:
        score = apply_penalty(base, PenaltyLevel.LEVEL_2, penalties)
    else:
        score = apply_penalty(base, PenaltyLevel.LEVEL_3, penalties)

    if preds.size and bool((preds < 0).any()):
        score = apply_penalty(score if stack_level4 else base, PenaltyLevel.LEVEL_4, penalties)
    return float(score)


def maef_score(mae: float) -> float:
    """Baseline objective: the mean absolute error itself."""
    if not math.isfinite(mae):
        raise NonFiniteInputError("mae is not finite")
    return float(mae)


class EvaluationFunction(ABC):
    """Scoring contract mapping (predictions, metrics, training series) to a scalar."""

    name: str

    @abstractmethod
    def score(
        self,
        predictions: Sequence[float],
        r2: float,
        mae: float,
        rmse: float,
        y_train: Sequence[float],
    ) -> float:
        """Return the value to minimize."""


class HierarchicalEvaluation(EvaluationFunction):
    """The composite score with injectable weights and penalty schedule."""

    name = "hef"

    def __init__(
        self,
        weights: MetricWeights = DEFAULT_WEIGHTS,
        penalties: PenaltySchedule = DEFAULT_PENALTIES,
        stack_level4: bool = False,
    ) -> None:
        self.weights = weights
        self.penalties = penalties
        self.stack_level4 = stack_level4

    def score(self, predictions, r2, mae, rmse, y_train) -> float:
        return hef_score(
            predictions,
            r2,
            mae,
            rmse,
            y_train,
            weights=self.weights,
            penalties=self.penalties,
            stack_level4=self.stack_level4,
        )


class MaeEvaluation(EvaluationFunction):
    """The identity-on-MAE baseline."""

    name = "maef"

    def score(self, predictions, r2, mae, rmse, y_train) -> float:
        return maef_score(mae)


def make_evaluation_function(
    name: str,
    weights: MetricWeights = DEFAULT_WEIGHTS,
    penalties: PenaltySchedule = DEFAULT_PENALTIES,
    stack_level4: bool = False,
) -> EvaluationFunction:
    """Factory keyed by the condition names used in experiment configs."""
    if name == "hef":
        return HierarchicalEvaluation(weights, penalties, stack_level4)
    if name == "maef":
        return MaeEvaluation()
    raise InvalidParameterError(f"unknown evaluation function: {name!r}")
