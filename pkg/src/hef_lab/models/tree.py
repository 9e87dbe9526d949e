"""CART regression tree on lag features, variance-reduction splits."""

from __future__ import annotations

import math
from dataclasses import dataclass
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


@dataclass(frozen=True)
class _Node:
    value: float
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _best_split(X: np.ndarray, y: np.ndarray) -> tuple[int, float] | None:
    """Lowest-SSE axis-aligned split; ties keep the first (feature, position)."""
    n, p = X.shape
    best_cost = math.inf
    best: tuple[int, float] | None = None
    total = float(y @ y)
    for j in range(p):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ys = y[order]
        s1 = np.cumsum(ys)
        s2 = np.cumsum(ys**2)
        for i in range(n - 1):
            if xs[i] == xs[i + 1]:
                continue
            nl = i + 1
            nr = n - nl
            sse_left = s2[i] - s1[i] ** 2 / nl
            sse_right = (s2[-1] - s2[i]) - (s1[-1] - s1[i]) ** 2 / nr
            cost = sse_left + sse_right
            if cost < best_cost - 1e-12 * max(total, 1.0):
                best_cost = cost
                best = (j, float((xs[i] + xs[i + 1]) / 2.0))
    return best


def _grow(X: np.ndarray, y: np.ndarray, depth: int, max_depth: float) -> _Node:
    mean = float(y.mean())
    if len(y) < 2 or depth >= max_depth or np.all(y == y[0]):
        return _Node(value=mean)
    split = _best_split(X, y)
    if split is None:
        return _Node(value=mean)
    feature, threshold = split
    mask = X[:, feature] <= threshold
    return _Node(
        value=mean,
        feature=feature,
        threshold=threshold,
        left=_grow(X[mask], y[mask], depth + 1, max_depth),
        right=_grow(X[~mask], y[~mask], depth + 1, max_depth),
    )


class FittedTree(FittedModel):
    def __init__(self, history: np.ndarray, window: int, root: _Node) -> None:
        self._history = history
        self._window = window
        self._root = root

    def _step(self, window: np.ndarray) -> float:
        node = self._root
        while not node.is_leaf:
            node = node.left if window[node.feature] <= node.threshold else node.right
        return node.value

    def predict(self, horizon: int) -> np.ndarray:
        return recursive_forecast(self._history, self._window, horizon, self._step)


@register
class TreeModel(ForecastModel):
    """Unlimited depth by default (``max_depth=None``); fully deterministic."""

    name = "dtr"
    search_kind = SearchKind.EXHAUSTIVE

    def space(self) -> HyperparameterSpace:
        return HyperparameterSpace({"max_depth": GridDomain(tuple(range(2, 13)) + (None,))})

    def fixed_config(self) -> dict:
        return {"max_depth": None}

    def fit(self, train: Sequence[float], config: Mapping) -> FittedTree:
        window = lag_window_length(len(train), self.season_length)
        y = _validated_train(train, window + 2, self.name)
        X, targets = build_lag_matrix(y, window)
        raw_depth = config["max_depth"]
        max_depth = math.inf if raw_depth is None else float(int(raw_depth))
        root = _grow(X, targets, depth=0, max_depth=max_depth)
        return FittedTree(y, window, root)
