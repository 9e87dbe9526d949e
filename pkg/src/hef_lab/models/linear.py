"""Regression-on-lag-features models: OLS, lasso, ridge, elastic net,
polynomial, and Huber.

Features are sliding lag windows; the penalized and robust variants z-score
their features with training statistics and fit coefficients in standardized
space. Multi-step forecasts are produced recursively.
"""

from __future__ import annotations

from typing import Callable, ClassVar, Mapping, Sequence

import numpy as np

from ..errors import NonConvergenceError, SingularDesignError
from ..spaces import GridDomain, HyperparameterSpace, IntervalDomain
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

_JITTER = 1e-8


def _solve_normal_equations(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b after ridge jitter; raise if still singular or non-finite."""
    scale = max(1.0, float(np.trace(A)) / max(len(A), 1))
    A = A + _JITTER * scale * np.eye(len(A))
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularDesignError(f"normal equations are singular: {exc}") from exc
    if not np.isfinite(x).all():
        raise SingularDesignError("normal equations produced non-finite coefficients")
    return x


def coordinate_descent_enet(
    X: np.ndarray,
    y: np.ndarray,
    alpha: float,
    l1_ratio: float,
    max_iter: int = 1000,
    tol: float = 1e-10,
) -> np.ndarray:
    """Minimize (1/2n)||y - Xb||^2 + alpha*(l1*||b||_1 + (1-l1)/2*||b||_2^2).

    Cyclic coordinate descent with soft-thresholding; X is expected centered
    (and usually standardized), y centered.
    """
    n, p = X.shape
    beta = np.zeros(p)
    col_sq = (X**2).mean(axis=0)
    denom = col_sq + alpha * (1.0 - l1_ratio)
    threshold = alpha * l1_ratio
    residual = y.copy()
    for _ in range(max_iter):
        max_delta = 0.0
        for j in range(p):
            if denom[j] == 0.0:
                continue
            rho = float(X[:, j] @ residual) / n + col_sq[j] * beta[j]
            new = float(np.sign(rho) * max(abs(rho) - threshold, 0.0)) / denom[j]
            delta = new - beta[j]
            if delta != 0.0:
                residual -= X[:, j] * delta
                beta[j] = new
                max_delta = max(max_delta, abs(delta))
        if max_delta < tol:
            break
    return beta


class FittedLagRegressor(FittedModel):
    def __init__(
        self,
        history: np.ndarray,
        window: int,
        expand: Callable[[np.ndarray], np.ndarray],
        mean: np.ndarray,
        scale: np.ndarray,
        beta: np.ndarray,
        intercept: float,
    ) -> None:
        self._history = history
        self._window = window
        self._expand = expand
        self._mean = mean
        self._scale = scale
        self._beta = beta
        self._intercept = intercept

    def _step(self, window: np.ndarray) -> float:
        feats = (self._expand(window[None, :])[0] - self._mean) / self._scale
        return float(feats @ self._beta + self._intercept)

    def predict(self, horizon: int) -> np.ndarray:
        return recursive_forecast(self._history, self._window, horizon, self._step)


class _LagRegressionModel(ForecastModel):
    """Shared lag-matrix fitting; subclasses provide the coefficient solver."""

    search_kind = SearchKind.CONTINUOUS

    def _expand(self, X: np.ndarray, config: Mapping) -> np.ndarray:
        return X

    def _solve(self, Xs: np.ndarray, yc: np.ndarray, config: Mapping) -> np.ndarray:
        raise NotImplementedError

    def fit(self, train: Sequence[float], config: Mapping) -> FittedLagRegressor:
        window = lag_window_length(len(train), self.season_length)
        y = _validated_train(train, window + 2, self.name)
        X, targets = build_lag_matrix(y, window)
        feats = self._expand(X, config)
        mean = feats.mean(axis=0)
        scale = feats.std(axis=0)
        scale[scale == 0.0] = 1.0
        Xs = (feats - mean) / scale
        ybar = float(targets.mean())
        beta = self._solve(Xs, targets - ybar, config)
        cfg = dict(config)
        return FittedLagRegressor(
            history=y,
            window=window,
            expand=lambda W: self._expand(W, cfg),
            mean=mean,
            scale=scale,
            beta=beta,
            intercept=ybar,
        )


@register
class LinearModel(_LagRegressionModel):
    """Ordinary least squares; no tunable hyperparameters."""

    name = "lr"
    search_kind = SearchKind.EXHAUSTIVE

    def space(self) -> HyperparameterSpace:
        return HyperparameterSpace({})

    def fixed_config(self) -> dict:
        return {}

    def _solve(self, Xs, yc, config):
        beta, *_ = np.linalg.lstsq(Xs, yc, rcond=None)
        return beta


@register
class LassoModel(_LagRegressionModel):
    name = "lsr"

    def space(self) -> HyperparameterSpace:
        return HyperparameterSpace({"alpha": IntervalDomain(1e-4, 10.0, scale="log")})

    def fixed_config(self) -> dict:
        return {"alpha": 0.01}

    def _solve(self, Xs, yc, config):
        return coordinate_descent_enet(Xs, yc, float(config["alpha"]), l1_ratio=1.0)


@register
class RidgeModel(_LagRegressionModel):
    name = "rr"

    def space(self) -> HyperparameterSpace:
        return HyperparameterSpace({"alpha": IntervalDomain(1e-4, 10.0, scale="log")})

    def fixed_config(self) -> dict:
        return {"alpha": 0.01}

    def _solve(self, Xs, yc, config):
        alpha = float(config["alpha"])
        n, p = Xs.shape
        A = Xs.T @ Xs / n + alpha * np.eye(p)
        return _solve_normal_equations(A, Xs.T @ yc / n)


@register
class ElasticNetModel(_LagRegressionModel):
    name = "enr"

    def space(self) -> HyperparameterSpace:
        return HyperparameterSpace(
            {
                "alpha": IntervalDomain(1e-4, 10.0, scale="log"),
                "l1_ratio": IntervalDomain(0.0, 1.0),
            }
        )

    def fixed_config(self) -> dict:
        return {"alpha": 0.01, "l1_ratio": 0.1}

    def _solve(self, Xs, yc, config):
        return coordinate_descent_enet(Xs, yc, float(config["alpha"]), float(config["l1_ratio"]))


@register
class PolynomialModel(_LagRegressionModel):
    """Per-feature polynomial powers (no cross terms), ridge-stabilized solve."""

    name = "plr"
    search_kind = SearchKind.EXHAUSTIVE

    def space(self) -> HyperparameterSpace:
        return HyperparameterSpace({"degree": GridDomain((1, 2, 3, 4))})

    def fixed_config(self) -> dict:
        return {"degree": 2}

    def _expand(self, X: np.ndarray, config: Mapping) -> np.ndarray:
        degree = int(config["degree"])
        return np.hstack([X**k for k in range(1, degree + 1)])

    def _solve(self, Xs, yc, config):
        n, p = Xs.shape
        return _solve_normal_equations(Xs.T @ Xs / n, Xs.T @ yc / n)


@register
class HuberModel(_LagRegressionModel):
    """Huber loss via iteratively reweighted least squares with L2 shrinkage."""

    name = "hr"

    _max_iter: ClassVar[int] = 200

    def space(self) -> HyperparameterSpace:
        return HyperparameterSpace(
            {
                "epsilon": IntervalDomain(1.0, 2.0),
                "alpha": IntervalDomain(1e-4, 1.0, scale="log"),
            }
        )

    def fixed_config(self) -> dict:
        return {"epsilon": 1.0, "alpha": 1e-4}

    def _solve(self, Xs, yc, config):
        epsilon = float(config["epsilon"])
        alpha = float(config["alpha"])
        n, p = Xs.shape
        eye = np.eye(p)
        beta = _solve_normal_equations(Xs.T @ Xs / n + alpha * eye, Xs.T @ yc / n)
        scale_floor = 1e-12 * (1.0 + float(np.std(yc)))
        for _ in range(self._max_iter):
            residual = yc - Xs @ beta
            med = float(np.median(residual))
            sigma = float(np.median(np.abs(residual - med))) / 0.6745
            if sigma < scale_floor:
                return beta
            u = np.abs(residual) / sigma
            w = np.where(u <= epsilon, 1.0, epsilon / u)
            A = (Xs * w[:, None]).T @ Xs / n + alpha * eye
            b = (Xs * w[:, None]).T @ yc / n
            new = _solve_normal_equations(A, b)
            if float(np.max(np.abs(new - beta))) < 1e-10 * (1.0 + float(np.max(np.abs(beta)))):
                return new
            beta = new
        raise NonConvergenceError("huber IRLS hit its iteration cap")
