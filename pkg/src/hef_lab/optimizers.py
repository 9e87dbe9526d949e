"""Hyperparameter search strategies minimizing a scalar objective.

Three strategies share one result shape: exhaustive grid search over finite
spaces, particle swarm optimization over continuous boxes, and a simplified
tree-structured Parzen estimator for boxes or mixed spaces. Failed objective
evaluations are scored +inf, recorded in the trace, and never abort a run.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .errors import (
    EmptySpaceError,
    GridTooLargeError,
    HefLabError,
    InvalidParameterError,
)
from .spaces import GridDomain, HyperparameterSpace

__all__ = [
    "Objective",
    "TrialRecord",
    "OptimizationResult",
    "PsoConfig",
    "TpeConfig",
    "grid_search",
    "pso_minimize",
    "tpe_minimize",
    "write_trace_csv",
]

Objective = Callable[[Mapping], float]

DEFAULT_GRID_CAP = 1_000_000


@dataclass(frozen=True)
class TrialRecord:
    """One objective evaluation: the point, its score, and bookkeeping."""

    point: dict
    score: float
    eval_index: int
    wall_time: float
    error: str | None = None


@dataclass(frozen=True)
class OptimizationResult:
    best_point: dict
    best_score: float
    trace: tuple[TrialRecord, ...]


@dataclass(frozen=True)
class PsoConfig:
    """Swarm settings; the constriction-style defaults are standard practice."""

    swarm_size: int = 20
    iterations: int = 50
    inertia: float = 0.729
    cognitive: float = 1.49445
    social: float = 1.49445
    velocity_clamp: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.swarm_size < 2:
            raise InvalidParameterError("swarm_size must be >= 2")
        if self.iterations < 1:
            raise InvalidParameterError("iterations must be >= 1")
        if not (0.0 < self.inertia < 1.0):
            raise InvalidParameterError("inertia must lie in (0, 1)")
        if self.cognitive <= 0 or self.social <= 0:
            raise InvalidParameterError("cognitive and social factors must be > 0")
        if not (0.0 < self.velocity_clamp <= 1.0):
            raise InvalidParameterError("velocity_clamp must lie in (0, 1]")


@dataclass(frozen=True)
class TpeConfig:
    """Sequential Parzen-estimator settings; bandwidths follow a scaled Silverman rule."""

    trials: int = 60
    startup: int = 10
    gamma: float = 0.25
    candidates: int = 24
    bandwidth_factor: float = 1.06
    seed: int = 0

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise InvalidParameterError("trials must be >= 1")
        if not (1 <= self.startup <= self.trials):
            raise InvalidParameterError("startup must lie in [1, trials]")
        if not (0.0 < self.gamma < 1.0):
            raise InvalidParameterError("gamma must lie in (0, 1)")
        if self.candidates < 1:
            raise InvalidParameterError("candidates must be >= 1")
        if self.bandwidth_factor <= 0:
            raise InvalidParameterError("bandwidth_factor must be > 0")


def _evaluate(objective: Objective, point: Mapping, index: int) -> TrialRecord:
    start = time.perf_counter()
    try:
        score = float(objective(dict(point)))
        error = None
        if not math.isfinite(score):
            score, error = math.inf, "objective returned a non-finite score"
    except HefLabError as exc:
        score, error = math.inf, f"{type(exc).__name__}: {exc}"
    return TrialRecord(
        point=dict(point),
        score=score,
        eval_index=index,
        wall_time=time.perf_counter() - start,
        error=error,
    )


def _finish(trace: list[TrialRecord]) -> OptimizationResult:
    best = min(trace, key=lambda rec: (rec.score, rec.eval_index))
    return OptimizationResult(best_point=dict(best.point), best_score=best.score, trace=tuple(trace))


def write_trace_csv(trace, path) -> None:
    """Export a trace as ``eval_index,<params in point order>,score,wall_time``."""
    trace = tuple(trace)
    names: list[str] = []
    for rec in trace:
        for name in rec.point:
            if name not in names:
                names.append(name)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eval_index", *names, "score", "wall_time"])
        for rec in trace:
            writer.writerow(
                [rec.eval_index, *[rec.point.get(n, "") for n in names], rec.score, rec.wall_time]
            )


def grid_search(
    space: HyperparameterSpace,
    objective: Objective,
    cap: int = DEFAULT_GRID_CAP,
) -> OptimizationResult:
    """Exhaustive minimum over the full Cartesian product.

    Ties go to the first point in declared-parameter/declared-value order.
    """
    if not space.is_finite():
        raise InvalidParameterError("grid_search requires finite grid domains for every parameter")
    size = space.grid_size()
    if size > cap:
        raise GridTooLargeError(f"grid has {size} points, cap is {cap}")
    trace = [_evaluate(objective, point, i) for i, point in enumerate(space.grid_points())]
    return _finish(trace)


def pso_minimize(
    space: HyperparameterSpace,
    objective: Objective,
    config: PsoConfig = PsoConfig(),
) -> OptimizationResult:
    """Batch-synchronous particle swarm over the box of interval dimensions.

    Velocities follow ``v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x)``,
    clamped to a fraction of the box width; positions are clipped to the box.
    The trace holds exactly swarm_size * iterations evaluations and the
    running global best never worsens.
    """
    if len(space) == 0 or len(space.interval_names()) != len(space):
        raise EmptySpaceError("pso_minimize needs a space of interval domains only")
    lo, hi = space.box_bounds()
    widths = hi - lo
    rng = np.random.default_rng(config.seed)
    S, D = config.swarm_size, len(lo)
    vmax = config.velocity_clamp * widths

    positions = rng.uniform(lo, hi, size=(S, D))
    velocities = np.zeros((S, D))
    trace: list[TrialRecord] = []

    def evaluate_swarm() -> np.ndarray:
        scores = np.empty(S)
        for i in range(S):
            rec = _evaluate(objective, space.decode_vector(positions[i]), len(trace))
            trace.append(rec)
            scores[i] = rec.score
        return scores

    pbest_pos = positions.copy()
    pbest_score = evaluate_swarm()
    g = int(np.argmin(pbest_score))
    gbest_pos, gbest_score = pbest_pos[g].copy(), float(pbest_score[g])

    for _ in range(config.iterations - 1):
        r1 = rng.uniform(size=(S, D))
        r2 = rng.uniform(size=(S, D))
        velocities = (
            config.inertia * velocities
            + config.cognitive * r1 * (pbest_pos - positions)
            + config.social * r2 * (gbest_pos - positions)
        )
        velocities = np.clip(velocities, -vmax, vmax)
        positions = np.clip(positions + velocities, lo, hi)
        scores = evaluate_swarm()
        improved = scores < pbest_score
        pbest_pos[improved] = positions[improved]
        pbest_score[improved] = scores[improved]
        g = int(np.argmin(pbest_score))
        if pbest_score[g] < gbest_score:
            gbest_pos, gbest_score = pbest_pos[g].copy(), float(pbest_score[g])

    return _finish(trace)


# --- TPE internals ----------------------------------------------------------


@dataclass
class _NumericParzen:
    """1-D Gaussian mixture over observations plus one uniform prior component.

    The prior takes part in sampling too (one pseudo-center), so candidate
    draws never fixate entirely on the observed cluster; the bandwidth floor
    keeps late-stage kernels from collapsing to spikes.
    """

    centers: np.ndarray
    bandwidth: float
    lower: float
    upper: float
    width: float = field(init=False)

    def __post_init__(self) -> None:
        self.width = max(self.upper - self.lower, 1e-12)

    @classmethod
    def fit(cls, values: np.ndarray, lower: float, upper: float, factor: float) -> "_NumericParzen":
        width = max(upper - lower, 1e-12)
        spread = float(values.std())
        bw = factor * spread * len(values) ** (-0.2)
        bw = max(bw, width / min(100.0, len(values) + 2.0))
        return cls(centers=values, bandwidth=bw, lower=lower, upper=upper)

    def sample(self, rng: np.random.Generator) -> float:
        pick = int(rng.integers(len(self.centers) + 1))
        if pick == len(self.centers):  # the uniform prior component
            return float(rng.uniform(self.lower, self.upper))
        return float(np.clip(rng.normal(self.centers[pick], self.bandwidth), self.lower, self.upper))

    def log_density(self, x: float) -> float:
        z = (x - self.centers) / self.bandwidth
        kernel = np.exp(-0.5 * z * z) / (self.bandwidth * math.sqrt(2.0 * math.pi))
        density = (kernel.sum() + 1.0 / self.width) / (len(self.centers) + 1)
        return math.log(max(density, 1e-300))


@dataclass
class _CategoricalParzen:
    """Laplace-smoothed category frequencies over a grid domain."""

    values: tuple
    probs: np.ndarray

    @classmethod
    def fit(cls, observed: list, domain: GridDomain) -> "_CategoricalParzen":
        counts = np.array([1.0 + sum(1 for o in observed if o == v) for v in domain.values])
        return cls(values=domain.values, probs=counts / counts.sum())

    def sample(self, rng: np.random.Generator):
        return self.values[int(rng.choice(len(self.values), p=self.probs))]

    def log_density(self, x) -> float:
        return math.log(float(self.probs[self.values.index(x)]))


def _fit_parzen(space: HyperparameterSpace, points: list[dict], factor: float) -> dict:
    estimators: dict = {}
    for name in space.names:
        domain = space[name]
        observed = [pt[name] for pt in points]
        if isinstance(domain, GridDomain):
            estimators[name] = _CategoricalParzen.fit(observed, domain)
        else:
            lo, hi = domain.internal_bounds()
            internal = np.array(
                [math.log10(float(v)) if domain.scale == "log" else float(v) for v in observed]
            )
            estimators[name] = (_NumericParzen.fit(internal, lo, hi, factor), domain)
    return estimators


def _parzen_sample(estimators: dict, rng: np.random.Generator) -> dict:
    point: dict = {}
    for name, est in estimators.items():
        if isinstance(est, _CategoricalParzen):
            point[name] = est.sample(rng)
        else:
            numeric, domain = est
            point[name] = domain.decode(numeric.sample(rng))
    return point


def _parzen_log_density(estimators: dict, point: dict) -> float:
    total = 0.0
    for name, est in estimators.items():
        if isinstance(est, _CategoricalParzen):
            total += est.log_density(point[name])
        else:
            numeric, domain = est
            value = float(point[name])
            internal = math.log10(value) if domain.scale == "log" else value
            total += numeric.log_density(internal)
    return total


def tpe_minimize(
    space: HyperparameterSpace,
    objective: Objective,
    config: TpeConfig = TpeConfig(),
) -> OptimizationResult:
    """Sequential model-based search ranking candidates by good/bad density ratio.

    The first ``startup`` points are uniform; afterwards the history splits at
    the gamma-quantile into good and bad sets, per-dimension Parzen estimators
    l(x) and g(x) are fitted, ``candidates`` draws from l are ranked by
    ``log l - log g``, and the best candidate is evaluated.
    """
    if len(space) == 0:
        raise EmptySpaceError("tpe_minimize needs at least one parameter")
    rng = np.random.default_rng(config.seed)
    trace: list[TrialRecord] = []

    for t in range(config.trials):
        if t < config.startup:
            point = space.sample(rng)
        else:
            history = sorted(trace, key=lambda rec: (rec.score, rec.eval_index))
            n_good = max(1, math.ceil(config.gamma * len(history)))
            good = [rec.point for rec in history[:n_good]]
            bad = [rec.point for rec in history[n_good:]] or good
            l_est = _fit_parzen(space, good, config.bandwidth_factor)
            g_est = _fit_parzen(space, bad, config.bandwidth_factor)
            candidates = [_parzen_sample(l_est, rng) for _ in range(config.candidates)]
            ratios = [
                _parzen_log_density(l_est, c) - _parzen_log_density(g_est, c) for c in candidates
            ]
            point = candidates[int(np.argmax(ratios))]
        trace.append(_evaluate(objective, point, t))

    return _finish(trace)
