"""Flat dotted-key experiment configuration.

Files hold one ``key = value`` pair per line; values are JSON (so strings
need quotes inside lists, bare words stay strings). ``#`` starts a comment.
Example::

    experiment.models = ["ses", "lr", "knn"]
    experiment.splits = ["80:20"]
    experiment.repetitions = 21
    opt.pso.swarm_size = 12
    models.ses.space.alpha = {"min": 0.05, "max": 0.95}

Seed precedence: ``--seed`` flag > ``HEF_LAB_SEED`` env var > config file.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ConfigError
from .evaluation import MetricWeights, PenaltySchedule
from .optimizers import DEFAULT_GRID_CAP, PsoConfig, TpeConfig
from .protocol import ExperimentConfig
from .series import SplitRatio
from .spaces import Domain, GridDomain, HyperparameterSpace, IntervalDomain

__all__ = [
    "parse_config_file",
    "parse_override",
    "build_experiment_config",
    "SEED_ENV_VAR",
]

SEED_ENV_VAR = "HEF_LAB_SEED"


def _parse_value(raw: str):
    raw = raw.strip()
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw  # bare word: keep as string


def parse_config_file(path: str | Path) -> dict[str, object]:
    """Read ``key = value`` lines into a flat dict; raises with line numbers."""
    flat: dict[str, object] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        flat[key] = _parse_value(raw)
    return flat


def parse_override(text: str) -> tuple[str, object]:
    """Parse one ``--set key=value`` override."""
    if "=" not in text:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override has an empty key: {text!r}")
    return key, _parse_value(raw)


def _domain_from_value(key: str, value: object) -> Domain:
    if not isinstance(value, Mapping):
        raise ConfigError(f"{key}: expected a grid or interval object, got {value!r}")
    if "grid" in value:
        values = value["grid"]
        if not isinstance(values, Sequence) or isinstance(values, str):
            raise ConfigError(f"{key}: grid must be a list")
        return GridDomain(tuple(values))
    if "min" in value and "max" in value:
        return IntervalDomain(
            lower=float(value["min"]),
            upper=float(value["max"]),
            scale=str(value.get("scale", "linear")),
            integer=bool(value.get("integer", False)),
        )
    raise ConfigError(f"{key}: needs either 'grid' or 'min'/'max'")


def _get(flat: Mapping[str, object], key: str, default):
    value = flat.get(key, default)
    if default is not None and value is not None and not isinstance(value, type(default)):
        # ints are acceptable where floats are expected
        if isinstance(default, float) and isinstance(value, int):
            return float(value)
        raise ConfigError(f"{key}: expected {type(default).__name__}, got {value!r}")
    return value


def build_experiment_config(
    flat: Mapping[str, object], seed_override: int | None = None
) -> ExperimentConfig:
    """Assemble the experiment configuration from flat keys plus defaults."""
    models = flat.get("experiment.models")
    if not isinstance(models, Sequence) or isinstance(models, str) or not models:
        raise ConfigError("experiment.models must be a non-empty list of model names")

    splits_raw = flat.get("experiment.splits", ["80:20"])
    if not isinstance(splits_raw, Sequence) or isinstance(splits_raw, str):
        raise ConfigError("experiment.splits must be a list of ratio labels")
    try:
        splits = tuple(SplitRatio.parse(str(s)) for s in splits_raw)
    except Exception as exc:
        raise ConfigError(f"experiment.splits: {exc}") from exc

    conditions_raw = flat.get("experiment.conditions", ["hef", "maef"])
    if not isinstance(conditions_raw, Sequence) or isinstance(conditions_raw, str):
        raise ConfigError("experiment.conditions must be a list")

    if seed_override is not None:
        seed = int(seed_override)
    elif SEED_ENV_VAR in os.environ:
        try:
            seed = int(os.environ[SEED_ENV_VAR])
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer") from None
    else:
        seed = int(_get(flat, "experiment.seed", 0))

    space_overrides: dict[str, HyperparameterSpace] = {}
    per_model_params: dict[str, dict[str, Domain]] = {}
    for key, value in flat.items():
        parts = key.split(".")
        if len(parts) == 4 and parts[0] == "models" and parts[2] == "space":
            per_model_params.setdefault(parts[1], {})[parts[3]] = _domain_from_value(key, value)
    for model_name, params in per_model_params.items():
        space_overrides[model_name] = HyperparameterSpace(params)

    try:
        return ExperimentConfig(
            models=tuple(str(m) for m in models),
            splits=splits,
            conditions=tuple(str(c) for c in conditions_raw),
            scs_optimizer=str(flat.get("experiment.scs_optimizer", "pso")),
            repetitions=int(_get(flat, "experiment.repetitions", 21)),
            master_seed=seed,
            alpha=float(_get(flat, "experiment.alpha", 0.05)),
            pso=PsoConfig(
                swarm_size=int(_get(flat, "opt.pso.swarm_size", 20)),
                iterations=int(_get(flat, "opt.pso.iterations", 50)),
                inertia=float(_get(flat, "opt.pso.inertia", 0.729)),
                cognitive=float(_get(flat, "opt.pso.cognitive", 1.49445)),
                social=float(_get(flat, "opt.pso.social", 1.49445)),
                velocity_clamp=float(_get(flat, "opt.pso.velocity_clamp", 0.5)),
            ),
            tpe=TpeConfig(
                trials=int(_get(flat, "opt.tpe.trials", 60)),
                startup=int(_get(flat, "opt.tpe.startup", 10)),
                gamma=float(_get(flat, "opt.tpe.gamma", 0.25)),
                candidates=int(_get(flat, "opt.tpe.candidates", 24)),
                bandwidth_factor=float(_get(flat, "opt.tpe.bandwidth_factor", 1.06)),
            ),
            grid_cap=int(_get(flat, "opt.grid.cap", DEFAULT_GRID_CAP)),
            hef_weights=MetricWeights(
                r2=float(_get(flat, "hef.weights.r2", 1.0)),
                mae=float(_get(flat, "hef.weights.mae", 1.0)),
                rmse=float(_get(flat, "hef.weights.rmse", 0.5)),
            ),
            hef_penalties=PenaltySchedule(
                level_1=float(_get(flat, "hef.penalties.l1", 1.2)),
                level_2=float(_get(flat, "hef.penalties.l2", 1.3)),
                level_3=float(_get(flat, "hef.penalties.l3", 1.5)),
                level_4=float(_get(flat, "hef.penalties.l4", 1.8)),
            ),
            hef_stack_level4=bool(flat.get("hef.stack_level4", False)),
            space_overrides=space_overrides,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
