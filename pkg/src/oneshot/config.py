"""Experiment configuration: dataclasses, JSON loading, and the built-in presets.

A config is one JSON object::

    {
      "task":      {"loss": "square", "theta_star": [-0.8, 0.6], "theta0": [0.1, 0.3],
                    "eta": 0.01, "intercept": true},
      "data":      {"preset": "lsr"},
      "teachers":  [{"name": "OSTS", "kind": "complete"}],
      "baselines": [{"name": "SGD", "strategy": "sgd", "eta": 1e-4, "batch_size": 1,
                     "iterations": 1000}],
      "eval":      {"stoch_batch": 100, "seed": 0}
    }

``theta_star`` may be the string ``"pretrain"``; ``theta0`` may be null
(zeros). Unknown keys are rejected with the offending field path.
"""
from __future__ import annotations

import copy
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError

STRATEGIES = ("sgd", "bsgd", "random", "max-entropy")
DATA_PRESETS = ("lsr", "svm", "lr", "digits")


@dataclass
class TaskConfig:
    loss: str = "square"
    theta_star: list[float] | str = "pretrain"
    theta0: list[float] | None = None
    eta: float = 0.01
    intercept: bool = True


@dataclass
class DataConfig:
    preset: str | None = None
    train_pool: str | None = None
    idx_images: str | None = None
    idx_labels: str | None = None
    classes: list[int] = field(default_factory=lambda: [0, 1])
    per_class: int = 1000
    proj_dim: int = 24
    test_fraction: float = 0.2


@dataclass
class SolverSettings:
    step_size: float | None = None
    tol: float = 1e-10
    max_iter: int = 100_000
    exact: bool = False


@dataclass
class TeacherConfig:
    name: str = "OSTS"
    kind: str = "complete"
    pool_size: int | None = None
    pool_path: str | None = None
    policy: str | None = None
    solver: SolverSettings = field(default_factory=SolverSettings)


@dataclass
class BaselineConfig:
    name: str = "SGD"
    strategy: str = "sgd"
    eta: float = 1e-4
    batch_size: int = 1
    iterations: int = 1000


@dataclass
class PretrainConfig:
    tol: float = 1e-8
    max_iter: int = 5000


@dataclass
class EvalConfig:
    test_pool: str | None = None
    stoch_batch: int = 100
    seed: int = 0


@dataclass
class ExperimentConfig:
    task: TaskConfig = field(default_factory=TaskConfig)
    data: DataConfig = field(default_factory=DataConfig)
    teachers: list[TeacherConfig] = field(default_factory=lambda: [TeacherConfig()])
    baselines: list[BaselineConfig] = field(default_factory=list)
    pretrain: PretrainConfig = field(default_factory=PretrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self) -> "ExperimentConfig":
        from .learner import LossKind
        from .teacher import LabelPolicy, TeacherKind

        _check(lambda: LossKind.parse(self.task.loss), "task.loss")
        _require(self.task.eta > 0, "task.eta", "must be positive")
        if isinstance(self.task.theta_star, str):
            _require(self.task.theta_star == "pretrain", "task.theta_star", "must be a vector or 'pretrain'")
        sources = [self.data.preset is not None, self.data.train_pool is not None, self.data.idx_images is not None]
        _require(sum(sources) == 1, "data", "set exactly one of preset, train_pool, idx_images")
        if self.data.preset is not None:
            _require(self.data.preset in DATA_PRESETS, "data.preset", f"must be one of {', '.join(DATA_PRESETS)}")
        if self.data.idx_images is not None:
            _require(self.data.idx_labels is not None, "data.idx_labels", "required with idx_images")
        _require(len(self.data.classes) == 2, "data.classes", "must list exactly two classes")
        _require(0 <= self.data.test_fraction < 1, "data.test_fraction", "must lie in [0, 1)")
        names = set()
        for i, t in enumerate(self.teachers):
            path = f"teachers[{i}]"
            kind = _check(lambda: TeacherKind.parse(t.kind), f"{path}.kind")
            if t.policy is not None:
                _check(lambda: LabelPolicy.parse(t.policy), f"{path}.policy")
            if kind is not TeacherKind.COMPLETE:
                _require((t.pool_size is None) != (t.pool_path is None), path,
                         "pool-based teachers need exactly one of pool_size, pool_path")
            if t.pool_size is not None:
                _require(t.pool_size >= 1, f"{path}.pool_size", "must be >= 1")
            s = t.solver
            _require(s.step_size is None or s.step_size > 0, f"{path}.solver.step_size", "must be positive or null")
            _require(s.tol > 0, f"{path}.solver.tol", "must be positive")
            _require(s.max_iter >= 1, f"{path}.solver.max_iter", "must be >= 1")
            _require(t.name not in names, f"{path}.name", f"duplicate strategy name {t.name!r}")
            names.add(t.name)
        for i, b in enumerate(self.baselines):
            path = f"baselines[{i}]"
            _require(b.strategy in STRATEGIES, f"{path}.strategy", f"must be one of {', '.join(STRATEGIES)}")
            _require(b.eta > 0, f"{path}.eta", "must be positive")
            _require(b.batch_size >= 1, f"{path}.batch_size", "must be >= 1")
            _require(b.iterations >= 0, f"{path}.iterations", "must be >= 0")
            _require(b.name not in names, f"{path}.name", f"duplicate strategy name {b.name!r}")
            names.add(b.name)
        _require(self.eval.stoch_batch >= 1, "eval.stoch_batch", "must be >= 1")
        _require(0 <= self.eval.seed < 2**64, "eval.seed", "must be an unsigned 64-bit integer")
        return self


def _require(ok: bool, path: str, msg: str) -> None:
    if not ok:
        raise ConfigError(f"{path}: {msg}")


def _check(fn, path: str):
    try:
        return fn()
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


_NESTED = {
    ExperimentConfig: {
        "task": TaskConfig,
        "data": DataConfig,
        "pretrain": PretrainConfig,
        "eval": EvalConfig,
        "teachers": [TeacherConfig],
        "baselines": [BaselineConfig],
    },
    TeacherConfig: {"solver": SolverSettings},
}


def _build(cls, raw: Any, path: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    known = {f.name for f in dataclasses.fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{path + '.' if path else ''}{key}: unknown field")
    kwargs = {}
    nested = _NESTED.get(cls, {})
    for key, val in raw.items():
        sub = f"{path + '.' if path else ''}{key}"
        spec = nested.get(key)
        if isinstance(spec, list):
            if not isinstance(val, list):
                raise ConfigError(f"{sub}: expected a list")
            kwargs[key] = [_build(spec[0], v, f"{sub}[{i}]") for i, v in enumerate(val)]
        elif spec is not None:
            kwargs[key] = _build(spec, val, sub)
        else:
            kwargs[key] = val
    return cls(**kwargs)


def config_from_dict(raw: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, raw, "").validate()


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(raw)


def _baselines(eta: float, iterations: int) -> list[dict]:
    return [
        {"name": "SGD", "strategy": "sgd", "eta": eta, "batch_size": 1, "iterations": iterations},
        {"name": "BSGD", "strategy": "bsgd", "eta": eta, "batch_size": 100, "iterations": iterations},
    ]


_PRESET_CONFIGS = {
    "lsr": {
        "task": {"loss": "square", "theta_star": [-0.8, 0.6], "theta0": [0.1, 0.3], "eta": 0.01, "intercept": True},
        "data": {"preset": "lsr"},
        "teachers": [{"name": "OSTS", "kind": "complete"}],
        "baselines": _baselines(1e-4, 1000),
    },
    "svm": {
        "task": {"loss": "hinge", "theta_star": [0.8, 1.0, -0.6], "theta0": [-0.1, 0.1, -0.7], "eta": 0.1,
                 "intercept": True},
        "data": {"preset": "svm"},
        "teachers": [{"name": "OSTS", "kind": "complete"}],
        "baselines": _baselines(1e-4, 1000),
    },
    "lr": {
        "task": {"loss": "logistic", "theta_star": [0.8, 0.6, 0.5], "theta0": [0.4, -0.2, 0.46], "eta": 0.1,
                 "intercept": True},
        "data": {"preset": "lr"},
        "teachers": [{"name": "OSTS", "kind": "complete"}],
        "baselines": _baselines(1e-4, 1000),
    },
    "digits": {
        "task": {"loss": "logistic", "theta_star": "pretrain", "theta0": None, "eta": 1e-4, "intercept": False},
        "data": {"preset": "digits", "classes": [0, 1], "per_class": 1000, "proj_dim": 24},
        "teachers": [
            {"name": "cOSTS", "kind": "complete"},
            {"name": "pOSTS", "kind": "combinable", "pool_size": 48},
        ],
        "baselines": _baselines(1e-4, 1000),
    },
}

PRESET_NAMES = tuple(_PRESET_CONFIGS)


def preset_config(name: str, seed: int = 0) -> ExperimentConfig:
    if name not in _PRESET_CONFIGS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {', '.join(_PRESET_CONFIGS)}")
    raw = copy.deepcopy(_PRESET_CONFIGS[name])
    raw["eval"] = {"stoch_batch": 100, "seed": seed}
    return config_from_dict(raw)
