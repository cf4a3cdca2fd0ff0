"""Gradient-descent linear learners with square, hinge and logistic losses.

The model is ``f(theta, x) = <theta, x>``. For every loss the per-example
gradient factors as ``zeta * x`` with ``zeta = dloss/df``, so a mini-batch
update is a weighted sum of the batch feature vectors.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatchError, TeachingError
from .numerics import as_vector, dot


class LossKind(enum.Enum):
    SQUARE = "square"
    HINGE = "hinge"
    LOGISTIC = "logistic"

    @property
    def is_classification(self) -> bool:
        return self is not LossKind.SQUARE

    @classmethod
    def parse(cls, value: "str | LossKind") -> "LossKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown loss {value!r}; expected one of {names}") from None


@dataclass(frozen=True)
class LearnerSpec:
    loss: LossKind
    eta: float
    intercept: bool = False
    batch_size: int = 1

    def __post_init__(self):
        object.__setattr__(self, "loss", LossKind.parse(self.loss))
        if not self.eta > 0:
            raise ValueError(f"learning rate must be positive, got {self.eta}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class TeachingExample:
    x: np.ndarray
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", as_vector(self.x, "x"))
        y = float(self.y)
        if not np.isfinite(y):
            raise TeachingError("label must be finite")
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class LearnerState:
    theta: np.ndarray
    t: int = 0

    def __post_init__(self):
        object.__setattr__(self, "theta", as_vector(self.theta, "theta"))


def _check_labels(kind: LossKind, y) -> None:
    if kind.is_classification and not np.all(np.isin(y, (-1.0, 1.0))):
        raise TeachingError(f"{kind.value} loss needs labels in {{-1, +1}}, got {y!r}")


def losses(kind: LossKind, f, y) -> np.ndarray:
    """Elementwise loss values for scores ``f`` and labels ``y``."""
    f = np.asarray(f, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_labels(kind, y)
    if kind is LossKind.SQUARE:
        return (f - y) ** 2
    if kind is LossKind.HINGE:
        return np.maximum(1.0 - y * f, 0.0)
    # softplus(-y f), stable for large |f|
    return np.logaddexp(0.0, -y * f)


def loss_grads(kind: LossKind, f, y) -> np.ndarray:
    """Elementwise ``dloss/df``."""
    f = np.asarray(f, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_labels(kind, y)
    if kind is LossKind.SQUARE:
        return 2.0 * (f - y)
    if kind is LossKind.HINGE:
        # subgradient 0 at the kink
        return np.where(1.0 - y * f > 0.0, -y, 0.0)
    return -y * expit(-y * f)


def loss_value(kind: LossKind, f: float, y: float) -> float:
    return float(losses(LossKind.parse(kind), f, y))


def loss_grad_f(kind: LossKind, f: float, y: float) -> float:
    return float(loss_grads(LossKind.parse(kind), f, y))


def gradient(theta, ex: TeachingExample, kind: LossKind) -> np.ndarray:
    theta = as_vector(theta, "theta")
    if theta.shape != ex.x.shape:
        raise DimensionMismatchError(f"theta has dim {theta.size}, example has dim {ex.x.size}")
    zeta = loss_grad_f(kind, float(np.dot(theta, ex.x)), ex.y)
    return zeta * ex.x


def _stack(examples: Sequence[TeachingExample], dim: int) -> tuple[np.ndarray, np.ndarray]:
    if len(examples) == 0:
        raise TeachingError("teaching set is empty")
    X = np.stack([ex.x for ex in examples])
    if X.shape[1] != dim:
        raise DimensionMismatchError(f"teaching set has dim {X.shape[1]}, theta has dim {dim}")
    y = np.array([ex.y for ex in examples], dtype=np.float64)
    return X, y


def gd_step_arrays(theta: np.ndarray, X: np.ndarray, y: np.ndarray, kind: LossKind, eta: float) -> np.ndarray:
    """One mini-batch update on a batch given as a feature matrix and labels."""
    zeta = loss_grads(kind, X @ theta, y)
    return theta - (eta / X.shape[0]) * (zeta @ X)


def gd_step(state: LearnerState, examples: Sequence[TeachingExample], spec: LearnerSpec) -> LearnerState:
    """theta' = theta - (eta / k) * sum_i grad loss(<theta, x_i>, y_i), k = |set|."""
    X, y = _stack(examples, state.theta.size)
    theta = gd_step_arrays(state.theta, X, y, spec.loss, spec.eta)
    return LearnerState(theta=theta, t=state.t + 1)


def residual(theta0, examples: Sequence[TeachingExample], theta_star, spec: LearnerSpec) -> np.ndarray:
    """Where one update on ``examples`` lands, minus the target."""
    theta_star = as_vector(theta_star, "theta_star")
    new = gd_step(LearnerState(theta0), examples, spec)
    if new.theta.shape != theta_star.shape:
        raise DimensionMismatchError("theta_star dimension differs from theta0")
    return new.theta - theta_star


def train(theta0, schedule: Iterable[Sequence[TeachingExample]], spec: LearnerSpec) -> list[LearnerState]:
    """Fold :func:`gd_step` over a finite schedule; includes the initial state."""
    states = [LearnerState(theta0)]
    for batch in schedule:
        states.append(gd_step(states[-1], batch, spec))
    return states


def predict(theta, x, kind: LossKind) -> float:
    """Score for regression, ``sign(score)`` for classification (0 maps to +1)."""
    score = dot(theta, x)
    if LossKind.parse(kind).is_classification:
        return 1.0 if score >= 0 else -1.0
    return score


def predict_many(theta: np.ndarray, X: np.ndarray, kind: LossKind) -> np.ndarray:
    scores = np.asarray(X, dtype=np.float64) @ np.asarray(theta, dtype=np.float64)
    if LossKind.parse(kind).is_classification:
        return np.where(scores >= 0, 1.0, -1.0)
    return scores

