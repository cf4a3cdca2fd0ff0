"""Teacher-versus-baseline experiments: metrics, baselines, traces, summaries."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .datagen import (
    PRESETS,
    Pool,
    Task,
    load_pool_csv,
    mnist_binary_pool,
    preset_pool,
    read_mnist,
    synthetic_digits,
)
from .errors import ConfigError, DimensionMismatchError, TeachingError
from .learner import LossKind, gd_step_arrays, loss_grads, losses, predict_many
from .numerics import RngStream, SolverConfig, as_vector
from .teacher import LabelPolicy, Teacher, TeacherKind, TeachingResult, teach

TRACE_HEADER = ("iteration", "strategy", "learner_bias", "stochastic_loss", "test_accuracy")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    strategy: str
    learner_bias: float
    stochastic_loss: float
    test_accuracy: float | None = None


def metric_bias(theta, theta_star) -> float:
    theta, theta_star = as_vector(theta, "theta"), as_vector(theta_star, "theta_star")
    if theta.shape != theta_star.shape:
        raise DimensionMismatchError(f"theta has dim {theta.size}, theta_star has dim {theta_star.size}")
    return float(np.linalg.norm(theta - theta_star))


def stochastic_loss(
    theta,
    pool: Pool,
    kind: LossKind,
    batch: int = 100,
    rng: np.random.Generator | None = None,
    exhaustive: bool = False,
) -> float:
    """Mean loss over ``batch`` pool examples drawn with replacement.

    ``exhaustive`` averages over the whole pool instead.
    """
    if len(pool) == 0:
        raise TeachingError("stochastic loss needs a nonempty pool")
    theta = np.asarray(theta, dtype=np.float64)
    if exhaustive:
        X, y = pool.X, pool.y
    else:
        idx = rng.integers(0, len(pool), size=batch)
        X, y = pool.X[idx], pool.y[idx]
    return float(np.mean(losses(LossKind.parse(kind), X @ theta, y)))


def accuracy(theta, pool: Pool, kind: LossKind) -> float | None:
    if pool is None or not LossKind.parse(kind).is_classification:
        return None
    return float(np.mean(predict_many(theta, pool.X, kind) == pool.y))


@dataclass
class Evaluator:
    """Computes one trace row; owns the stochastic-loss random stream."""

    theta_star: np.ndarray
    kind: LossKind
    eval_pool: Pool
    test_pool: Pool | None
    batch: int
    rng: np.random.Generator

    def record(self, t: int, name: str, theta: np.ndarray) -> TraceRecord:
        return TraceRecord(
            iteration=t,
            strategy=name,
            learner_bias=metric_bias(theta, self.theta_star),
            stochastic_loss=stochastic_loss(theta, self.eval_pool, self.kind, self.batch, self.rng),
            test_accuracy=accuracy(theta, self.test_pool, self.kind),
        )


def _sampling_baseline(pool, theta0, kind, eta, iterations, batch, rng, evaluator, name):
    if len(pool) == 0:
        raise TeachingError("baseline needs a nonempty pool")
    theta = as_vector(theta0, "theta0").copy()
    trace = [evaluator.record(0, name, theta)]
    for t in range(1, iterations + 1):
        idx = rng.integers(0, len(pool), size=batch)
        theta = gd_step_arrays(theta, pool.X[idx], pool.y[idx], kind, eta)
        trace.append(evaluator.record(t, name, theta))
    return trace, theta


def baseline_sgd(pool, theta0, kind, eta, iterations, rng, evaluator, name="SGD"):
    """Uniform singleton batches drawn with replacement."""
    return _sampling_baseline(pool, theta0, kind, eta, iterations, 1, rng, evaluator, name)


def baseline_bsgd(pool, theta0, kind, eta, iterations, rng, evaluator, name="BSGD", batch=100):
    return _sampling_baseline(pool, theta0, kind, eta, iterations, batch, rng, evaluator, name)


def baseline_random(pool, theta0, kind, eta, iterations, rng, evaluator, name="random"):
    """A teacher handing over uniformly random pool examples.

    Same sampling as SGD by construction; kept as its own named strategy.
    """
    return _sampling_baseline(pool, theta0, kind, eta, iterations, 1, rng, evaluator, name)


def max_entropy_index(theta: np.ndarray, X: np.ndarray) -> int:
    """Pool row with maximal predictive entropy, i.e. smallest |score|."""
    return int(np.argmin(np.abs(X @ theta)))


def baseline_max_entropy(pool, theta0, kind, eta, iterations, evaluator, name="max-entropy"):
    if pool.task is Task.REGRESSION or not LossKind.parse(kind).is_classification:
        raise TeachingError("max-entropy selection needs a classification task")
    theta = as_vector(theta0, "theta0").copy()
    trace = [evaluator.record(0, name, theta)]
    for t in range(1, iterations + 1):
        i = max_entropy_index(theta, pool.X)
        theta = gd_step_arrays(theta, pool.X[i:i + 1], pool.y[i:i + 1], kind, eta)
        trace.append(evaluator.record(t, name, theta))
    return trace, theta


def osts_trace(result: TeachingResult, theta0, kind, eta, iterations, evaluator, name="OSTS"):
    """Trace of a learner fed the teaching example once, then left alone.

    The row count matches the baselines so every strategy shares the axis.
    """
    theta0 = as_vector(theta0, "theta0")
    trace = [evaluator.record(0, name, theta0)]
    x, y = result.example.x, result.example.y
    theta = gd_step_arrays(theta0, x[None, :], np.array([y]), kind, eta)
    for t in range(1, max(iterations, 1) + 1):
        trace.append(evaluator.record(t, name, theta))
    return trace, theta


# one-vs-rest ----------------------------------------------------------------

@dataclass
class OvrResult:
    results: list[TeachingResult | None]
    errors: dict[int, str] = field(default_factory=dict)

    @property
    def status(self) -> str:
        if not self.errors:
            return "ok"
        return "failed" if len(self.errors) == len(self.results) else "partial"

    @property
    def failed_classes(self) -> list[int]:
        return sorted(self.errors)


def ovr_teach(teacher: Teacher, kind, eta, theta0_per_class, theta_star_per_class, policy: LabelPolicy | None = None, **kw) -> OvrResult:
    """Teach each class's binary (class vs rest) parameter independently."""
    T0 = np.asarray(theta0_per_class, dtype=np.float64)
    TS = np.asarray(theta_star_per_class, dtype=np.float64)
    if T0.ndim != 2 or T0.shape != TS.shape:
        raise DimensionMismatchError("per-class parameter matrices must share shape (K, n)")
    if T0.shape[0] < 2:
        raise TeachingError("one-vs-rest needs K >= 2 classes")
    policy = policy or LabelPolicy.forced(1)
    out = OvrResult(results=[])
    for k in range(T0.shape[0]):
        try:
            res = teach(teacher, kind, eta, T0[k], TS[k], policy, **kw)
        except TeachingError as exc:
            out.results.append(None)
            out.errors[k] = str(exc)
            continue
        out.results.append(res)
        if not res.feasible:
            out.errors[k] = res.diagnostics.note or "teaching infeasible"
    return out


def ovr_apply(ovr: OvrResult, kind, eta, theta0_per_class) -> np.ndarray:
    """Per-class parameters after each class learner takes its one step."""
    T0 = np.asarray(theta0_per_class, dtype=np.float64)
    taught = T0.copy()
    for k, res in enumerate(ovr.results):
        if res is not None:
            x, y = res.example.x, res.example.y
            taught[k] = gd_step_arrays(T0[k], x[None, :], np.array([y]), kind, eta)
    return taught


def ovr_predict(theta_per_class, X) -> np.ndarray:
    """Class with the largest score; ties go to the lowest class index."""
    return np.argmax(np.asarray(X) @ np.asarray(theta_per_class).T, axis=1)


# pretraining ----------------------------------------------------------------

@dataclass(frozen=True)
class PretrainInfo:
    method: str
    step_size: float
    iterations: int
    grad_norm: float
    tol: float
    max_iter: int


def pretrain(pool: Pool, kind: LossKind, theta0=None, tol: float = 1e-8, max_iter: int = 5000) -> tuple[np.ndarray, PretrainInfo]:
    """Full-batch gradient descent on the mean training loss.

    The step is ``1/L`` for the loss's smoothness constant ``L`` estimated from
    the largest singular value of the feature matrix. Stops when the gradient
    norm drops below ``tol`` or after ``max_iter`` steps.
    """
    kind = LossKind.parse(kind)
    X, y = pool.X, pool.y
    n = X.shape[0]
    smax2 = float(np.linalg.norm(X, 2)) ** 2
    curvature = {LossKind.SQUARE: 2.0, LossKind.LOGISTIC: 0.25, LossKind.HINGE: 0.25}[kind]
    step = n / (curvature * smax2)
    theta = np.zeros(X.shape[1]) if theta0 is None else as_vector(theta0).copy()
    it = 0
    while True:
        g = (loss_grads(kind, X @ theta, y) @ X) / n
        g_norm = float(np.linalg.norm(g))
        if g_norm <= tol or it >= max_iter:
            break
        theta = theta - step * g
        it += 1
    info = PretrainInfo("full-batch gradient descent", step, it, g_norm, tol, max_iter)
    return theta, info


# experiment driver ----------------------------------------------------------

@dataclass
class Comparison:
    records: list[TraceRecord]
    summary: dict


def _split(pool: Pool, fraction: float, rng: np.random.Generator) -> tuple[Pool, Pool | None]:
    if fraction <= 0:
        return pool, None
    order = rng.permutation(len(pool))
    n_test = int(round(fraction * len(pool)))
    return pool.subset(np.sort(order[n_test:])), pool.subset(np.sort(order[:n_test]))


def load_data(cfg: ExperimentConfig, root: RngStream) -> tuple[Pool, Pool | None, dict]:
    """Training pool, held-out pool and provenance for the configured source."""
    data = cfg.data
    info: dict = {}
    if data.preset in PRESETS:
        train = preset_pool(data.preset, root.substream(100).generator())
        test = preset_pool(data.preset, root.substream(101).generator())
        info["source"] = f"synthetic preset {data.preset}"
    elif data.preset == "digits" or data.idx_images is not None:
        # sample enough per class that the held-out split leaves per_class for training
        per_class = int(math.ceil(data.per_class / (1.0 - data.test_fraction)))
        if data.idx_images is not None:
            images, labels = read_mnist(data.idx_images, data.idx_labels)
            info["source"] = f"IDX {data.idx_images}"
        else:
            images, labels = synthetic_digits(per_class, max(data.classes) + 1, root.substream(102).generator())
            info["source"] = "synthetic digit images (MNIST surrogate)"
        pool, proj = mnist_binary_pool(images, labels, tuple(data.classes), data.proj_dim, cfg.eval.seed, per_class)
        train, test = _split(pool, data.test_fraction, root.substream(103).generator())
        info["projection"] = {"shape": list(proj.shape), "seed": proj.seed}
    else:
        train = load_pool_csv(data.train_pool)
        test = None
        info["source"] = f"CSV {data.train_pool}"
    if cfg.eval.test_pool is not None:
        test = load_pool_csv(cfg.eval.test_pool)
        info["test_source"] = f"CSV {cfg.eval.test_pool}"
    if test is not None and test.dim != train.dim:
        raise ConfigError("eval.test_pool: dimension differs from the training pool")
    return train, test, info


def _teacher_for(tc, train: Pool, root: RngStream, ordinal: int) -> Teacher:
    kind = TeacherKind.parse(tc.kind)
    if kind is TeacherKind.COMPLETE:
        return Teacher.complete()
    if tc.pool_path is not None:
        return Teacher(kind, load_pool_csv(tc.pool_path).X)
    if tc.pool_size > len(train):
        raise ConfigError(f"teachers[{ordinal}].pool_size: exceeds training pool size {len(train)}")
    idx = root.substream(200 + ordinal).generator().choice(len(train), size=tc.pool_size, replace=False)
    return Teacher(kind, train.X[np.sort(idx)])


def run_comparison(cfg: ExperimentConfig, only: set[str] | None = None) -> Comparison:
    """Run every configured teacher and baseline; return traces and summary.

    ``only`` restricts the run to the named strategies. Each strategy keeps
    the random streams of its position in the config, so its trace is the
    same as in the full run.
    """
    cfg.validate()
    if only is not None:
        known = {t.name for t in cfg.teachers} | {b.name for b in cfg.baselines}
        missing = sorted(set(only) - known)
        if missing:
            raise ConfigError(f"unknown strategy {missing[0]!r}; configured: {', '.join(sorted(known))}")
    kind = LossKind.parse(cfg.task.loss)
    root = RngStream(cfg.eval.seed)
    train, test, data_info = load_data(cfg, root)
    dim = train.dim

    pretrain_info = None
    if isinstance(cfg.task.theta_star, str):
        theta_star, pretrain_info = pretrain(train, kind, tol=cfg.pretrain.tol, max_iter=cfg.pretrain.max_iter)
    else:
        theta_star = as_vector(cfg.task.theta_star, "task.theta_star")
    theta0 = np.zeros(dim) if cfg.task.theta0 is None else as_vector(cfg.task.theta0, "task.theta0")
    if theta_star.size != dim or theta0.size != dim:
        raise ConfigError(f"task: parameters must have the pool's dimension {dim}")

    horizon = max([b.iterations for b in cfg.baselines], default=1)
    ordinal = 0
    records: list[TraceRecord] = []
    strategies: dict[str, dict] = {}

    def evaluator(i: int) -> Evaluator:
        return Evaluator(theta_star, kind, train, test, cfg.eval.stoch_batch, root.substream(1000 + i).generator())

    for j, tc in enumerate(cfg.teachers):
        if only is not None and tc.name not in only:
            ordinal += 1
            continue
        teacher = _teacher_for(tc, train, root, j)
        policy = LabelPolicy.parse(tc.policy) if tc.policy else None
        solver = SolverConfig(tc.solver.step_size, tc.solver.tol, tc.solver.max_iter)
        result = teach(teacher, kind, cfg.task.eta, theta0, theta_star, policy, solver,
                       root.substream(300 + j).generator(), exact=tc.solver.exact)
        trace, _ = osts_trace(result, theta0, kind, cfg.task.eta, horizon, evaluator(ordinal), tc.name)
        records.extend(trace)
        strategies[tc.name] = {"type": "teacher", "teacher": teacher.kind.value, "teaching": result.to_dict()}
        ordinal += 1

    for b in cfg.baselines:
        if only is not None and b.name not in only:
            ordinal += 1
            continue
        rng = root.substream(ordinal).generator()
        ev = evaluator(ordinal)
        if b.strategy == "max-entropy":
            trace, _ = baseline_max_entropy(train, theta0, kind, b.eta, b.iterations, ev, b.name)
        else:
            batch = b.batch_size if b.strategy == "bsgd" else 1
            trace, _ = _sampling_baseline(train, theta0, kind, b.eta, b.iterations, batch, rng, ev, b.name)
        records.extend(trace)
        strategies[b.name] = {"type": "baseline", "strategy": b.strategy}
        ordinal += 1

    for name, entry in strategies.items():
        last = [r for r in records if r.strategy == name][-1]
        entry["final"] = {
            "iteration": last.iteration,
            "learner_bias": last.learner_bias,
            "stochastic_loss": last.stochastic_loss,
            "test_accuracy": last.test_accuracy,
        }

    summary = {
        "config": cfg.to_dict(),
        "data": {**data_info, "train_size": len(train), "test_size": None if test is None else len(test), "dim": dim},
        "theta_star": [float(v) for v in theta_star],
        "theta0": [float(v) for v in theta0],
        "pretrain": None if pretrain_info is None else pretrain_info.__dict__,
        "strategies": strategies,
    }
    return Comparison(records, summary)


def trace_csv(records: list[TraceRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in records:
        acc = "" if r.test_accuracy is None else repr(r.test_accuracy)
        w.writerow([r.iteration, r.strategy, repr(r.learner_bias), repr(r.stochastic_loss), acc])
    return buf.getvalue()


def write_trace_csv(records: list[TraceRecord], path) -> None:
    Path(path).write_text(trace_csv(records), encoding="utf-8", newline="")


def summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, allow_nan=True) + "\n"


def summary_table(summary: dict) -> str:
    """Final metrics laid out as rows (bias, stochastic loss, accuracy) x strategies."""
    names = list(summary["strategies"])
    rows = [("Learner bias", "learner_bias"), ("Stochastic loss", "stochastic_loss"), ("Testing accuracy", "test_accuracy")]
    width = max(12, *(len(n) for n in names))
    lines = ["".ljust(18) + "".join(n.rjust(width + 2) for n in names)]
    for label, key in rows:
        cells = []
        for n in names:
            v = summary["strategies"][n]["final"][key]
            cells.append(("-" if v is None else f"{v:.4g}").rjust(width + 2))
        lines.append(label.ljust(18) + "".join(cells))
    return "\n".join(lines)
