"""Pools: synthetic generators, IDX (MNIST) ingestion, projection and CSV I/O."""
from __future__ import annotations

import csv
import enum
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DimensionMismatchError, TeachingError
from .learner import TeachingExample
from .numerics import RngStream, as_vector


class Task(enum.Enum):
    REGRESSION = "regression"
    BINARY = "binary"
    MULTICLASS = "multiclass"


@dataclass(frozen=True)
class Pool:
    """Feature matrix ``X`` (one example per row) with labels ``y``."""

    X: np.ndarray
    y: np.ndarray
    task: Task = Task.REGRESSION
    n_classes: int | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if X.ndim != 2:
            raise DimensionMismatchError(f"pool features must be a 2-D matrix, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatchError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise TeachingError("pool has non-finite entries")
        task = Task(self.task)
        if task is Task.BINARY and not np.all(np.isin(y, (-1.0, 1.0))):
            raise TeachingError("binary pool labels must be -1 or +1")
        if task is Task.MULTICLASS:
            k = self.n_classes
            if k is None or k < 2:
                raise TeachingError("multiclass pool needs n_classes >= 2")
            if not np.all(np.isin(y, np.arange(k))):
                raise TeachingError(f"multiclass labels must lie in 0..{k - 1}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "task", task)

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, i: int) -> TeachingExample:
        return TeachingExample(self.X[i], self.y[i])

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Pool":
        return Pool(self.X[idx], self.y[idx], self.task, self.n_classes)

    def one_vs_rest(self, k: int) -> "Pool":
        if self.task is not Task.MULTICLASS:
            raise TeachingError("one-vs-rest relabeling needs a multiclass pool")
        return Pool(self.X, np.where(self.y == k, 1.0, -1.0), Task.BINARY)


def _augment(X: np.ndarray, intercept: bool) -> np.ndarray:
    if not intercept:
        return X
    return np.hstack([X, np.ones((X.shape[0], 1))])


def gen_lsr_pool(n: int, theta_star, noise_sd: float, rng: np.random.Generator, intercept: bool = True) -> Pool:
    """Scalar inputs ``U(-10, 10)``; ``y = <theta_star, x~> + N(0, noise_sd^2)``.

    With ``intercept`` the feature row is ``(x, 1)`` and ``theta_star`` is
    ``(slope, intercept)``.
    """
    theta_star = as_vector(theta_star, "theta_star")
    raw = rng.uniform(-10.0, 10.0, size=(n, 1))
    X = _augment(raw, intercept)
    if X.shape[1] != theta_star.size:
        raise DimensionMismatchError(f"features have dim {X.shape[1]}, theta_star has dim {theta_star.size}")
    noise = rng.normal(0.0, noise_sd, size=n) if noise_sd > 0 else np.zeros(n)
    return Pool(X, X @ theta_star + noise, Task.REGRESSION)


def gen_gaussian_blobs(
    n_pos: int,
    n_neg: int,
    mean_pos,
    mean_neg,
    rng: np.random.Generator,
    intercept: bool = True,
) -> Pool:
    """Unit-covariance Gaussian classes, positives first, labels +-1."""
    mean_pos = as_vector(mean_pos, "mean_pos")
    mean_neg = as_vector(mean_neg, "mean_neg")
    if mean_pos.shape != mean_neg.shape:
        raise DimensionMismatchError("class means differ in dimension")
    pos = mean_pos + rng.standard_normal((n_pos, mean_pos.size))
    neg = mean_neg + rng.standard_normal((n_neg, mean_neg.size))
    X = _augment(np.vstack([pos, neg]), intercept)
    y = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
    return Pool(X, y, Task.BINARY)


# IDX -----------------------------------------------------------------------

IDX_UBYTE = 0x08


def read_idx(path, expected_rank: int | None = None) -> np.ndarray:
    """Parse an uncompressed big-endian IDX file of unsigned bytes."""
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise TeachingError(f"{path}: truncated IDX header")
    zero, dtype, rank = struct.unpack(">HBB", raw[:4])
    if zero != 0:
        raise TeachingError(f"{path}: bad IDX magic, expected 0x0000 prefix, got 0x{zero:04x}")
    if dtype != IDX_UBYTE:
        raise TeachingError(f"{path}: unsupported IDX type code 0x{dtype:02x}, expected 0x08 (unsigned byte)")
    if expected_rank is not None and rank != expected_rank:
        expected = 0x800 | expected_rank
        raise TeachingError(f"{path}: bad IDX magic, expected 0x{expected:08x}, got 0x{0x800 | rank:08x}")
    header = 4 + 4 * rank
    if len(raw) < header:
        raise TeachingError(f"{path}: truncated IDX dimension header")
    dims = struct.unpack(f">{rank}I", raw[4:header])
    size = int(np.prod(dims, dtype=np.int64)) if rank else 1
    payload = raw[header:]
    if len(payload) != size:
        raise TeachingError(f"{path}: payload has {len(payload)} bytes, dimensions {dims} need {size}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims).copy()


def write_idx(path, data: np.ndarray) -> None:
    data = np.asarray(data)
    if data.dtype != np.uint8:
        if np.any((data < 0) | (data > 255)) or np.any(data != np.round(data)):
            raise TeachingError("IDX writer only supports unsigned bytes")
        data = data.astype(np.uint8)
    header = struct.pack(">HBB", 0, IDX_UBYTE, data.ndim) + struct.pack(f">{data.ndim}I", *data.shape)
    Path(path).write_bytes(header + np.ascontiguousarray(data).tobytes())


def read_mnist(images_path, labels_path) -> tuple[np.ndarray, np.ndarray]:
    images = read_idx(images_path, expected_rank=3)
    labels = read_idx(labels_path, expected_rank=1)
    if images.shape[0] != labels.shape[0]:
        raise TeachingError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    return images, labels


# projection -----------------------------------------------------------------

@dataclass(frozen=True)
class ProjectionMatrix:
    matrix: np.ndarray  # (input_dim, output_dim)
    seed: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


def projection_matrix(in_dim: int, out_dim: int, seed: int) -> ProjectionMatrix:
    if not 0 < out_dim < in_dim:
        raise DimensionMismatchError(f"projection needs 0 < out_dim < in_dim, got {in_dim} -> {out_dim}")
    rng = RngStream(seed).generator()
    P = rng.normal(0.0, 1.0 / np.sqrt(out_dim), size=(in_dim, out_dim))
    return ProjectionMatrix(P, seed)


def random_projection(features, out_dim: int, seed: int) -> tuple[np.ndarray, ProjectionMatrix]:
    """Project rows of ``features`` with a seeded N(0, 1/out_dim) matrix."""
    F = np.asarray(features, dtype=np.float64)
    if F.ndim == 1:
        F = F.reshape(1, -1)
    P = projection_matrix(F.shape[1], out_dim, seed)
    return F @ P.matrix, P


def mnist_binary_pool(
    images: np.ndarray,
    labels: np.ndarray,
    classes: tuple[int, int],
    out_dim: int,
    seed: int,
    per_class: int | None = None,
) -> tuple[Pool, ProjectionMatrix]:
    """Two-digit pool: pixels scaled to [0, 1], flattened, randomly projected.

    ``classes[0]`` becomes label -1 and ``classes[1]`` label +1. With
    ``per_class`` a seeded subsample of that many images per class is taken.
    """
    a, b = classes
    if a == b:
        raise ConfigError("the two classes must differ")
    rng = RngStream(seed, 1).generator()
    picks = []
    for c in (a, b):
        idx = np.flatnonzero(labels == c)
        if idx.size == 0:
            raise TeachingError(f"no images with label {c}")
        if per_class is not None:
            if per_class > idx.size:
                raise TeachingError(f"class {c} has {idx.size} images, {per_class} requested")
            idx = np.sort(rng.choice(idx, size=per_class, replace=False))
        picks.append(idx)
    sel = np.concatenate(picks)
    flat = images[sel].reshape(sel.size, -1).astype(np.float64) / 255.0
    X, P = random_projection(flat, out_dim, seed)
    y = np.where(labels[sel] == b, 1.0, -1.0)
    return Pool(X, y, Task.BINARY), P


def synthetic_digits(n_per_class: int, n_classes: int, rng: np.random.Generator, side: int = 28) -> tuple[np.ndarray, np.ndarray]:
    """MNIST-shaped stand-in: noisy stroke prototypes, uint8 images and labels.

    Each class has a fixed prototype built from a few random line strokes;
    samples jitter the prototype by a small shift and add pixel noise.
    """
    protos = []
    grid = np.arange(side)
    yy, xx = np.meshgrid(grid, grid, indexing="ij")
    for _ in range(n_classes):
        img = np.zeros((side, side))
        for _ in range(3):
            p0, p1 = rng.uniform(5, side - 5, size=(2, 2))
            t = np.linspace(0, 1, 40)[:, None]
            pts = p0 + t * (p1 - p0)
            for py, px in pts:
                img = np.maximum(img, np.exp(-((yy - py) ** 2 + (xx - px) ** 2) / 2.0))
        protos.append(img)
    images = np.empty((n_per_class * n_classes, side, side), dtype=np.uint8)
    labels = np.repeat(np.arange(n_classes, dtype=np.uint8), n_per_class)
    for i, c in enumerate(labels):
        shift = rng.integers(-2, 3, size=2)
        img = np.roll(protos[c], tuple(shift), axis=(0, 1))
        img = img * rng.uniform(0.7, 1.0) + rng.normal(0.0, 0.15, size=img.shape)
        images[i] = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    order = rng.permutation(labels.size)
    return images[order], labels[order]


# CSV ------------------------------------------------------------------------

def write_pool_csv(pool: Pool, path) -> None:
    """Header ``x0,...,x{n-1},y``; floats in shortest round-trip form."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(pool.dim)] + ["y"])
        for row, label in zip(pool.X, pool.y):
            w.writerow([repr(float(v)) for v in row] + [repr(float(label))])


def load_pool_csv(path, task: Task | str | None = None, n_classes: int | None = None) -> Pool:
    """Read a pool CSV. Without ``task``, labels in {-1, +1} mean binary."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise TeachingError(f"{path}: missing header")
    header = rows[0]
    n = len(header) - 1
    if n < 1 or header != [f"x{i}" for i in range(n)] + ["y"]:
        raise TeachingError(f"{path}: header must be x0,...,x{{n-1}},y; got {','.join(header)}")
    body = rows[1:]
    if not body:
        raise TeachingError(f"{path}: no data rows")
    data = np.empty((len(body), n + 1))
    for lineno, row in enumerate(body, start=2):
        if len(row) != n + 1:
            raise TeachingError(f"{path}:{lineno}: expected {n + 1} cells, got {len(row)}")
        try:
            data[lineno - 2] = [float(c) for c in row]
        except ValueError:
            raise TeachingError(f"{path}:{lineno}: non-numeric cell") from None
    X, y = data[:, :n], data[:, n]
    if task is None:
        task = Task.BINARY if np.all(np.isin(y, (-1.0, 1.0))) else Task.REGRESSION
    return Pool(X, y, Task(task), n_classes)


def pool_from_examples(examples: Sequence[TeachingExample], task: Task = Task.REGRESSION) -> Pool:
    return Pool(np.stack([e.x for e in examples]), [e.y for e in examples], task)


PRESETS = {
    "lsr": dict(theta_star=(-0.8, 0.6), theta0=(0.1, 0.3), loss="square", eta_osts=0.01),
    "svm": dict(theta_star=(0.8, 1.0, -0.6), theta0=(-0.1, 0.1, -0.7), loss="hinge", eta_osts=0.1,
                mean_pos=(1.8, 2.85), mean_neg=(-1.8, -1.65)),
    "lr": dict(theta_star=(0.8, 0.6, 0.5), theta0=(0.4, -0.2, 0.46), loss="logistic", eta_osts=0.1,
               mean_pos=(5.0, 10.0), mean_neg=(-5.0, -10.0)),
}


def preset_pool(name: str, rng: np.random.Generator) -> Pool:
    """The 1000-example synthetic training pools for the three learners."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}")
    p = PRESETS[name]
    if name == "lsr":
        return gen_lsr_pool(1000, p["theta_star"], 2.0, rng)
    return gen_gaussian_blobs(500, 500, p["mean_pos"], p["mean_neg"], rng)
