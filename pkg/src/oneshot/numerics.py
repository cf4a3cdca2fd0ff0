"""Small dense numerics: vector helpers, seeded streams, least squares, roots.

Vectors are 1-D float64 numpy arrays. Every function here is pure; random
state is carried explicitly through ``numpy.random.Generator`` objects built
from an :class:`RngStream`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateInputError,
    DimensionMismatchError,
    NoSignChangeError,
    StepSizeTooLargeError,
)

ArrayLike = Sequence[float] | np.ndarray


def as_vector(v: ArrayLike, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatchError(f"{name} must be a nonempty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DegenerateInputError(f"{name} has non-finite entries")
    return arr


def _check_same_dim(u: np.ndarray, v: np.ndarray) -> None:
    if u.shape != v.shape:
        raise DimensionMismatchError(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")


def dot(u: ArrayLike, v: ArrayLike) -> float:
    u, v = as_vector(u, "u"), as_vector(v, "v")
    _check_same_dim(u, v)
    return float(np.dot(u, v))


def l2_norm(v: ArrayLike) -> float:
    v = as_vector(v)
    return math.sqrt(float(np.dot(v, v)))


def normalize(v: ArrayLike) -> np.ndarray:
    v = as_vector(v)
    n = l2_norm(v)
    if n == 0.0:
        raise DegenerateInputError("cannot normalize the zero vector")
    return v / n


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream id) pair naming an independent, reproducible stream.

    Backed by numpy's PCG64 seeded through ``SeedSequence`` with the stream id
    as spawn key. PCG64 and the ziggurat normal sampler are platform
    independent, so equal pairs give equal draws everywhere.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            val = getattr(self, name)
            if not 0 <= int(val) < 2**64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {val}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))

    def substream(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


@dataclass(frozen=True)
class SolverConfig:
    """Fixed-step gradient descent settings for the coefficient solve.

    ``step_size=None`` picks the step from the basis spectrum, see
    :func:`auto_step`.
    """

    step_size: float | None = 0.01
    tol: float = 1e-10
    max_iter: int = 100_000

    def __post_init__(self):
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def _basis_matrix(basis, target: np.ndarray) -> np.ndarray:
    B = np.asarray(basis, dtype=np.float64)
    if B.ndim == 1:
        B = B.reshape(1, -1)
    if B.ndim != 2 or B.shape[0] == 0:
        raise DegenerateInputError("basis must contain at least one vector")
    if B.shape[1] != target.shape[0]:
        raise DimensionMismatchError(
            f"basis vectors have dimension {B.shape[1]}, target has {target.shape[0]}"
        )
    return B


def solve_least_squares(basis, target: ArrayLike) -> tuple[np.ndarray, float]:
    """Minimum-norm beta minimising ``||sum_i beta_i basis_i - target||``.

    ``basis`` is a sequence of vectors (rows). Returns ``(beta, residual)``.
    """
    t = as_vector(target, "target")
    B = _basis_matrix(basis, t)
    beta, *_ = np.linalg.lstsq(B.T, t, rcond=None)
    residual = float(np.linalg.norm(B.T @ beta - t))
    return beta, residual


def auto_step(basis) -> float:
    """Fastest stable fixed step for ``||B^T beta - t||^2``: ``1 / (s_max^2 + s_min^2)``.

    ``s_min`` is the smallest nonzero singular value; null directions of the
    basis do not change the combination, so they are ignored.
    """
    sv = np.linalg.svd(np.atleast_2d(np.asarray(basis, dtype=np.float64)), compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 1.0
    nz = sv[sv > sv[0] * max(sv.shape) * np.finfo(float).eps]
    return 1.0 / (nz[0] ** 2 + nz[-1] ** 2)


@dataclass(frozen=True)
class GDSolveResult:
    beta: np.ndarray
    loss: float
    iterations: int
    converged: bool


def gd_least_squares(
    basis,
    target: ArrayLike,
    cfg: SolverConfig = SolverConfig(),
    rng: np.random.Generator | None = None,
) -> GDSolveResult:
    """Fixed-step gradient descent on ``L(beta) = ||B^T beta - target||^2``.

    beta starts uniform in [-0.5, 0.5]. Stops once ``L < cfg.tol`` or after
    ``cfg.max_iter`` updates. Ten consecutive loss increases abort with
    :class:`StepSizeTooLargeError`.
    """
    t = as_vector(target, "target")
    B = _basis_matrix(basis, t)
    if rng is None:
        rng = RngStream(0).generator()
    step = cfg.step_size if cfg.step_size is not None else auto_step(B)

    beta = rng.uniform(-0.5, 0.5, size=B.shape[0])
    r = B.T @ beta - t
    loss = float(r @ r)
    rises = 0
    it = 0
    while it < cfg.max_iter and loss >= cfg.tol:
        beta = beta - step * 2.0 * (B @ r)
        r = B.T @ beta - t
        new_loss = float(r @ r)
        if not math.isfinite(new_loss):
            raise StepSizeTooLargeError(f"loss overflowed at iteration {it + 1} (step {step:g})")
        rises = rises + 1 if new_loss > loss else 0
        if rises >= 10:
            raise StepSizeTooLargeError(
                f"loss increased for 10 consecutive iterations (step {step:g}); reduce step_size"
            )
        loss = new_loss
        it += 1
    return GDSolveResult(beta=beta, loss=loss, iterations=it, converged=loss < cfg.tol)


def solve_scalar_root(
    h: Callable[[float], float],
    bracket: tuple[float, float],
    ftol: float = 1e-12,
    xtol: float = 1e-14,
    max_iter: int = 500,
) -> float:
    """Root of a continuous scalar function on a sign-changing bracket.

    Returns once ``|h(x)| <= ftol`` or the bracket is narrower than ``xtol``
    (or a few ulps); in the latter case the best iterate seen is returned.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = h(lo), h(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise NoSignChangeError(f"no sign change on [{lo!r}, {hi!r}]: h(lo)={flo!r}, h(hi)={fhi!r}")

    # Illinois-modified false position, with a bisection step whenever the
    # bracket fails to halve over two consecutive iterations
    x, fx = (lo, flo) if abs(flo) < abs(fhi) else (hi, fhi)
    side = 0
    slow = 0
    for _ in range(max_iter):
        width = hi - lo
        if slow >= 2:
            cand = 0.5 * (lo + hi)
            slow = 0
        else:
            cand = (lo * fhi - hi * flo) / (fhi - flo)
            if not lo < cand < hi:
                cand = 0.5 * (lo + hi)
        fc = h(cand)
        if abs(fc) < abs(fx):
            x, fx = cand, fc
        if abs(fc) <= ftol:
            return cand
        if (fc < 0) == (flo < 0):
            lo, flo = cand, fc
            if side == -1:
                fhi *= 0.5
            side = -1
        else:
            hi, fhi = cand, fc
            if side == 1:
                flo *= 0.5
            side = 1
        slow = slow + 1 if hi - lo > 0.5 * width else 0
        if hi - lo <= xtol or hi - lo <= 4 * np.spacing(max(abs(lo), abs(hi))):
            break
    return x
