"""One-shot teachers: a single example that moves a GD learner onto a target.

For a linear learner at ``theta0`` with learning rate ``eta``, feeding the
example ``(xi * (theta_star - theta0), y)`` lands exactly on ``theta_star``
provided ``xi`` solves the scalar equation

    eta * zeta(xi * s, y) * xi = -1,   s = <theta0, theta_star - theta0>,

where ``zeta = dloss/df``. Pool-based teachers can only emit examples derived
from a finite pool and approximate that universal example.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInputError,
    DimensionMismatchError,
    InfeasibleScalarError,
    TeachingError,
)
from .learner import LossKind, TeachingExample
from .numerics import (
    SolverConfig,
    as_vector,
    gd_least_squares,
    solve_least_squares,
    solve_scalar_root,
)

TOL_SPAN = 1e-8
TOL_DIR = 1e-8
TOL_MEM = 1e-9

_ROOT_LO = 1e-12
_ROOT_HI_MAX = 1e12


class TeacherKind(enum.Enum):
    COMPLETE = "complete"
    COMBINABLE = "combinable"
    SCALABLE = "scalable"
    NAIVE = "naive"

    @classmethod
    def parse(cls, value) -> "TeacherKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown teacher kind {value!r}; expected one of {names}") from None


@dataclass(frozen=True)
class Teacher:
    """A teacher kind plus, for pool-based kinds, the pool feature matrix (rows)."""

    kind: TeacherKind
    pool: np.ndarray | None = None

    def __post_init__(self):
        kind = TeacherKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is TeacherKind.COMPLETE:
            return
        pool = getattr(self.pool, "X", self.pool)
        if pool is None:
            raise TeachingError(f"{kind.value} teacher needs a pool")
        pool = np.asarray(pool, dtype=np.float64)
        if pool.ndim == 1:
            pool = pool.reshape(1, -1)
        if pool.ndim != 2 or pool.shape[0] == 0:
            raise TeachingError(f"{kind.value} teacher needs a nonempty pool")
        if not np.all(np.isfinite(pool)):
            raise DegenerateInputError("pool has non-finite entries")
        pool.setflags(write=False)
        object.__setattr__(self, "pool", pool)

    @classmethod
    def complete(cls) -> "Teacher":
        return cls(TeacherKind.COMPLETE)

    @classmethod
    def combinable(cls, pool) -> "Teacher":
        return cls(TeacherKind.COMBINABLE, pool)

    @classmethod
    def scalable(cls, pool) -> "Teacher":
        return cls(TeacherKind.SCALABLE, pool)

    @classmethod
    def naive(cls, pool) -> "Teacher":
        return cls(TeacherKind.NAIVE, pool)


class LabelMode(enum.Enum):
    FIXED_REGRESSION = "fixed"
    CLASSIFICATION_AUTO = "auto"
    CLASSIFICATION_FORCED = "forced"
    SELF_CONSISTENT = "self"


@dataclass(frozen=True)
class LabelPolicy:
    mode: LabelMode
    y: float | None = None

    def __post_init__(self):
        mode = LabelMode(self.mode)
        object.__setattr__(self, "mode", mode)
        if mode is LabelMode.FIXED_REGRESSION and (self.y is None or self.y == 0):
            raise ValueError("fixed regression label must be a nonzero real")
        if mode is LabelMode.CLASSIFICATION_FORCED and self.y not in (1, -1):
            raise ValueError("forced classification label must be +1 or -1")

    @classmethod
    def fixed(cls, y: float = 1.0) -> "LabelPolicy":
        return cls(LabelMode.FIXED_REGRESSION, float(y))

    @classmethod
    def auto(cls) -> "LabelPolicy":
        return cls(LabelMode.CLASSIFICATION_AUTO)

    @classmethod
    def forced(cls, y: int) -> "LabelPolicy":
        return cls(LabelMode.CLASSIFICATION_FORCED, float(y))

    @classmethod
    def self_consistent(cls) -> "LabelPolicy":
        return cls(LabelMode.SELF_CONSISTENT)

    @classmethod
    def parse(cls, text: str) -> "LabelPolicy":
        """``auto``, ``self``, ``+1``/``-1`` (forced), or ``fixed:<y>``."""
        text = str(text).strip().lower()
        if text == "auto":
            return cls.auto()
        if text in ("self", "self-consistent"):
            return cls.self_consistent()
        if text in ("+1", "1", "-1"):
            return cls.forced(int(text))
        if text.startswith("fixed:"):
            return cls.fixed(float(text.split(":", 1)[1]))
        raise ValueError(f"unrecognised label policy {text!r}")

    def describe(self) -> str:
        if self.mode is LabelMode.FIXED_REGRESSION:
            return f"fixed:{self.y!r}"
        if self.mode is LabelMode.CLASSIFICATION_FORCED:
            return "+1" if self.y > 0 else "-1"
        return self.mode.value


def default_policy(kind: LossKind) -> LabelPolicy:
    return LabelPolicy.auto() if LossKind.parse(kind).is_classification else LabelPolicy.fixed(1.0)


@dataclass
class Diagnostics:
    residual_to_universal: float = 0.0
    hinge_active: bool | None = None
    label_consistent: bool | None = None
    pool_index: int | None = None
    beta: np.ndarray | None = None
    already_converged: bool = False
    note: str = ""


@dataclass
class TeachingResult:
    example: TeachingExample
    xi: float
    feasible: bool
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    def to_dict(self) -> dict:
        d = self.diagnostics
        return {
            "x": [float(v) for v in self.example.x],
            "y": float(self.example.y),
            "xi": float(self.xi),
            "feasible": bool(self.feasible),
            "diagnostics": {
                "residual_to_universal": float(d.residual_to_universal),
                "hinge_active": d.hinge_active,
                "label_consistent": d.label_consistent,
                "pool_index": d.pool_index,
                "beta": None if d.beta is None else [float(b) for b in d.beta],
                "already_converged": d.already_converged,
                "note": d.note,
            },
        }


def _gap(theta0, theta_star) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    theta0 = as_vector(theta0, "theta0")
    theta_star = as_vector(theta_star, "theta_star")
    if theta0.shape != theta_star.shape:
        raise DimensionMismatchError(f"theta0 has dim {theta0.size}, theta_star has dim {theta_star.size}")
    return theta0, theta_star, theta_star - theta0


def _sign(v: float) -> float:
    return 1.0 if v >= 0 else -1.0


def _safe_exp(a: float) -> float:
    return math.exp(a) if a < 709.0 else math.inf


def _logistic_u(eta: float, s: float) -> float:
    """Smallest u > 0 with eta*u = 1 + exp(u*s); u is label * xi."""

    def h(u: float) -> float:
        return eta * u - 1.0 - _safe_exp(u * s)

    if s > 0:
        # h is concave: a root exists iff its maximum is nonnegative
        if eta <= s:
            raise InfeasibleScalarError(
                f"logistic: no teaching scalar since <theta0, gap>={s!r} >= eta={eta!r}"
            )
        u_peak = math.log(eta / s) / s
        if h(u_peak) < 0:
            raise InfeasibleScalarError(
                f"logistic: no teaching scalar for <theta0, gap>={s!r} at eta={eta!r}"
            )
        if h(u_peak) == 0:
            return u_peak
        return solve_scalar_root(h, (_ROOT_LO, u_peak))

    hi = 1.0
    while h(hi) < 0:
        hi *= 2.0
        if hi > _ROOT_HI_MAX:
            raise InfeasibleScalarError("logistic: root bracket exhausted")
    return solve_scalar_root(h, (_ROOT_LO, hi))


def teaching_scalar(kind: LossKind, eta: float, theta0, theta_star, y: float) -> float:
    """Scale xi such that ``(xi * (theta_star - theta0), y)`` teaches in one step.

    ``y`` may be any nonzero real: the scalar equation is defined for every
    label, even though the classification losses only accept +-1 examples.
    """
    kind = LossKind.parse(kind)
    if not eta > 0:
        raise ValueError("eta must be positive")
    if y == 0:
        raise ValueError("label must be nonzero")
    theta0, theta_star, d = _gap(theta0, theta_star)
    if not np.any(d):
        raise TeachingError("theta0 equals theta_star; nothing to teach")
    s = float(np.dot(theta0, d))

    if kind is LossKind.HINGE:
        return 1.0 / (eta * y)
    if kind is LossKind.SQUARE:
        # roots of 2*eta*s*xi^2 - 2*eta*y*xi + 1 = 0; 1/q is the smaller-|xi| one
        disc = eta * eta * y * y - 2.0 * eta * s
        if disc < 0:
            need = math.sqrt(2.0 * s / eta)
            raise InfeasibleScalarError(
                f"square: no real teaching scalar for y={y!r}; need |y| >= {need!r}",
                min_abs_label=need,
            )
        q = eta * y + _sign(y) * math.sqrt(disc)
        return 1.0 / q
    return _logistic_u(eta, s) / y


def _label_consistent(theta_star: np.ndarray, x: np.ndarray, y: float) -> bool:
    return _sign(float(np.dot(theta_star, x))) == y


def _hinge_active(theta0: np.ndarray, x: np.ndarray, y: float) -> bool:
    return 1.0 - y * float(np.dot(theta0, x)) > 0.0


def _candidate(kind, eta, theta0, theta_star, d, y) -> TeachingResult:
    xi = teaching_scalar(kind, eta, theta0, theta_star, y)
    x = xi * d
    diag = Diagnostics()
    feasible = True
    if kind is LossKind.HINGE:
        diag.hinge_active = _hinge_active(theta0, x, y)
        feasible = diag.hinge_active
        if not feasible:
            diag.note = "hinge inactive: <theta0, gap> >= eta, update would be zero"
    if kind.is_classification:
        diag.label_consistent = _label_consistent(theta_star, x, y)
    return TeachingResult(TeachingExample(x, y), xi, feasible, diag)


def universal_example(kind: LossKind, eta: float, theta0, theta_star, policy: LabelPolicy | None = None) -> TeachingResult:
    """The complete teacher's optimal example ``xi * (theta_star - theta0)``."""
    kind = LossKind.parse(kind)
    policy = policy or default_policy(kind)
    theta0, theta_star, d = _gap(theta0, theta_star)

    if not np.any(d):
        diag = Diagnostics(already_converged=True, note="theta0 equals theta_star")
        return TeachingResult(TeachingExample(np.zeros_like(d), 1.0), 0.0, True, diag)

    mode = policy.mode
    if mode is LabelMode.FIXED_REGRESSION:
        if kind.is_classification:
            raise TeachingError(f"fixed regression label is invalid for {kind.value} loss")
        return _candidate(kind, eta, theta0, theta_star, d, policy.y)
    if mode is LabelMode.CLASSIFICATION_FORCED:
        return _candidate(kind, eta, theta0, theta_star, d, policy.y)
    if mode is LabelMode.SELF_CONSISTENT and kind is LossKind.SQUARE:
        # y = <theta_star, x> with x = xi*d collapses the quadratic to
        # 2*eta*xi^2*||d||^2 = 1
        xi = 1.0 / (math.sqrt(2.0 * eta) * float(np.linalg.norm(d)))
        x = xi * d
        y = float(np.dot(theta_star, x))
        return TeachingResult(TeachingExample(x, y), xi, True, Diagnostics())

    # auto (and self-consistent for classification): rank both labels
    best, best_key, errors = None, None, []
    for y in (1.0, -1.0):
        try:
            cand = _candidate(kind, eta, theta0, theta_star, d, y)
        except InfeasibleScalarError as exc:
            errors.append(exc)
            continue
        key = (cand.diagnostics.hinge_active is not False, bool(cand.diagnostics.label_consistent))
        if best is None or key > best_key:
            best, best_key = cand, key
    if best is None:
        raise errors[0]
    return best


def _finish(kind, theta0, theta_star, universal: TeachingResult, x: np.ndarray, feasible: bool, diag: Diagnostics) -> TeachingResult:
    y = universal.example.y
    diag.residual_to_universal = float(np.linalg.norm(x - universal.example.x))
    if kind is LossKind.HINGE:
        diag.hinge_active = _hinge_active(theta0, x, y)
        feasible = feasible and diag.hinge_active
    if kind.is_classification:
        diag.label_consistent = _label_consistent(theta_star, x, y)
    feasible = feasible and universal.feasible
    return TeachingResult(TeachingExample(x, y), universal.xi, bool(feasible), diag)


def _nonzero_rows(pool: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(pool, axis=1)
    keep = np.flatnonzero(norms > 0)
    if keep.size < pool.shape[0]:
        warnings.warn(f"skipping {pool.shape[0] - keep.size} zero-norm pool element(s)", stacklevel=3)
    if keep.size == 0:
        raise DegenerateInputError("every pool element has zero norm")
    return keep, norms


def _closest_direction(pool: np.ndarray, d: np.ndarray) -> tuple[int, float, float]:
    """Pool index whose direction best matches +-d, its distance, and the sign."""
    keep, norms = _nonzero_rows(pool)
    units = pool[keep] / norms[keep, None]
    d_hat = d / np.linalg.norm(d)
    minus = np.linalg.norm(units - d_hat, axis=1)
    plus = np.linalg.norm(units + d_hat, axis=1)
    dist = np.minimum(minus, plus)
    j = int(np.argmin(dist))
    sgn = float(np.sign(plus[j] ** 2 - minus[j] ** 2))
    return int(keep[j]), float(dist[j]), sgn


def teach(
    teacher: Teacher,
    kind: LossKind,
    eta: float,
    theta0,
    theta_star,
    policy: LabelPolicy | None = None,
    cfg: SolverConfig = SolverConfig(),
    rng: np.random.Generator | None = None,
    exact: bool = False,
) -> TeachingResult:
    """Optimal single teaching example for the given teacher's knowledge domain.

    Combinable teachers fit generative coefficients by gradient descent
    (``cfg``/``rng``), or by a direct least-squares solve when ``exact``.
    """
    kind = LossKind.parse(kind)
    teacher = teacher if isinstance(teacher, Teacher) else Teacher(teacher)
    theta0, theta_star, d = _gap(theta0, theta_star)
    universal = universal_example(kind, eta, theta0, theta_star, policy)
    if teacher.kind is TeacherKind.COMPLETE or universal.diagnostics.already_converged:
        return universal

    pool = teacher.pool
    if pool.shape[1] != d.size:
        raise DimensionMismatchError(f"pool has dim {pool.shape[1]}, parameters have dim {d.size}")
    xu = universal.example.x
    xi = universal.xi
    diag = Diagnostics()

    if teacher.kind is TeacherKind.COMBINABLE:
        if exact:
            beta, _ = solve_least_squares(pool, xu)
            solver_hit_tol = False
        else:
            fit = gd_least_squares(pool, xu, cfg, rng)
            beta, solver_hit_tol = fit.beta, fit.converged
        x = beta @ pool
        diag.beta = beta
        gap_residual = float(np.linalg.norm(x - xu)) / abs(xi)
        feasible = solver_hit_tol or gap_residual <= TOL_SPAN * (1.0 + float(np.linalg.norm(d)))
        return _finish(kind, theta0, theta_star, universal, x, feasible, diag)

    if teacher.kind is TeacherKind.SCALABLE:
        idx, dist, sgn = _closest_direction(pool, d)
        diag.pool_index = idx
        if sgn == 0.0:
            diag.note = "selected pool element is orthogonal to the parameter gap"
            return _finish(kind, theta0, theta_star, universal, np.zeros_like(d), False, diag)
        x_dag = pool[idx]
        kappa = sgn * xi * float(np.linalg.norm(d)) / float(np.linalg.norm(x_dag))
        return _finish(kind, theta0, theta_star, universal, kappa * x_dag, dist <= TOL_DIR, diag)

    dists = np.linalg.norm(pool - xu, axis=1)
    idx = int(np.argmin(dists))
    diag.pool_index = idx
    feasible = dists[idx] <= TOL_MEM * (1.0 + float(np.linalg.norm(xu)))
    return _finish(kind, theta0, theta_star, universal, pool[idx].copy(), feasible, diag)


@dataclass
class FeasibilityReport:
    feasible: bool
    condition: str
    witness: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "condition": self.condition,
            "witness": None if self.witness is None else [float(v) for v in self.witness],
        }


def feasibility(
    teacher: Teacher,
    kind: LossKind,
    eta: float,
    theta0,
    theta_star,
    policy: LabelPolicy | None = None,
) -> FeasibilityReport:
    """Whether the teacher can emit the universal example for this learner.

    Learner-side obstructions (no real teaching scalar, inactive hinge) are
    checked first; then the pool condition for the teacher kind.
    """
    kind = LossKind.parse(kind)
    teacher = teacher if isinstance(teacher, Teacher) else Teacher(teacher)
    theta0, theta_star, d = _gap(theta0, theta_star)
    try:
        universal = universal_example(kind, eta, theta0, theta_star, policy)
    except InfeasibleScalarError as exc:
        return FeasibilityReport(False, f"no universal example: {exc}")
    if universal.diagnostics.already_converged:
        return FeasibilityReport(True, "theta0 already equals theta_star")
    if not universal.feasible:
        return FeasibilityReport(False, f"no universal example: {universal.diagnostics.note}")
    if teacher.kind is TeacherKind.COMPLETE:
        return FeasibilityReport(True, "complete teacher can emit any example", universal.example.x)

    pool = teacher.pool
    if pool.shape[1] != d.size:
        raise DimensionMismatchError(f"pool has dim {pool.shape[1]}, parameters have dim {d.size}")
    back = theta0 - theta_star

    if teacher.kind is TeacherKind.COMBINABLE:
        beta, res = solve_least_squares(pool, back)
        bound = TOL_SPAN * (1.0 + float(np.linalg.norm(back)))
        ok = res <= bound
        verdict = "in" if ok else "not in"
        return FeasibilityReport(ok, f"theta0 - theta_star {verdict} span(pool): residual {res:.3e} (bound {bound:.3e})", beta)

    if teacher.kind is TeacherKind.SCALABLE:
        idx, dist, sgn = _closest_direction(pool, back)
        ok = dist <= TOL_DIR and sgn != 0.0
        verdict = "collinear with" if ok else "not collinear with any"
        return FeasibilityReport(
            ok,
            f"theta0 - theta_star {verdict} pool element (closest index {idx}, direction distance {dist:.3e})",
            pool[idx].copy(),
        )

    xu = universal.example.x
    dists = np.linalg.norm(pool - xu, axis=1)
    idx = int(np.argmin(dists))
    bound = TOL_MEM * (1.0 + float(np.linalg.norm(xu)))
    ok = bool(dists[idx] <= bound)
    verdict = "is" if ok else "is not"
    return FeasibilityReport(
        ok,
        f"universal example {verdict} a pool element (closest index {idx}, distance {dists[idx]:.3e})",
        pool[idx].copy(),
    )


def traditional_pair(theta_star, margin: float = 1.0, threshold: bool = False) -> tuple[TeachingExample, TeachingExample]:
    """Two-example teaching set ``((x_minus, -1), (x_plus, +1))``.

    Homogeneous mode places the pair at ``+-margin`` along ``theta_star`` so
    the hyperplane bisects it. ``threshold`` mode is the 1-D threshold
    classifier, where the pair straddles the threshold value itself.
    """
    theta_star = as_vector(theta_star, "theta_star")
    if not margin > 0:
        raise ValueError("margin must be positive")
    if threshold:
        if theta_star.size != 1:
            raise DimensionMismatchError("threshold mode is one-dimensional")
        return (
            TeachingExample(theta_star - margin, -1.0),
            TeachingExample(theta_star + margin, 1.0),
        )
    norm = float(np.linalg.norm(theta_star))
    if norm == 0:
        raise DegenerateInputError("theta_star is the zero vector")
    unit = theta_star / norm
    return TeachingExample(-margin * unit, -1.0), TeachingExample(margin * unit, 1.0)
