"""Single-example teaching of gradient-descent linear learners."""
from .errors import (
    ConfigError,
    DegenerateInputError,
    DimensionMismatchError,
    InfeasibleScalarError,
    NoSignChangeError,
    StepSizeTooLargeError,
    TeachingError,
)
from .learner import LearnerSpec, LearnerState, LossKind, TeachingExample, gd_step, train
from .numerics import RngStream, SolverConfig
from .teacher import (
    LabelPolicy,
    Teacher,
    TeacherKind,
    TeachingResult,
    feasibility,
    teach,
    teaching_scalar,
    universal_example,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateInputError",
    "DimensionMismatchError",
    "InfeasibleScalarError",
    "LabelPolicy",
    "LearnerSpec",
    "LearnerState",
    "LossKind",
    "NoSignChangeError",
    "RngStream",
    "SolverConfig",
    "StepSizeTooLargeError",
    "Teacher",
    "TeacherKind",
    "TeachingError",
    "TeachingExample",
    "TeachingResult",
    "feasibility",
    "gd_step",
    "teach",
    "teaching_scalar",
    "train",
    "universal_example",
]
