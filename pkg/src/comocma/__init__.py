"""Cooperative multiobjective optimization: p CMA-ES kernels maximize the
hypervolume of their incumbent set through uncrowded hypervolume
improvement fitness, plus a convex-quadratic benchmark suite and an
experiment harness."""

from ._backend import BACKEND
from .cma import Candidate, CmaEs, CmaParams, ProtocolError
from .harness import (GapOffsets, OffsetStore, RunRecord, RunRecorder,
                      linear_fit_rate, nondominated_ratios,
                      optimal_incumbent_hypervolume, problem_key)
from .hv import (InsertReport, ObjectivePair, ParetoFront, ReferencePoint,
                 UhviBranch, UhviValue, dominates, weakly_dominates)
from .problems import (BiObjectiveProblem, QuadForm, make_diagonal,
                       make_problem, problem_name, random_orthogonal,
                       true_front_value)
from .sofomore import PermutationScheduler, Sofomore

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BiObjectiveProblem",
    "Candidate",
    "CmaEs",
    "CmaParams",
    "GapOffsets",
    "InsertReport",
    "ObjectivePair",
    "OffsetStore",
    "ParetoFront",
    "PermutationScheduler",
    "ProtocolError",
    "QuadForm",
    "ReferencePoint",
    "RunRecord",
    "RunRecorder",
    "Sofomore",
    "UhviBranch",
    "UhviValue",
    "dominates",
    "linear_fit_rate",
    "make_diagonal",
    "make_problem",
    "nondominated_ratios",
    "optimal_incumbent_hypervolume",
    "problem_key",
    "problem_name",
    "random_orthogonal",
    "true_front_value",
    "weakly_dominates",
    "__version__",
]
