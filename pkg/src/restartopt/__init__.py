"""Restarted accelerated gradient and heavy-ball methods for nonconvex problems."""

from .baselines import LineSearchConfig, run_gd, run_heuristic_ragd, run_nlcg
from .core import (
    AdaptiveParams,
    BudgetExhausted,
    DimensionMismatch,
    EvalCounter,
    LengthMismatch,
    LinearSchedule,
    NonFiniteError,
    PerturbParams,
    Problem,
    RagdParams,
    RegimeError,
    RestartOptError,
    RhbParams,
    RunResult,
    practical_params,
    theorem1_params,
    theorem3_params,
    theorem4_params,
)
from .ragd import run_ada_ragd, run_perturbed_ragd, run_ragd
from .rhb import run_ada_rhb, run_hb, run_rhb

__version__ = "0.1.0"

__all__ = [
    "AdaptiveParams", "BudgetExhausted", "DimensionMismatch", "EvalCounter",
    "LengthMismatch", "LineSearchConfig", "LinearSchedule", "NonFiniteError",
    "PerturbParams", "Problem", "RagdParams", "RegimeError", "RestartOptError",
    "RhbParams", "RunResult", "practical_params", "run_ada_ragd", "run_ada_rhb",
    "run_gd", "run_hb", "run_heuristic_ragd", "run_nlcg", "run_perturbed_ragd",
    "run_ragd", "run_rhb", "theorem1_params", "theorem3_params", "theorem4_params",
]
