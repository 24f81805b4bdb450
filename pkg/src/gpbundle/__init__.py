"""Generic proximal bundle methods with complexity-bound auditing."""
from ._backend import BACKEND
from .adaptive import AdaptiveCounters, run_1c_apb, run_a_cs, run_cs_cs
from .bounds import TheoryInputs
from .engine import GpbConfig, audit_run, classify_iteration, run_gpb
from .errors import ConfigurationError, ContractViolation, OracleError, SolverFailure
from .model import (
    AggregateAffine, MultiCut, OneCut, TwoCuts, blend, check_model_condition, serious_reset, update_multi_cut,
    update_one_cut, update_two_cuts,
)
from .problem import (
    Cut, ProblemInstance, SimpleFunction, catalog, h_ball, h_box, h_l1, h_quadratic, h_sum, h_zero, linearize,
    make_benchmark, parse_instance_spec,
)
from .subproblem import brute_force_oracle, solve_model, solve_multi_cut, solve_one_cut, solve_two_cut
from .trace import IterationRow, RunRecord

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AdaptiveCounters", "run_1c_apb", "run_a_cs", "run_cs_cs", "TheoryInputs", "GpbConfig",
    "audit_run", "classify_iteration", "run_gpb", "ConfigurationError", "ContractViolation", "OracleError",
    "SolverFailure", "AggregateAffine", "MultiCut", "OneCut", "TwoCuts", "blend", "check_model_condition",
    "serious_reset", "update_multi_cut", "update_one_cut", "update_two_cuts", "Cut", "ProblemInstance",
    "SimpleFunction", "catalog", "h_ball", "h_box", "h_l1", "h_quadratic", "h_sum", "h_zero", "linearize",
    "make_benchmark", "parse_instance_spec", "brute_force_oracle", "solve_model", "solve_multi_cut",
    "solve_one_cut", "solve_two_cut", "IterationRow", "RunRecord", "__version__",
]
