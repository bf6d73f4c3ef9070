"""Spec files, experiment runner and command-line interface."""
from ..expr import EvaluationError, ExprSyntaxError, evaluate_expression, parse_expression
from .runner import ExperimentReport, RunAbort, run_experiments, strip_wall_time
from .spec import (
    ExperimentDecl,
    ProblemSpec,
    SpecError,
    format_problem_spec,
    parse_problem_spec,
)

__all__ = [
    "EvaluationError", "ExprSyntaxError", "evaluate_expression", "parse_expression",
    "ExperimentReport", "RunAbort", "run_experiments", "strip_wall_time",
    "ExperimentDecl", "ProblemSpec", "SpecError", "format_problem_spec", "parse_problem_spec",
]
