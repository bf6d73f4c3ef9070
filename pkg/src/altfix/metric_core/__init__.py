"""Metric spaces, self-maps, altering/comparison functions and their validators."""
from .axioms import validate_metric_axioms
from .functions import (
    AlteringFunction,
    BoundedDecayFunction,
    ComparisonFunction,
    ScalarFunction,
    as_comparison,
    default_grid,
    psi_sum,
    right_limsup,
    validate_altering,
    validate_comparison,
    validate_decay,
)
from .report import Check, ValidationReport
from .spaces import BoxSpace, FiniteSpace, MetricSpace, SelfMap, distance, real_line
from .symmetric import MValues, SymmetricE, m_functionals, m_functionals_batch, symmetric_e

__all__ = [
    "MetricSpace", "BoxSpace", "FiniteSpace", "SelfMap", "distance", "real_line",
    "ScalarFunction", "AlteringFunction", "ComparisonFunction", "BoundedDecayFunction",
    "as_comparison", "psi_sum", "default_grid", "right_limsup",
    "validate_altering", "validate_comparison", "validate_decay", "validate_metric_axioms",
    "Check", "ValidationReport", "SymmetricE", "MValues", "symmetric_e", "m_functionals",
    "m_functionals_batch",
]
