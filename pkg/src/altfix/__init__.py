"""altfix: fixed-point solver and verifier for altering-metric contractions."""
from .cauchy import (
    RankSequenceResult,
    SequencePrefix,
    extract_rank_sequences,
    geometric_prefix,
    harmonic_prefix,
    is_cauchy,
    is_semi_cauchy,
    verify_prop1_trends,
)
from .certificates import (
    CertificateReport,
    check_abc_contraction,
    check_altering_contraction,
    check_banach,
    check_theorem5,
    check_weak_contraction,
)
from .errors import (
    AltfixError,
    DomainError,
    ExtractionError,
    ParameterError,
    PreconditionError,
)
from .iteration import (
    IterationTrace,
    PicardClassification,
    apriori_error_bound,
    classify_picard,
    geometric_rate,
    iterations_needed,
    picard_orbit,
)
from .metric_core import (
    AlteringFunction,
    BoundedDecayFunction,
    BoxSpace,
    ComparisonFunction,
    FiniteSpace,
    MetricSpace,
    SelfMap,
    SymmetricE,
    distance,
    m_functionals,
    real_line,
    symmetric_e,
    validate_altering,
    validate_comparison,
    validate_metric_axioms,
)
from .stability import StabilityVerdict, estimate_mu, hyers_ulam_probe, local_global_bound

__version__ = "0.1.0"
