"""Deformed exponential families, escort distributions and generalized Cramer-Rao bounds."""

from .entropy import (
    DivergenceValue,
    divergence,
    entropy_derivative_residual,
    information_content,
    lemma1_residual,
    maxent_check,
    metric_from_divergence,
)
from .errors import (
    DivergentIntegral,
    DivergentMoment,
    DomainError,
    NonPositiveInput,
    OutsideDomain,
    PhiFamError,
    SingularMetric,
    SpaceMismatch,
    SupportMismatch,
    ZeroDenominator,
)
from .family import (
    EscortPair,
    Estimator,
    PhiFamily,
    curl_residual,
    escort_at,
    escort_condition_residual,
    pdf_at,
    solve_G,
    zet,
)
from .geometry import (
    DualPoint,
    InfoMatrix,
    classical_crb_sides,
    crb_sides,
    dual_coordinates,
    duality_residuals,
    fisher_matrix,
    g_matrix,
    legendre_residual,
    legendre_sweep,
    project,
    regularity_residual,
    score,
)
from .kernel import DeformedCalculus, Deformer, chi, exp_phi, ln_phi, psi, range_bounds
from .measure import MeasureSpace, Pdf, RandomVariable, expectation, normalization_residual

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
