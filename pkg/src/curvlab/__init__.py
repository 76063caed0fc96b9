"""Numerical curvature lab for pseudo-Riemannian metrics and algebraic curvature models."""
from . import curvature, expr, families, linalg, models, videv
from .curvature import CurvatureData, DomainCondition, MetricChart, curvature_at, sample_points
from .errors import (
    ConfigError, CurvlabError, DegenerateMetricError, DomainError, EvaluationError,
    ExprSyntaxError, IndeterminateVerdictError, ModelError, NotEinsteinError,
)
from .expr import Jet3, ScalarExpr, eval_jet, evaluate, parse_expr, to_string
from .linalg import SpectralProfile, spectral_profile
from .models import Model, canonical_model, double_model, model_at, random_model
from .videv import PropertyResult, property_report

__version__ = "0.1.0"
