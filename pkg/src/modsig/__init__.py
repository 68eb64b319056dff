"""Significance testing for covariate-defined modularity under a degree-based null."""

__version__ = "0.1.0"

from .edge_models import EdgeModel, Family
from .errors import ConvergenceError, DegenerateTestError, GraphError, ModelError, ModsigError, ParseError
from .fitting import compare_models, fit_edge_model, log_likelihood
from .graph import CommunityAssignment, Graph, build_graph
from .io import read_covariates, read_edge_list, read_gml
from .modtest import (
    ModularityReport,
    TestOptions,
    bias_hat,
    modularity_hat,
    p_value,
    significance_test,
    variance_hat,
)
from .nullmodel import ModsigWarning, PiVector, check_assumptions, degree_moments, estimate_pi
from .sim import bootstrap, sample_graph

__all__ = [
    "CommunityAssignment",
    "ConvergenceError",
    "DegenerateTestError",
    "EdgeModel",
    "Family",
    "Graph",
    "GraphError",
    "ModelError",
    "ModsigError",
    "ModsigWarning",
    "ModularityReport",
    "ParseError",
    "PiVector",
    "TestOptions",
    "bias_hat",
    "bootstrap",
    "build_graph",
    "check_assumptions",
    "compare_models",
    "degree_moments",
    "estimate_pi",
    "fit_edge_model",
    "log_likelihood",
    "modularity_hat",
    "p_value",
    "read_covariates",
    "read_edge_list",
    "read_gml",
    "sample_graph",
    "significance_test",
    "variance_hat",
]
