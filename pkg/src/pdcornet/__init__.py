"""Nonlinear edge detection with partial distance correlations."""

from .classical import (
    partial_correlation,
    partial_correlation_test,
    pearson,
    rank_transform,
)
from .datagen import DGPSpec, condition_grid, generate
from .dependence import (
    dcor2,
    dcov2,
    double_center,
    dvar2,
    pairwise_distances,
    pdcor,
    pdcor_permutation_test,
    r_star,
    u_center,
)
from .infotheory import cmi, cmi_permutation_test, discretize, entropy, joint_entropy
from .pipeline import EdgeDecision, center, detect_edges, preprocess_network, residualize
from .records import TestResult

__version__ = "0.1.0"

__all__ = [
    "DGPSpec", "EdgeDecision", "TestResult",
    "center", "cmi", "cmi_permutation_test", "condition_grid", "dcor2", "dcov2",
    "detect_edges", "discretize", "double_center", "dvar2", "entropy", "generate",
    "joint_entropy", "pairwise_distances", "partial_correlation",
    "partial_correlation_test", "pdcor", "pdcor_permutation_test", "pearson",
    "preprocess_network", "r_star", "rank_transform", "residualize", "u_center",
]
