"""Numeric kernels shared by the analysis modules."""

from .decomp import classical_mds, truncated_svd
from .errors import ConvergenceError, DegenerateInputError
from .linear import LinearModel, SingleClassError, logistic_fit, ridge_fit, ridge_path
from .ranking import rank_transform, spearman
from .scoring import mcfadden_pseudo_r2, r2_score
from .stats import TestResult, wilcoxon_signed_rank

__all__ = [
    "ConvergenceError",
    "DegenerateInputError",
    "LinearModel",
    "SingleClassError",
    "TestResult",
    "classical_mds",
    "logistic_fit",
    "mcfadden_pseudo_r2",
    "r2_score",
    "rank_transform",
    "ridge_fit",
    "ridge_path",
    "spearman",
    "truncated_svd",
    "wilcoxon_signed_rank",
]
