"""Wilcoxon signed-rank test with an exact null distribution for small n."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateInputError
from .ranking import rank_transform

EXACT_MAX_N = 25


@dataclass(frozen=True)
class TestResult:
    """Outcome of a two-sided signed-rank test.

    ``statistic`` is ``min(W+, W-)``; ``n`` counts the nonzero differences.
    """

    __test__ = False  # not a pytest class

    statistic: float
    p_value: float
    n: int
    w_plus: float
    w_minus: float
    method: str


def _exact_p(doubled_ranks: np.ndarray, w_plus2: int) -> float:
    """Two-sided exact p from the 2**n sign-flip distribution.

    Ranks are doubled so average-tie ranks become integers; the count of sign
    patterns with ``min(W+, W-)`` at most the observed one is accumulated
    by dynamic programming over the achievable doubled rank sums.
    """
    total = int(doubled_ranks.sum())
    dist = np.zeros(total + 1, dtype=np.int64)
    dist[0] = 1
    for r in doubled_ranks.tolist():
        shifted = np.zeros_like(dist)
        shifted[r:] = dist[: total + 1 - r]
        dist = dist + shifted
    observed = min(w_plus2, total - w_plus2)
    w = np.arange(total + 1)
    extreme = np.minimum(w, total - w) <= observed
    count = int(dist[extreme].sum())
    return count / 2 ** len(doubled_ranks)


def wilcoxon_signed_rank(diffs) -> TestResult:
    """Two-sided Wilcoxon signed-rank test on paired differences.

    Exact zeros are dropped before ranking; ties among ``|diffs|`` receive
    average ranks. For at most 25 nonzero differences the p-value comes from
    the full sign-flip distribution, otherwise from the normal approximation
    with tie and continuity corrections.
    """
    d = np.asarray(diffs, dtype=np.float64).ravel()
    if not np.all(np.isfinite(d)):
        raise ValueError("differences contain non-finite values")
    d = d[d != 0]
    if d.size == 0:
        raise DegenerateInputError("all differences are zero")
    n = d.size
    if n < 3:
        raise ValueError(f"need at least 3 nonzero differences, got {n}")
    ranks = rank_transform(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    stat = min(w_plus, w_minus)
    if n <= EXACT_MAX_N:
        doubled = np.rint(2 * ranks).astype(np.int64)
        p = _exact_p(doubled, int(round(2 * w_plus)))
        method = "exact"
    else:
        mean = n * (n + 1) / 4.0
        _, tie_counts = np.unique(np.abs(d), return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts**3 - tie_counts)) / 48.0
        z = (stat - mean + 0.5) / math.sqrt(var)
        p = float(min(1.0, 2.0 * ndtr(z)))
        method = "normal"
    return TestResult(stat, p, n, w_plus, w_minus, method)
