"""Average-tie ranks and Spearman correlation."""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateInputError


def _as_finite_vector(x, what: str = "input") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError(f"{what} is empty")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{what} contains non-finite values")
    return x


def rank_transform(x) -> np.ndarray:
    """Ranks ``1..n``; tied values share the mean of the ranks they span.

    >>> rank_transform([5, 5, 1])
    array([2.5, 2.5, 1. ])
    """
    x = _as_finite_vector(x)
    n = x.size
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    new_group = np.empty(n, dtype=bool)
    new_group[0] = True
    np.not_equal(xs[1:], xs[:-1], out=new_group[1:])
    starts = np.flatnonzero(new_group)
    ends = np.append(starts[1:], n)
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = np.repeat((starts + ends + 1) / 2.0, ends - starts)
    return ranks


def searchsorted_ranks(sorted_values: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Average-tie ranks of ``values`` within the already sorted population.

    Gives the same numbers as :func:`rank_transform` on the full population,
    but only needs the sorted copy plus the chunk being ranked.
    """
    lo = np.searchsorted(sorted_values, values, side="left")
    hi = np.searchsorted(sorted_values, values, side="right")
    return (lo + hi + 1) / 2.0


def centered_rank_pearson(ra: np.ndarray, rb: np.ndarray) -> float:
    """Pearson correlation of two full rank vectors of equal length."""
    n = ra.size
    mid = (n + 1) / 2.0
    a = ra - mid
    b = rb - mid
    sxx = float(a @ a)
    syy = float(b @ b)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInputError("constant input: correlation undefined")
    r = float(a @ b) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def spearman(x, y) -> float:
    """Spearman rank correlation (Pearson correlation of average-tie ranks)."""
    x = _as_finite_vector(x, "x")
    y = _as_finite_vector(y, "y")
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 3:
        raise ValueError("spearman needs at least 3 observations")
    return centered_rank_pearson(rank_transform(x), rank_transform(y))
