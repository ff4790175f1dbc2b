"""Goodness-of-fit scores for probe predictions."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInputError

PROB_CLIP = 1e-12


def r2_score(y, y_hat) -> float:
    """Coefficient of determination ``1 - SS_res / SS_tot``; may be negative."""
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if y.size != y_hat.size:
        raise ValueError("length mismatch")
    if y.size < 2:
        raise ValueError("r2_score needs at least 2 samples")
    resid = y - y_hat
    dev = y - y.mean()
    ss_tot = float(dev @ dev)
    if ss_tot == 0.0:
        raise DegenerateInputError("constant target: R^2 undefined")
    return 1.0 - float(resid @ resid) / ss_tot


def _label_log_prob(y, p, what):
    y = np.asarray(y)
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.mod(y, 1) == 0):
            raise ValueError("labels must be integer column indices")
        y = y.astype(np.int64)
    p = np.asarray(p, dtype=np.float64)
    if p.ndim == 1 and p.shape[0] == y.shape[0]:
        # a single column is read as P(class 1) of a binary problem
        p = np.column_stack([1.0 - p, p])
    if p.ndim == 1:
        p = np.broadcast_to(p, (y.shape[0], p.shape[0]))
    if p.shape[0] != y.shape[0]:
        raise ValueError(f"{what}: row count does not match labels")
    if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError(f"{what}: rows must sum to 1")
    if y.size and (y.min() < 0 or y.max() >= p.shape[1]):
        raise ValueError(f"label outside the {p.shape[1]} probability columns")
    chosen = p[np.arange(y.shape[0]), y]
    return np.log(np.clip(chosen, PROB_CLIP, 1.0 - PROB_CLIP))


def mcfadden_pseudo_r2(y, p_hat, p_null) -> float:
    """McFadden's pseudo-R^2, ``1 - LL_model / LL_null``.

    Parameters
    ----------
    y : array_like of int
        Class indices into the probability columns.
    p_hat : array_like, shape (n, K) or (n,)
        Model probabilities; a vector is taken as P(class 1) for binary data.
    p_null : array_like, shape (K,) or (n, K)
        Probabilities of an intercept-only model (typically training-set class
        frequencies).
    """
    ll_model = float(np.sum(_label_log_prob(y, p_hat, "p_hat")))
    p_null = np.asarray(p_null, dtype=np.float64)
    if p_null.ndim == 0:
        p_null = np.array([1.0 - p_null, p_null])
    ll_null = float(np.sum(_label_log_prob(y, p_null, "p_null")))
    if ll_null == 0.0:
        raise DegenerateInputError("null log-likelihood is zero")
    return 1.0 - ll_model / ll_null
