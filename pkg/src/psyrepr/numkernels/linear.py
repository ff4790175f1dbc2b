"""L2-penalized linear estimators: ridge regression and logistic regression."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg as sla
from scipy import optimize
from scipy.special import expit, log_softmax, softmax

log = logging.getLogger(__name__)

GRAD_TOL = 1e-6
MAX_ITER = 1000
# Above this many parameters the multinomial solver skips exact Newton steps.
_NEWTON_MAX_PARAMS = 600


class SingleClassError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LinearModel:
    """A fitted linear probe.

    ``weights`` has shape ``(d,)`` for ridge and binary logistic models and
    ``(d, K)`` for multinomial ones. ``penalty`` is ``alpha`` for ridge and
    ``C`` (inverse penalty) for logistic kinds.
    """

    weights: np.ndarray
    intercept: float | np.ndarray
    kind: str
    penalty: float
    classes: tuple | None = None
    converged: bool = True
    n_iter: int = 0
    grad_norm: float = 0.0

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.intercept

    def predict(self, X) -> np.ndarray:
        if self.kind == "ridge":
            return self.decision_function(X)
        proba = self.predict_proba(X)
        return np.asarray(self.classes)[np.argmax(proba, axis=1)]

    def predict_proba(self, X) -> np.ndarray:
        if self.kind == "ridge":
            raise TypeError("ridge models do not produce probabilities")
        z = self.decision_function(X)
        if self.kind == "logistic-binary":
            p = expit(z)
            return np.column_stack([1.0 - p, p])
        return softmax(z, axis=1)


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise ValueError("y must be a vector with one entry per row of X")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    return X, y


# ------------------------------------------------------------------------- ridge


def _svd_weights(Xc, yc, alphas):
    U, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    uty = U.T @ yc
    tol = (s[0] if s.size else 0.0) * max(Xc.shape) * np.finfo(np.float64).eps
    out = []
    for a in alphas:
        if a == 0:
            f = np.divide(1.0, s, out=np.zeros_like(s), where=s > tol)
        else:
            f = s / (s * s + a)
        out.append(Vt.T @ (f * uty))
    return out


def ridge_path(X, y, alphas: Sequence[float]) -> list[LinearModel]:
    """Ridge fits for every alpha from one SVD of the centred design.

    Cheaper than repeated :func:`ridge_fit` calls when scanning a penalty grid.
    """
    X, y = _check_xy(X, y)
    y = y.astype(np.float64)
    if X.shape[0] < 2:
        raise ValueError("ridge needs at least 2 samples")
    xm, ym = X.mean(axis=0), y.mean()
    ws = _svd_weights(X - xm, y - ym, [float(a) for a in alphas])
    return [LinearModel(w, float(ym - xm @ w), "ridge", float(a)) for w, a in zip(ws, alphas)]


def ridge_fit(X, y, alpha: float) -> LinearModel:
    """Ridge regression with an unpenalized intercept.

    Solved in closed form on centred data: a Cholesky solve of
    ``Xc.T @ Xc + alpha * I`` when ``alpha > 0`` and ``d <= n``, an SVD
    otherwise. With ``alpha == 0`` and a rank-deficient design this returns
    the minimum-norm least-squares solution.
    """
    X, y = _check_xy(X, y)
    y = y.astype(np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    alpha = float(alpha)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    n, d = X.shape
    if n < 2:
        raise ValueError("ridge needs at least 2 samples")
    xm, ym = X.mean(axis=0), y.mean()
    Xc, yc = X - xm, y - ym
    w = None
    if alpha > 0 and d <= n:
        G = Xc.T @ Xc
        G[np.diag_indices_from(G)] += alpha
        try:
            w = sla.cho_solve(sla.cho_factor(G), Xc.T @ yc)
        except np.linalg.LinAlgError:
            w = None
    if w is None:
        w = _svd_weights(Xc, yc, [alpha])[0]
    return LinearModel(w, float(ym - xm @ w), "ridge", alpha)


# ---------------------------------------------------------------------- logistic


def _binary_objective(theta, X, y, C):
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    f = float(np.sum(np.logaddexp(0.0, z) - y * z) + (w @ w) / (2 * C))
    r = expit(z) - y
    g = np.append(X.T @ r + w / C, r.sum())
    return f, g, z


def _fit_binary(X, y01, C, max_iter, tol, init):
    n, d = X.shape
    if init is not None:
        theta = np.append(init[0], init[1]).astype(np.float64)
    else:
        prior = np.clip(y01.mean(), 1e-12, 1 - 1e-12)
        theta = np.zeros(d + 1)
        theta[-1] = np.log(prior / (1 - prior))
    Xa = np.column_stack([X, np.ones(n)])
    f, g, z = _binary_objective(theta, X, y01, C)
    it = 0
    while np.max(np.abs(g)) > tol and it < max_iter:
        it += 1
        p = expit(z)
        s = p * (1 - p)
        H = (Xa * s[:, None]).T @ Xa
        H[np.arange(d), np.arange(d)] += 1.0 / C
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                step = sla.solve(H, g, assume_a="pos")
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        t = 1.0
        slope = float(g @ step)
        while True:
            cand = theta - t * step
            fc, gc, zc = _binary_objective(cand, X, y01, C)
            if fc <= f - 1e-4 * t * slope or t < 1e-12:
                break
            t *= 0.5
        if t < 1e-12 and fc >= f:
            break
        theta, f, g, z = cand, fc, gc, zc
    return theta[:-1], float(theta[-1]), g, it


def _multi_objective(theta, X, Y, C, d, K):
    W = theta[: d * K].reshape(d, K)
    b = theta[d * K :]
    Z = X @ W + b
    logP = log_softmax(Z, axis=1)
    f = float(-np.sum(Y * logP) + np.sum(W * W) / (2 * C))
    R = np.exp(logP) - Y
    g = np.concatenate([(X.T @ R + W / C).ravel(), R.sum(axis=0)])
    return f, g


def _multi_hessian(X, P, C):
    n, d = X.shape
    K = P.shape[1]
    Xa = np.column_stack([X, np.ones(n)])
    da = d + 1
    H = np.empty((da * K, da * K))
    for k in range(K):
        for l in range(k, K):
            s = P[:, k] * ((k == l) - P[:, l])
            block = (Xa * s[:, None]).T @ Xa
            H[k * da : (k + 1) * da, l * da : (l + 1) * da] = block
            H[l * da : (l + 1) * da, k * da : (k + 1) * da] = block.T
    # reorder from per-class blocks to the (W.ravel(), b) layout
    idx = np.arange(da * K).reshape(K, da)
    perm = np.concatenate([idx[:, :d].T.ravel(), idx[:, d]])
    H = H[np.ix_(perm, perm)]
    H[np.arange(d * K), np.arange(d * K)] += 1.0 / C
    return H


def _fit_multinomial(X, yidx, K, C, max_iter, tol, init):
    n, d = X.shape
    Y = np.zeros((n, K))
    Y[np.arange(n), yidx] = 1.0
    if init is not None:
        theta = np.concatenate([np.asarray(init[0]).ravel(), np.asarray(init[1])])
    else:
        freq = np.clip(Y.mean(axis=0), 1e-12, None)
        theta = np.concatenate([np.zeros(d * K), np.log(freq) - np.log(freq).mean()])

    def fun(t):
        return _multi_objective(t, X, Y, C, d, K)

    res = optimize.minimize(
        fun,
        theta,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": tol, "ftol": 0.0, "maxcor": 20},
    )
    theta = res.x
    f, g = fun(theta)
    it = int(res.nit)
    if np.max(np.abs(g)) > tol and (d + 1) * K <= _NEWTON_MAX_PARAMS:
        while np.max(np.abs(g)) > tol and it < max_iter:
            it += 1
            W = theta[: d * K].reshape(d, K)
            P = softmax(X @ W + theta[d * K :], axis=1)
            H = _multi_hessian(X, P, C)
            step = np.linalg.lstsq(H, g, rcond=None)[0]
            t, slope = 1.0, float(g @ step)
            while True:
                cand = theta - t * step
                fc, gc = fun(cand)
                if fc <= f - 1e-4 * t * slope or t < 1e-12:
                    break
                t *= 0.5
            if t < 1e-12 and fc >= f:
                break
            theta, f, g = cand, fc, gc
    W = theta[: d * K].reshape(d, K)
    b = theta[d * K :]
    return W, b - b.mean(), g, it


def logistic_fit(
    X,
    y,
    C: float,
    classes: Sequence | None = None,
    max_iter: int = MAX_ITER,
    tol: float = GRAD_TOL,
    init=None,
) -> LinearModel:
    """L2-penalized logistic regression.

    Maximizes ``sum(log-likelihood) - ||weights||**2 / (2 * C)``; intercepts
    are not penalized. Two classes use the binary (sigmoid) model fitted by
    Newton's method; more classes use the multinomial softmax model fitted by
    L-BFGS, finished with Newton steps when the problem is small.

    Iteration stops once the gradient max-norm is at most ``tol`` or after
    ``max_iter`` iterations. Non-convergence is reported through
    ``LinearModel.converged`` rather than raised.

    Parameters
    ----------
    classes : sequence, optional
        Class labels defining the probability columns. Defaults to the sorted
        unique values of ``y``. Every listed class must occur in ``y``.
    init : tuple (weights, intercept), optional
        Warm start.
    """
    X, y = _check_xy(X, y)
    C = float(C)
    if not C > 0:
        raise ValueError("C must be positive")
    classes = tuple(np.unique(y).tolist()) if classes is None else tuple(classes)
    present = set(np.unique(y).tolist())
    if len(present) < 2:
        raise SingleClassError("logistic regression needs at least two classes present")
    unknown = present - set(classes)
    if unknown:
        raise ValueError(f"labels {sorted(unknown)} not among classes")
    missing = set(classes) - present
    if missing:
        raise SingleClassError(f"classes {sorted(missing)} have no samples")
    K = len(classes)
    if X.shape[0] < K:
        raise ValueError("fewer samples than classes")
    lookup = {c: i for i, c in enumerate(classes)}
    yidx = np.fromiter((lookup[v] for v in y.tolist()), dtype=np.intp, count=y.size)

    if K == 2:
        w, b, g, it = _fit_binary(X, yidx.astype(np.float64), C, max_iter, tol, init)
        kind = "logistic-binary"
    else:
        w, b, g, it = _fit_multinomial(X, yidx, K, C, max_iter, tol, init)
        kind = "logistic-multinomial"
    gnorm = float(np.max(np.abs(g)))
    converged = gnorm <= tol
    if not converged:
        log.debug("logistic fit stopped at gradient max-norm %.3g (C=%g)", gnorm, C)
    return LinearModel(w, b, kind, C, classes, converged, it, gnorm)

