import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from psyrepr.numkernels import (
    DegenerateInputError,
    SingleClassError,
    classical_mds,
    logistic_fit,
    mcfadden_pseudo_r2,
    r2_score,
    rank_transform,
    ridge_fit,
    ridge_path,
    spearman,
    truncated_svd,
    wilcoxon_signed_rank,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


# ------------------------------------------------------------------ ranking


def test_rank_examples():
    assert rank_transform([10, 20, 30]).tolist() == [1, 2, 3]
    assert rank_transform([5, 5, 1]).tolist() == [2.5, 2.5, 1]
    assert rank_transform([7]).tolist() == [1]
    with pytest.raises(ValueError):
        rank_transform([1.0, math.nan])


def test_spearman_examples():
    assert spearman([1, 2, 3], [1, 4, 9]) == 1.0
    assert spearman([1, 2, 3], [3, 1, 2]) == pytest.approx(-0.5, abs=1e-15)
    assert spearman([0, 0.707, 0.707], [1, 0, 0]) == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(DegenerateInputError):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        spearman([1, 2], [1, 2])


@given(st.lists(st.tuples(finite, finite), min_size=3, max_size=30))
def test_spearman_symmetric(pairs):
    x, y = map(np.array, zip(*pairs))
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return
    assert spearman(x, y) == spearman(y, x)


@given(st.lists(finite, min_size=3, max_size=30, unique=True))
def test_spearman_monotone_is_one(x):
    x = np.array(x)
    y = np.empty_like(x)
    y[np.argsort(x)] = np.arange(len(x)) ** 2 + 0.5
    assert spearman(x, y) == 1.0


# ------------------------------------------------------------------ svd


def test_svd_examples():
    _, s, _ = truncated_svd(np.array([[2.0, 0.0], [0.0, 0.0]]), 1)
    assert s.tolist() == [2.0]
    _, s, _ = truncated_svd(np.eye(3), 3)
    np.testing.assert_allclose(s, [1, 1, 1], atol=1e-15)
    with pytest.raises(ValueError):
        truncated_svd(np.eye(3), 4)


def test_svd_exact_rank_and_orthonormality():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((8, 3)) @ rng.standard_normal((3, 6))
    U, s, Vt = truncated_svd(A, 3)
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    np.testing.assert_allclose(U.T @ U, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(Vt @ Vt.T, np.eye(3), atol=1e-10)
    assert np.linalg.norm(U * s @ Vt - A) <= 1e-8 * np.linalg.norm(A)


def test_svd_best_rank_k():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((10, 7))
    U, s, Vt = truncated_svd(A, 2)
    full = np.linalg.svd(A, compute_uv=False)
    assert np.linalg.norm(A - U * s @ Vt) == pytest.approx(math.sqrt((full[2:] ** 2).sum()), rel=1e-12)


# ------------------------------------------------------------------ ridge


def test_ridge_examples():
    X, y = np.array([[1.0], [2.0]]), np.array([1.0, 2.0])
    m = ridge_fit(X, y, 0.0)
    assert m.weights[0] == pytest.approx(1.0, abs=1e-14) and m.intercept == pytest.approx(0.0, abs=1e-14)
    m = ridge_fit(X, y, 0.5)
    assert m.weights[0] == pytest.approx(0.5, abs=1e-14) and m.intercept == pytest.approx(0.75, abs=1e-14)
    m = ridge_fit(X, y, 1e9)
    assert abs(m.weights[0]) < 1e-9
    np.testing.assert_allclose(m.predict(X), 1.5, atol=1e-8)


def test_ridge_least_squares_and_min_norm():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((30, 4))
    y = rng.standard_normal(30)
    m = ridge_fit(X, y, 0.0)
    A = np.column_stack([X, np.ones(30)])
    sol = np.linalg.lstsq(A, y, rcond=None)[0]
    np.testing.assert_allclose(m.weights, sol[:4], atol=1e-8)
    # rank deficient: duplicated column -> weights split evenly (minimum norm)
    Xd = np.column_stack([X[:, 0], X[:, 0]])
    md = ridge_fit(Xd, y, 0.0)
    assert md.weights[0] == pytest.approx(md.weights[1], abs=1e-10)


def test_ridge_weight_norm_non_increasing():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((20, 30))
    y = rng.standard_normal(20)
    alphas = np.logspace(-5, 5, 11)
    norms = [np.linalg.norm(m.weights) for m in ridge_path(X, y, alphas)]
    assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))
    for alpha, m in zip(alphas, ridge_path(X, y, alphas)):
        np.testing.assert_allclose(m.weights, ridge_fit(X, y, alpha).weights, atol=1e-8)


def test_ridge_rejects_non_finite():
    with pytest.raises(ValueError):
        ridge_fit(np.array([[1.0], [math.inf]]), np.array([1.0, 2.0]), 1.0)


# ------------------------------------------------------------------ logistic


def _independent_gradient(X, y, model, C):
    """Gradient of the penalized negative log-likelihood, written out directly."""
    K = len(model.classes)
    Y = np.zeros((len(y), K))
    Y[np.arange(len(y)), np.searchsorted(model.classes, y)] = 1.0
    if model.kind == "logistic-binary":
        z = X @ model.weights + model.intercept
        p = 1 / (1 + np.exp(-z))
        r = p - Y[:, 1]
        return np.concatenate([X.T @ r + model.weights / C, [r.sum()]])
    Z = X @ model.weights + model.intercept
    Z -= Z.max(axis=1, keepdims=True)
    P = np.exp(Z) / np.exp(Z).sum(axis=1, keepdims=True)
    R = P - Y
    return np.concatenate([(X.T @ R + model.weights / C).ravel(), R.sum(axis=0)])


def test_logistic_separable():
    X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    y = np.array([0, 0, 1, 1])
    m = logistic_fit(X, y, 1.0)
    assert np.all(m.predict(X) == y)


def test_logistic_intercept_only():
    X = np.zeros((6, 2))
    y = np.array([0, 0, 0, 0, 1, 1])
    m = logistic_fit(X, y, 1.0)
    np.testing.assert_allclose(m.predict_proba(X), np.tile([4 / 6, 2 / 6], (6, 1)), atol=1e-7)


def test_logistic_multinomial_rows_sum_to_one():
    rng = np.random.default_rng(4)
    y = np.repeat([0, 1, 2], 10)
    X = np.eye(3)[y] + 0.3 * rng.standard_normal((30, 3))
    m = logistic_fit(X, y, 1.0)
    assert m.kind == "logistic-multinomial"
    np.testing.assert_allclose(m.predict_proba(X).sum(axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("K", [2, 3, 4])
@pytest.mark.parametrize("C", [1e-3, 1.0, 1e3])
def test_logistic_gradient_at_optimum(K, C):
    rng = np.random.default_rng(K * 10 + int(math.log10(C)) + 5)
    X = rng.standard_normal((60, 5))
    y = rng.integers(0, K, 60)
    y[:K] = np.arange(K)
    m = logistic_fit(X, y, C)
    assert m.converged
    assert np.abs(_independent_gradient(X, y, m, C)).max() <= 1e-5


def test_logistic_single_class():
    with pytest.raises(SingleClassError):
        logistic_fit(np.ones((3, 1)), np.array([1, 1, 1]), 1.0)


# ------------------------------------------------------------------ scores


def test_r2_examples():
    y = np.array([1.0, 2.0, 3.0])
    assert r2_score(y, y) == 1.0
    assert r2_score(y, np.full(3, 2.0)) == 0.0
    assert r2_score(y, y[::-1]) == -3.0
    with pytest.raises(DegenerateInputError):
        r2_score([1.0, 1.0], [1.0, 2.0])


def test_mcfadden_examples():
    y = np.array([1, 0, 1, 0])
    assert mcfadden_pseudo_r2(y, np.full(4, 0.5), 0.5) == 0.0
    value = mcfadden_pseudo_r2(y, np.array([0.75, 0.25, 0.75, 0.25]), 0.5)
    assert value == pytest.approx(1 - math.log(0.75) / math.log(0.5), abs=1e-12)
    assert value == pytest.approx(0.58496, abs=5e-6)
    one_hot = np.eye(2)[y]
    assert mcfadden_pseudo_r2(y, one_hot, [0.5, 0.5]) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        mcfadden_pseudo_r2(np.array([2]), np.array([[0.5, 0.5]]), [0.5, 0.5])


@given(arrays(np.float64, (6, 3), elements=st.floats(0.01, 1.0)))
def test_mcfadden_at_most_one(raw):
    p = raw / raw.sum(axis=1, keepdims=True)
    y = np.array([0, 1, 2, 0, 1, 2])
    assert mcfadden_pseudo_r2(y, p, [1 / 3] * 3) <= 1.0


# ------------------------------------------------------------------ mds


def _distances(Y):
    return np.sqrt(((Y[:, None, :] - Y[None, :, :]) ** 2).sum(-1))


def test_mds_examples():
    assert np.all(classical_mds(np.zeros((3, 3)), 2) == 0)
    two = classical_mds(np.array([[0.0, 2.0], [2.0, 0.0]]), 1).ravel()
    assert sorted(two.tolist()) == pytest.approx([-1.0, 1.0], abs=1e-12)
    tri = classical_mds(1 - np.eye(3), 2)
    off = _distances(tri)[~np.eye(3, dtype=bool)]
    np.testing.assert_allclose(off, 1.0, atol=1e-9)
    with pytest.raises(ValueError):
        classical_mds(np.zeros((2, 2)), 3)


@settings(deadline=None)
@given(arrays(np.float64, (7, 3), elements=st.floats(-10, 10)))
def test_mds_reproduces_distances(P):
    D = _distances(P)
    Y = classical_mds(D, 3)
    np.testing.assert_allclose(_distances(Y), D, atol=1e-8 * max(1.0, D.max()))
    np.testing.assert_allclose(Y.mean(axis=0), 0, atol=1e-9 * max(1.0, D.max()))


# ------------------------------------------------------------------ wilcoxon


def _enumerate(d):
    ranks = rank_transform(np.abs(d))
    total = ranks.sum()
    obs = min(ranks[d > 0].sum(), ranks[d < 0].sum())
    hits = sum(
        1 for s in itertools.product((0, 1), repeat=len(d))
        if min(w := float(ranks[np.array(s, bool)].sum()), total - w) <= obs
    )
    return hits / 2 ** len(d)


def test_wilcoxon_examples():
    r = wilcoxon_signed_rank([1, 2, 3, 4, 5])
    assert (r.w_minus, r.statistic, r.p_value, r.method) == (0.0, 0.0, 0.0625, "exact")
    assert wilcoxon_signed_rank([1, 2, 3]).p_value == 0.25
    assert wilcoxon_signed_rank([1, -1, 2, -2]).p_value == 1.0
    with pytest.raises(DegenerateInputError):
        wilcoxon_signed_rank([0, 0, 0])


def test_wilcoxon_drops_zeros():
    r = wilcoxon_signed_rank([0, 1, 2, 3])
    assert r.n == 3 and r.p_value == 0.25


@given(st.lists(st.integers(-5, 5).filter(bool), min_size=3, max_size=10))
def test_wilcoxon_exact_matches_enumeration(d):
    d = np.array(d, dtype=float)
    assert wilcoxon_signed_rank(d).p_value == _enumerate(d)


def test_wilcoxon_normal_approximation():
    rng = np.random.default_rng(5)
    d = rng.standard_normal(40) + 0.3
    r = wilcoxon_signed_rank(d)
    assert r.method == "normal" and 0 <= r.p_value <= 1
    from scipy.stats import wilcoxon

    ref = wilcoxon(d, correction=True, method="approx")
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-10)
