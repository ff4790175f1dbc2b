import numpy as np
import pytest

from psyrepr.ensemble import (
    CategoryDiff,
    DiffReport,
    EnsembleSpec,
    concatenate,
    ensemble_rca,
    paired_difference_report,
)
from psyrepr.rca import ContentProfile, ProbeConfig, ProbeResult
from psyrepr.store import NormTable, Representation, VocabSet


def _words(n):
    return [f"w{i:04d}" for i in range(n)]


def _rep(name, M, data_type="text", words=None):
    return Representation.from_rows(name, data_type, words or _words(M.shape[0]), M)


def test_spec_validation():
    assert EnsembleSpec(("a", "b")).label == "a & b"
    with pytest.raises(ValueError):
        EnsembleSpec(("a",))
    with pytest.raises(ValueError):
        EnsembleSpec(("a", "a"))
    with pytest.raises(ValueError):
        EnsembleSpec(("a", "b"), block_scaling="pca")


def test_concatenate_dims_and_zscore():
    rng = np.random.default_rng(0)
    a = _rep("a", rng.standard_normal((10, 2)) * 5 + 3)
    b = _rep("b", np.column_stack([rng.standard_normal((10, 2)), np.ones(10)]), "behavior")
    both = concatenate([a, b], a.vocab)
    assert both.dim == 5 and both.data_type == "text"
    assert np.abs(both.matrix.mean(axis=0)).max() <= 1e-12
    np.testing.assert_allclose(both.matrix[:, :4].std(axis=0), 1.0, atol=1e-12)
    assert np.all(both.matrix[:, 4] == 0)
    raw = concatenate([a, b], a.vocab, "none")
    np.testing.assert_array_equal(raw.matrix[:, :2], a.matrix)
    with pytest.raises(ValueError):
        concatenate([a, _rep("c", np.ones((3, 1)))], a.vocab)


def test_concatenate_self_fit_not_worse():
    rng = np.random.default_rng(1)
    a = _rep("a", rng.standard_normal((40, 3)))
    y = rng.standard_normal(40)
    from psyrepr.numkernels import ridge_fit

    def resid(X):
        return float(((y - ridge_fit(X, y, 1.0).predict(X)) ** 2).sum())

    assert resid(concatenate([a, a.renamed("a2")], a.vocab, "none").matrix) <= resid(a.matrix) + 1e-12


def _planted(seed=2, n=400):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, 5))
    B = rng.standard_normal((n, 5))
    reps = {"A": _rep("A", A), "B": _rep("B", B, "behavior")}
    return rng, A, B, reps


def test_ensemble_a_only_and_two_block():
    rng, A, B, reps = _planted()
    words = VocabSet(_words(400))
    y_a = A @ rng.standard_normal(5) + 0.5 * rng.standard_normal(400)
    y_ab = A @ rng.standard_normal(5) + B @ rng.standard_normal(5) + 0.5 * rng.standard_normal(400)
    norms = [NormTable("a_only", "X", "numeric", words, y_a), NormTable("both", "X", "numeric", words, y_ab)]
    res = ensemble_rca([EnsembleSpec(("A", "B"))], reps, norms)
    s = {k: p.mean_scores() for k, p in res.profiles.items()}
    assert list(res.profiles) == ["A", "B", "A & B"]
    assert abs(s["A & B"]["a_only"] - s["A"]["a_only"]) <= 0.03
    assert s["A & B"]["both"] - max(s["A"]["both"], s["B"]["both"]) >= 0.05
    hashes = {p.scores["both"].fold_hash for p in res.profiles.values()}
    assert len(hashes) == 1


def test_ensemble_same_spec_twice_identical():
    rng, A, B, reps = _planted(3, 200)
    norm = NormTable("n", "X", "numeric", VocabSet(_words(200)), A[:, 0] + rng.standard_normal(200))
    spec = EnsembleSpec(("A", "B"))
    cfg = ProbeConfig(alphas=(0.1, 10.0))
    r1 = ensemble_rca([spec], reps, [norm], cfg)
    r2 = ensemble_rca([spec, spec], reps, [norm], cfg)
    assert r1.profiles["A & B"] == r2.profiles["A & B"]


def test_ensemble_vocabulary_too_small():
    rng = np.random.default_rng(4)
    reps = {"A": _rep("A", rng.standard_normal((150, 2))), "B": _rep("B", rng.standard_normal((90, 2)))}
    norm = NormTable("n", "X", "numeric", VocabSet(_words(150)), rng.standard_normal(150))
    with pytest.raises(ValueError, match="at least 100"):
        ensemble_rca([EnsembleSpec(("A", "B"))], reps, [norm])
    with pytest.raises(KeyError):
        ensemble_rca([EnsembleSpec(("A", "Z"))], reps, [norm])


def _profile(name, means):
    return ContentProfile(
        name, {n: ProbeResult(name, n, "", "numeric", 100, (m,), (1.0,)) for n, m in means.items()}
    )


def test_diff_report_examples():
    cats = {f"n{i}": "X" for i in range(5)} | {"m0": "Y", "m1": "Y"}
    base = {n: 0.3 for n in cats}
    same = paired_difference_report(_profile("a", base), _profile("b", base), cats)
    assert all(r.median_diff == 0 and not r.significant for r in same.rows)
    up = dict(base)
    for n, d in zip(["n0", "n1", "n2", "n3", "n4"], [0.1, 0.1, 0.2, 0.05, 0.15]):
        up[n] = 0.3 + d
    up["m0"], up["m1"] = 0.4, 0.5
    rep = paired_difference_report(_profile("a", up), _profile("b", base), cats)
    x = rep.row("X")
    assert x.median_diff == pytest.approx(0.1, abs=1e-12) and x.p_value == 0.0625 and x.n_norms == 5
    y = rep.row("Y")
    assert y.p_value is None and y.median_diff == pytest.approx(0.15)
    flipped = paired_difference_report(_profile("b", base), _profile("a", up), cats)
    assert flipped.row("X").median_diff == pytest.approx(-x.median_diff, abs=1e-15)
    assert flipped.row("X").p_value == x.p_value


def test_diff_report_mismatched_norms():
    with pytest.raises(ValueError):
        paired_difference_report(_profile("a", {"n": 0.1}), _profile("b", {"m": 0.1}), {"n": "X", "m": "X"})


def test_diff_report_exports():
    rep = paired_difference_report(
        _profile("a", {f"n{i}": 0.1 * i for i in range(4)}), _profile("b", {f"n{i}": 0.0 for i in range(4)}),
        {f"n{i}": "X" for i in range(4)},
    )
    assert rep.to_csv().splitlines()[0] == "category,n_norms,median_diff,wilcoxon_stat,p_value"
    back = DiffReport.from_dict(rep.to_dict())
    assert back.row("X").p_value == rep.row("X").p_value
    assert isinstance(back.rows[0], CategoryDiff)
