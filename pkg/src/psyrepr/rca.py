"""Representational content analysis: nested cross-validated linear probes.

Each representation is probed against each norm with an L2-penalized linear
model (ridge for numeric norms, logistic regression for categorical ones).
The penalty is chosen in an inner cross-validation loop and the probe is
scored on held-out outer folds, giving one (pseudo-)R^2 per outer fold.

Fold assignment
---------------
Folds are deterministic functions of the seed. For ``n`` samples and ``k``
folds a permutation ``perm = default_rng(seed).permutation(n)`` is drawn and
sample ``perm[j]`` goes to fold ``j % k``. For categorical targets the
permuted samples are stably grouped by class (ascending class id) before the
round-robin, which spreads every class evenly. Outer folds use ``seed``;
the inner split of outer fold ``f`` uses ``default_rng([seed, f + 1])`` on
the outer-training samples in ascending index order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import statistics
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from ._parallel import parallel_map
from .numkernels import (
    DegenerateInputError,
    logistic_fit,
    mcfadden_pseudo_r2,
    r2_score,
    ridge_fit,
    ridge_path,
)
from .store import NormTable, Representation

SKIP_INSUFFICIENT = "insufficient-samples"
SKIP_RARE_CLASS = "rare-class"
SKIP_SINGLE_CLASS = "single-class"
SKIP_DEGENERATE = "degenerate-target"


def default_alpha_grid() -> tuple[float, ...]:
    return tuple(float(a) for a in np.logspace(-5, 5, 11))


@dataclass(frozen=True)
class ProbeConfig:
    """Nested cross-validation settings.

    ``alphas`` are penalties in ridge terms; logistic probes use ``C = 1/alpha``.
    ``standardize`` z-scores feature columns with training-fold statistics.
    """

    outer_folds: int = 5
    inner_folds: int = 5
    alphas: tuple[float, ...] = field(default_factory=default_alpha_grid)
    min_test_samples: int = 20
    seed: int = 0
    standardize: bool = False

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        if not alphas or any(not a > 0 or not math.isfinite(a) for a in alphas):
            raise ValueError("alpha grid must be non-empty, positive and finite")
        if list(alphas) != sorted(alphas) or len(set(alphas)) != len(alphas):
            raise ValueError("alpha grid must be strictly ascending")
        if self.outer_folds < 2 or self.inner_folds < 2:
            raise ValueError("need at least 2 folds")
        if self.min_test_samples < 1:
            raise ValueError("min_test_samples must be >= 1")
        object.__setattr__(self, "alphas", alphas)


@dataclass(frozen=True)
class ProbeResult:
    representation: str
    norm: str
    category: str
    kind: str
    n_samples: int
    per_fold_scores: tuple[float, ...] = ()
    chosen_penalties: tuple[float, ...] = ()
    skip_reason: str | None = None
    fold_hash: str | None = None
    converged: bool = True

    @property
    def skipped(self) -> bool:
        return self.skip_reason is not None

    @property
    def mean_score(self) -> float:
        if self.skipped:
            return math.nan
        return math.fsum(self.per_fold_scores) / len(self.per_fold_scores)


@dataclass(frozen=True)
class ContentProfile:
    """Probe results of one representation, keyed by norm name in probing order."""

    representation: str
    scores: dict[str, ProbeResult]

    def mean_scores(self) -> dict[str, float]:
        return {k: r.mean_score for k, r in self.scores.items() if not r.skipped}

    @property
    def skipped(self) -> list[ProbeResult]:
        return [r for r in self.scores.values() if r.skipped]


# --------------------------------------------------------------------------- folds


def fold_assignment(n: int, k: int, seed, strata: np.ndarray | None = None) -> np.ndarray:
    """Fold id (``0..k-1``) per sample; fold sizes differ by at most one."""
    perm = np.random.default_rng(seed).permutation(n)
    if strata is not None:
        perm = perm[np.argsort(np.asarray(strata)[perm], kind="stable")]
    folds = np.empty(n, dtype=np.int64)
    folds[perm] = np.arange(n) % k
    return folds


def fold_hash(folds: np.ndarray) -> str:
    return hashlib.sha256(np.asarray(folds, dtype=np.int64).tobytes()).hexdigest()[:16]


# ------------------------------------------------------------------------- probing


def _standardizer(X_train: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    mean = X_train.mean(axis=0)
    sd = X_train.std(axis=0)
    sd[sd == 0] = 1.0
    return lambda X: (X - mean) / sd


def _pick(mean_scores: np.ndarray, alphas: Sequence[float]) -> int:
    """Index of the best mean score; ties go to the larger penalty."""
    best = None
    for i in range(len(alphas) - 1, -1, -1):
        s = mean_scores[i]
        if np.isnan(s):
            continue
        if best is None or s > mean_scores[best]:
            best = i
    return len(alphas) - 1 if best is None else best


def _safe(score_fn, *args) -> float:
    try:
        return score_fn(*args)
    except DegenerateInputError:
        return math.nan


def _nanmean_columns(scores: np.ndarray) -> np.ndarray:
    out = np.full(scores.shape[1], np.nan)
    for j in range(scores.shape[1]):
        col = scores[:, j][~np.isnan(scores[:, j])]
        if col.size:
            out[j] = col.mean()
    return out


def _ridge_select(X, y, inner, cfg):
    alphas = cfg.alphas
    scores = np.full((cfg.inner_folds, len(alphas)), np.nan)
    for g in range(cfg.inner_folds):
        tr, va = inner != g, inner == g
        if va.sum() == 0 or tr.sum() < 2:
            continue
        for a, model in enumerate(ridge_path(X[tr], y[tr], alphas)):
            scores[g, a] = _safe(r2_score, y[va], model.predict(X[va]))
    return _pick(_nanmean_columns(scores), alphas)


def _class_frequencies(yidx: np.ndarray, K: int) -> np.ndarray:
    return np.bincount(yidx, minlength=K) / yidx.size


def _logistic_select(X, yidx, K, inner, cfg):
    alphas = cfg.alphas
    classes = tuple(range(K))
    scores = np.full((cfg.inner_folds, len(alphas)), np.nan)
    converged = True
    for g in range(cfg.inner_folds):
        tr, va = inner != g, inner == g
        if va.sum() == 0:
            continue
        null = _class_frequencies(yidx[tr], K)
        init = None
        # strongest penalty first, warm-starting towards weaker ones
        for a in range(len(alphas) - 1, -1, -1):
            model = logistic_fit(X[tr], yidx[tr], 1.0 / alphas[a], classes=classes, init=init)
            converged &= model.converged
            init = (model.weights, model.intercept)
            scores[g, a] = _safe(mcfadden_pseudo_r2, yidx[va], model.predict_proba(X[va]), null)
    return _pick(_nanmean_columns(scores), alphas), converged


def probe_norm(rep: Representation, norm: NormTable, cfg: ProbeConfig = ProbeConfig()) -> ProbeResult:
    """Nested cross-validated probe of ``norm`` from ``rep`` on their shared words.

    Skips (returned, not raised) when an outer test fold would hold fewer than
    ``cfg.min_test_samples`` words, when a categorical norm has a class with
    fewer members than outer folds or only one class, or when a numeric
    target is constant.
    """
    common = rep.vocab & norm.vocab
    n = len(common)
    base = dict(representation=rep.name, norm=norm.name, category=norm.category, kind=norm.kind, n_samples=n)
    K_out = cfg.outer_folds
    if n // K_out < cfg.min_test_samples:
        return ProbeResult(**base, skip_reason=SKIP_INSUFFICIENT)
    X = rep.rows(common)
    y = norm.target(common)

    if norm.is_categorical:
        present, yidx = np.unique(y, return_inverse=True)
        counts = np.bincount(yidx)
        if present.size < 2:
            return ProbeResult(**base, skip_reason=SKIP_SINGLE_CLASS)
        if counts.min() < K_out:
            return ProbeResult(**base, skip_reason=SKIP_RARE_CLASS)
        K = present.size
        strata = yidx
    else:
        if np.ptp(y) == 0:
            return ProbeResult(**base, skip_reason=SKIP_DEGENERATE)
        strata = None

    folds = fold_assignment(n, K_out, cfg.seed, strata)
    scores, penalties = [], []
    converged = True
    for f in range(K_out):
        tr = np.flatnonzero(folds != f)
        te = np.flatnonzero(folds == f)
        X_tr, X_te = X[tr], X[te]
        if cfg.standardize:
            z = _standardizer(X_tr)
            X_tr, X_te = z(X_tr), z(X_te)
        inner_strata = None if strata is None else strata[tr]
        inner = fold_assignment(tr.size, cfg.inner_folds, [cfg.seed, f + 1], inner_strata)
        if norm.is_categorical:
            a, ok = _logistic_select(X_tr, yidx[tr], K, inner, cfg)
            model = logistic_fit(X_tr, yidx[tr], 1.0 / cfg.alphas[a], classes=tuple(range(K)))
            converged &= ok and model.converged
            null = _class_frequencies(yidx[tr], K)
            score = _safe(mcfadden_pseudo_r2, yidx[te], model.predict_proba(X_te), null)
        else:
            a = _ridge_select(X_tr, y[tr], inner, cfg)
            model = ridge_fit(X_tr, y[tr], cfg.alphas[a])
            score = _safe(r2_score, y[te], model.predict(X_te))
        if math.isnan(score):
            return ProbeResult(**base, skip_reason=SKIP_DEGENERATE, fold_hash=fold_hash(folds))
        scores.append(float(score))
        penalties.append(cfg.alphas[a])
    return ProbeResult(
        **base,
        per_fold_scores=tuple(scores),
        chosen_penalties=tuple(penalties),
        fold_hash=fold_hash(folds),
        converged=converged,
    )


def content_profile(rep: Representation, norms: Sequence[NormTable], cfg: ProbeConfig = ProbeConfig()) -> ContentProfile:
    """Probe ``rep`` against every norm; skips are kept in the profile."""
    if not norms:
        raise ValueError("need at least one norm")
    return ContentProfile(rep.name, {norm.name: probe_norm(rep, norm, cfg) for norm in norms})


def _profile_job(args):
    return content_profile(*args)


def content_profiles(
    reps: Sequence[Representation], norms: Sequence[NormTable], cfg: ProbeConfig, jobs: int | None = 1
) -> list[ContentProfile]:
    """Profiles for several representations, parallel over representations."""
    return parallel_map(_profile_job, [(rep, norms, cfg) for rep in reps], jobs)


def profiles_to_csv(profiles: Sequence[ContentProfile], n_folds: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["representation", "norm", "category", "n_samples"]
        + [f"fold_{i}" for i in range(n_folds)]
        + ["mean", "skip_reason"]
    )
    for profile in profiles:
        for r in profile.scores.values():
            folds = [repr(s) for s in r.per_fold_scores] or [""] * n_folds
            mean = "" if r.skipped else repr(r.mean_score)
            writer.writerow([r.representation, r.norm, r.category, r.n_samples, *folds, mean, r.skip_reason or ""])
    return buf.getvalue()


# --------------------------------------------------------------------- aggregation


@dataclass(frozen=True, eq=False)
class CategoryTable:
    """Representation x category medians of norm-wise mean scores (``NaN`` = missing)."""

    rows: tuple[str, ...]
    columns: tuple[str, ...]
    values: np.ndarray

    def cell(self, row: str, column: str) -> float:
        return float(self.values[self.rows.index(row), self.columns.index(column)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["representation", *self.columns])
        for name, row in zip(self.rows, self.values):
            writer.writerow([name, *("" if np.isnan(v) else repr(float(v)) for v in row)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "rows": list(self.rows),
            "columns": list(self.columns),
            "values": [[None if np.isnan(v) else float(v) for v in row] for row in self.values],
        }

    @classmethod
    def from_dict(cls, d: dict) -> CategoryTable:
        vals = np.array([[np.nan if v is None else v for v in row] for row in d["values"]], dtype=float)
        return cls(tuple(d["rows"]), tuple(d["columns"]), vals.reshape(len(d["rows"]), len(d["columns"])))


def aggregate_by_category(profiles: Sequence[ContentProfile], category_map: Mapping[str, str]) -> CategoryTable:
    """Median, per category, of the norm-wise mean scores of each profile.

    Skipped norms are left out of the median; a category whose norms were all
    skipped yields a missing (``NaN``) cell. Columns follow the order in which
    categories first appear in ``category_map``.
    """
    for p in profiles:
        unmapped = [k for k in p.scores if k not in category_map]
        if unmapped:
            raise KeyError(f"norm(s) without a category: {', '.join(unmapped)}")
    columns = tuple(dict.fromkeys(category_map.values()))
    values = np.full((len(profiles), len(columns)), np.nan)
    for i, p in enumerate(profiles):
        by_cat: dict[str, list[float]] = {}
        for norm, r in p.scores.items():
            if not r.skipped:
                by_cat.setdefault(category_map[norm], []).append(r.mean_score)
        for j, c in enumerate(columns):
            if c in by_cat:
                values[i, j] = statistics.median(by_cat[c])
    return CategoryTable(tuple(p.representation for p in profiles), columns, values)


def max_gap(
    table: CategoryTable,
    type_of: Mapping[str, str],
    category: str,
    types: tuple[str, str] = ("text", "behavior"),
) -> float:
    """Absolute difference between the best cell of each data type in ``category``."""
    if category not in table.columns:
        raise KeyError(f"category {category!r} not in table")
    j = table.columns.index(category)
    best = []
    for t in types:
        cells = [table.values[i, j] for i, r in enumerate(table.rows) if type_of.get(r) == t]
        cells = [c for c in cells if not np.isnan(c)]
        if not cells:
            raise ValueError(f"category {category!r} has no cells for type {t!r}")
        best.append(max(cells))
    return abs(best[0] - best[1])
