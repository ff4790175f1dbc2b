"""Ensemble content analysis: probing concatenated representations.

All ensembles and their solo members are probed on one shared vocabulary
with the same per-norm fold assignment, so that scores can be compared norm
by norm.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._parallel import parallel_map
from .numkernels import DegenerateInputError, TestResult, wilcoxon_signed_rank
from .rca import ContentProfile, ProbeConfig, content_profile
from .store import NormTable, Representation, VocabSet
from .vocab import common_vocabulary

SCALINGS = ("none", "per-block-column-zscore")
SIGNIFICANCE = 0.05
# Named member lists usable as ``preset:`` in a run config. Representation
# names must match the config's representation entries.
PRESETS = {
    "text-text": ("Text & Text", ("CBOW_GoogleNews", "fastText_CommonCrawl")),
}


@dataclass(frozen=True)
class EnsembleSpec:
    members: tuple[str, ...]
    label: str = ""
    block_scaling: str = "per-block-column-zscore"

    def __post_init__(self):
        members = tuple(self.members)
        if len(members) < 2:
            raise ValueError("an ensemble needs at least two members")
        if len(set(members)) != len(members):
            raise ValueError("ensemble members must be distinct")
        if self.block_scaling not in SCALINGS:
            raise ValueError(f"unknown block scaling {self.block_scaling!r}")
        object.__setattr__(self, "members", members)
        if not self.label:
            object.__setattr__(self, "label", " & ".join(members))


def _zscore_columns(M: np.ndarray) -> np.ndarray:
    mean = M.mean(axis=0)
    sd = M.std(axis=0)
    out = M - mean
    const = sd == 0
    out[:, const] = 0.0
    out[:, ~const] /= sd[~const]
    return out


def concatenate(
    reps: Sequence[Representation],
    vocab: VocabSet,
    scaling: str = "per-block-column-zscore",
    name: str | None = None,
) -> Representation:
    """Column-wise concatenation of ``reps`` on the rows of ``vocab``.

    With ``per-block-column-zscore`` each column is standardized to mean 0 and
    standard deviation 1 over ``vocab``; constant columns become 0. The
    result takes its data type from the first member.
    """
    if scaling not in SCALINGS:
        raise ValueError(f"unknown block scaling {scaling!r}")
    if not reps:
        raise ValueError("nothing to concatenate")
    blocks = []
    for rep in reps:
        if not vocab.issubset(rep.vocab):
            raise ValueError(f"vocabulary is not contained in {rep.name}")
        block = rep.rows(vocab)
        blocks.append(_zscore_columns(block) if scaling != "none" else block)
    label = name or " & ".join(r.name for r in reps)
    return Representation(label, reps[0].data_type, vocab, np.hstack(blocks))


@dataclass(frozen=True)
class EnsembleResult:
    vocab: VocabSet
    profiles: dict[str, ContentProfile]


def _job(args):
    return content_profile(*args)


def ensemble_rca(
    specs: Sequence[EnsembleSpec],
    reps: Mapping[str, Representation],
    norms: Sequence[NormTable],
    cfg: ProbeConfig = ProbeConfig(),
    jobs: int | None = 1,
) -> EnsembleResult:
    """Probe every ensemble and every solo member on one common vocabulary.

    The vocabulary is the intersection over all members of all specs. Solo
    members are scaled like the ensembles (using the first spec's scaling).
    Profiles are keyed by ensemble label or member name; solo profiles come
    first, in first-mention order.
    """
    if not specs:
        raise ValueError("need at least one ensemble spec")
    solo_names = list(dict.fromkeys(m for s in specs for m in s.members))
    missing = [m for m in solo_names if m not in reps]
    if missing:
        raise KeyError(f"unknown representation(s): {', '.join(missing)}")
    vocab = common_vocabulary([reps[m].vocab for m in solo_names])
    needed = cfg.outer_folds * cfg.min_test_samples
    if len(vocab) < needed:
        raise ValueError(f"common vocabulary has {len(vocab)} words; need at least {needed}")

    scaling = specs[0].block_scaling
    units: list[Representation] = [concatenate([reps[m]], vocab, scaling, name=m) for m in solo_names]
    seen = set(solo_names)
    for spec in specs:
        if spec.label in seen:
            continue
        seen.add(spec.label)
        units.append(concatenate([reps[m] for m in spec.members], vocab, spec.block_scaling, spec.label))

    profiles = parallel_map(_job, [(u, norms, cfg) for u in units], jobs)
    _assert_shared_folds(profiles)
    return EnsembleResult(vocab, {p.representation: p for p in profiles})


def _assert_shared_folds(profiles: Sequence[ContentProfile]) -> None:
    by_norm: dict[str, set] = {}
    for p in profiles:
        for norm, r in p.scores.items():
            if r.fold_hash is not None:
                by_norm.setdefault(norm, set()).add(r.fold_hash)
    split = [n for n, h in by_norm.items() if len(h) > 1]
    if split:
        raise RuntimeError(f"fold assignments differ across units for norm(s): {', '.join(split)}")


@dataclass(frozen=True)
class CategoryDiff:
    category: str
    n_norms: int
    median_diff: float
    test: TestResult | None

    @property
    def p_value(self) -> float | None:
        return None if self.test is None else self.test.p_value

    @property
    def significant(self) -> bool:
        return self.test is not None and self.test.p_value < SIGNIFICANCE


@dataclass(frozen=True)
class DiffReport:
    """Per-category paired differences ``a - b`` of norm-wise mean scores."""

    label_a: str
    label_b: str
    rows: tuple[CategoryDiff, ...]

    def row(self, category: str) -> CategoryDiff:
        for r in self.rows:
            if r.category == category:
                return r
        raise KeyError(category)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["category", "n_norms", "median_diff", "wilcoxon_stat", "p_value"])
        for r in self.rows:
            stat = "" if r.test is None else repr(r.test.statistic)
            p = "" if r.test is None else repr(r.test.p_value)
            writer.writerow([r.category, r.n_norms, repr(r.median_diff), stat, p])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "a": self.label_a,
            "b": self.label_b,
            "categories": [
                {
                    "category": r.category,
                    "n_norms": r.n_norms,
                    "median_diff": r.median_diff,
                    "wilcoxon_stat": None if r.test is None else r.test.statistic,
                    "p_value": r.p_value,
                    "significant": r.significant,
                }
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> DiffReport:
        rows = []
        for c in d["categories"]:
            test = None
            if c["p_value"] is not None:
                test = TestResult(c["wilcoxon_stat"], c["p_value"], c["n_norms"], math.nan, math.nan, "")
            rows.append(CategoryDiff(c["category"], c["n_norms"], c["median_diff"], test))
        return cls(d["a"], d["b"], tuple(rows))


def paired_difference_report(
    profile_a: ContentProfile, profile_b: ContentProfile, category_map: Mapping[str, str]
) -> DiffReport:
    """Median paired difference and signed-rank test per norm category.

    Pairs are the norm-wise mean scores ``a_k - b_k`` over norms probed in
    both profiles. Categories with fewer than three such norms, or whose
    differences are all zero, get no test.
    """
    if set(profile_a.scores) != set(profile_b.scores):
        raise ValueError("profiles cover different norms")
    diffs: dict[str, list[float]] = {c: [] for c in dict.fromkeys(category_map.values())}
    for norm, ra in profile_a.scores.items():
        if norm not in category_map:
            raise KeyError(f"norm {norm!r} has no category")
        rb = profile_b.scores[norm]
        if ra.skipped or rb.skipped:
            continue
        diffs[category_map[norm]].append(ra.mean_score - rb.mean_score)
    rows = []
    for category, d in diffs.items():
        if not d:
            continue
        test = None
        if len(d) >= 3:
            try:
                test = wilcoxon_signed_rank(d)
            except (DegenerateInputError, ValueError):
                test = None
        rows.append(CategoryDiff(category, len(d), float(statistics.median(d)), test))
    return DiffReport(profile_a.representation, profile_b.representation, tuple(rows))
