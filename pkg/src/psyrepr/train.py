"""Behavior-style representations trained from raw behavioral data.

Three builders are provided: PPMI followed by truncated SVD of a cue-response
count matrix, SVD of an aggregated pairwise similarity matrix, and a
skip-gram model with a full softmax output layer trained on (cue, response)
pairs.
"""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import log_softmax, softmax

from .numkernels import truncated_svd
from .store import FormatError, Representation, VocabSet, normalize_word

log = logging.getLogger(__name__)

DEFAULT_K = 300


@dataclass(frozen=True, eq=False)
class CueResponseCounts:
    cues: VocabSet
    responses: VocabSet
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.float64)
        if c.shape != (len(self.cues), len(self.responses)):
            raise ValueError("count matrix shape does not match cue/response vocabularies")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ValueError("counts must be finite and nonnegative")
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @classmethod
    def from_triples(cls, triples) -> CueResponseCounts:
        acc: dict[tuple[str, str], float] = defaultdict(float)
        for cue, resp, n in triples:
            acc[(cue, resp)] += float(n)
        cues = VocabSet(c for c, _ in acc)
        responses = VocabSet(r for _, r in acc)
        counts = np.zeros((len(cues), len(responses)))
        ci, ri = cues.index(), responses.index()
        for (c, r), n in acc.items():
            counts[ci[c], ri[r]] = n
        return cls(cues, responses, counts)


def load_cue_response_counts(path: str | Path) -> CueResponseCounts:
    """Read a ``cue,response,count`` csv; repeated pairs are summed."""
    path = Path(path)
    triples = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["cue", "response", "count"]:
            raise FormatError("header must be 'cue,response,count'", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise FormatError("expected 3 columns", path, lineno)
            try:
                n = float(row[2])
            except ValueError:
                raise FormatError(f"malformed count {row[2]!r}", path, lineno) from None
            if not np.isfinite(n) or n < 0:
                raise FormatError(f"invalid count {row[2]!r}", path, lineno)
            triples.append((normalize_word(row[0]), normalize_word(row[1]), n))
    if not triples:
        raise FormatError("no cue-response rows", path)
    return CueResponseCounts.from_triples(triples)


def ppmi(counts: CueResponseCounts) -> np.ndarray:
    """Positive pointwise mutual information (natural log) of a count matrix.

    Cells with zero count are 0.
    """
    c = counts.counts
    total = c.sum()
    if total <= 0:
        raise ValueError("all counts are zero")
    row = c.sum(axis=1, keepdims=True)
    col = c.sum(axis=0, keepdims=True)
    out = np.zeros_like(c)
    nz = c > 0
    # p(w,c) / (p(w) p(c)) = n_wc * N / (n_w n_c)
    ratio = (c[nz] * total) / (row * col)[nz]
    out[nz] = np.maximum(0.0, np.log(ratio))
    return out


def _embed(matrix: np.ndarray, k: int | None) -> tuple[np.ndarray, int]:
    if k is None:
        U, s, _ = truncated_svd(matrix, min(matrix.shape))
        tol = (s[0] if s.size else 0.0) * max(matrix.shape) * np.finfo(np.float64).eps
        k = max(1, min(DEFAULT_K, int(np.count_nonzero(s > tol))))
        U, s = U[:, :k], s[:k]
    else:
        U, s, _ = truncated_svd(matrix, k)
    return U * s, k


def ppmi_svd_embed(
    counts: CueResponseCounts, k: int | None = None, name: str = "ppmi-svd"
) -> Representation:
    """Cue vectors ``U_k diag(s_k)`` from the truncated SVD of the PPMI matrix.

    With ``k=None`` the dimensionality is 300, capped at the matrix rank.
    """
    vectors, _ = _embed(ppmi(counts), k)
    return Representation(name, "behavior", counts.cues, vectors)


# ------------------------------------------------------------------ similarities


@dataclass(frozen=True)
class SimilarityJudgments:
    """Pairwise similarity ratings from one dataset on a declared scale."""

    name: str
    pairs: dict[tuple[str, str], float]
    scale: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.scale
        if not hi > lo:
            raise ValueError(f"{self.name}: scale maximum must exceed minimum")
        bad = [p for p, v in self.pairs.items() if not lo <= v <= hi]
        if bad:
            raise ValueError(f"{self.name}: pair {bad[0]} outside scale [{lo}, {hi}]")

    def normalized(self) -> dict[tuple[str, str], float]:
        lo, hi = self.scale
        return {p: (v - lo) / (hi - lo) for p, v in self.pairs.items()}


def load_similarity_judgments(path: str | Path, name: str | None = None) -> SimilarityJudgments:
    """Read ``word1,word2,value,scale_min,scale_max``.

    Word pairs are unordered; a pair listed more than once is averaged.
    """
    path = Path(path)
    acc: dict[tuple[str, str], list[float]] = defaultdict(list)
    scale = None
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["word1", "word2", "value", "scale_min", "scale_max"]
        if header is None or [h.strip() for h in header] != expected:
            raise FormatError("header must be 'word1,word2,value,scale_min,scale_max'", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise FormatError("expected 5 columns", path, lineno)
            try:
                value, lo, hi = float(row[2]), float(row[3]), float(row[4])
            except ValueError:
                raise FormatError("malformed number", path, lineno) from None
            if scale is None:
                scale = (lo, hi)
            elif scale != (lo, hi):
                raise FormatError("scale bounds must be constant within a dataset", path, lineno)
            a, b = normalize_word(row[0]), normalize_word(row[1])
            if a == b:
                continue
            acc[tuple(sorted((a, b)))].append(value)
    if scale is None:
        raise FormatError("no similarity rows", path)
    pairs = {p: float(np.mean(v)) for p, v in acc.items()}
    return SimilarityJudgments(name or path.stem, pairs, scale)


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Aggregated similarities over ``vocab``; ``NaN`` marks absent pairs."""

    vocab: VocabSet
    values: np.ndarray = field(repr=False)

    @property
    def observed(self) -> np.ndarray:
        return ~np.isnan(self.values)


def aggregate_similarity(datasets: Sequence[SimilarityJudgments], vocab: VocabSet) -> SimilarityMatrix:
    """Average min-max normalized judgments across datasets.

    Each dataset is rescaled to [0, 1] with its declared scale bounds. A pair
    seen in several datasets gets the mean of their normalized values. The
    diagonal is 1; pairs no dataset covers are ``NaN``.
    """
    if not datasets:
        raise ValueError("need at least one similarity dataset")
    n = len(vocab)
    sums = np.zeros((n, n))
    hits = np.zeros((n, n))
    idx = vocab.index()
    for ds in datasets:
        for (a, b), v in ds.normalized().items():
            i, j = idx.get(a), idx.get(b)
            if i is None or j is None:
                continue
            sums[i, j] += v
            sums[j, i] += v
            hits[i, j] += 1
            hits[j, i] += 1
    lonely = [vocab[i] for i in range(n) if hits[i].sum() == 0]
    if lonely:
        raise ValueError(f"no similarity pairs for word(s): {', '.join(lonely[:10])}")
    with np.errstate(invalid="ignore", divide="ignore"):
        S = np.where(hits > 0, sums / np.maximum(hits, 1), np.nan)
    np.fill_diagonal(S, 1.0)
    return SimilarityMatrix(vocab, S)


def impute_similarity(S: SimilarityMatrix) -> tuple[np.ndarray, int]:
    """Fill absent pairs with the mean observed off-diagonal similarity.

    Returns the completed matrix and the number of unordered pairs filled.
    """
    vals = np.array(S.values, dtype=np.float64)
    off = ~np.eye(len(vals), dtype=bool)
    missing = np.isnan(vals) & off
    observed = vals[off & ~missing]
    if observed.size == 0:
        raise ValueError("no observed off-diagonal similarities")
    vals[missing] = observed.mean()
    return vals, int(missing.sum() // 2)


def similarity_svd_embed(S: SimilarityMatrix | np.ndarray, k: int | None = None,
                         name: str = "sim-svd", vocab: VocabSet | None = None) -> Representation:
    """Word vectors ``U_k diag(s_k)`` from the SVD of a similarity matrix.

    Absent pairs are imputed first (see :func:`impute_similarity`).
    """
    if isinstance(S, SimilarityMatrix):
        vocab = S.vocab
        values, n_imputed = impute_similarity(S)
        if n_imputed:
            log.info("imputed %d missing similarity pairs", n_imputed)
    else:
        values = np.asarray(S, dtype=np.float64)
        if vocab is None:
            raise ValueError("vocab is required for a raw matrix")
    if values.shape != (len(vocab), len(vocab)) or not np.allclose(values, values.T):
        raise ValueError("similarity matrix must be square and symmetric")
    vectors, _ = _embed(values, k)
    return Representation(name, "behavior", vocab, vectors)


# ----------------------------------------------------------------- skip-gram


def sg_softmax_loss_and_grad(W_in, W_out, cue_idx, resp_idx):
    """Summed negative log-likelihood of responses and its gradients.

    ``loss = sum_i -log softmax(W_out @ W_in[cue_i])[resp_i]``
    """
    cue_idx = np.asarray(cue_idx)
    resp_idx = np.asarray(resp_idx)
    H = W_in[cue_idx]
    logits = H @ W_out.T
    logP = log_softmax(logits, axis=1)
    loss = -float(logP[np.arange(len(resp_idx)), resp_idx].sum())
    G = np.exp(logP)
    G[np.arange(len(resp_idx)), resp_idx] -= 1.0
    g_in = np.zeros_like(W_in)
    np.add.at(g_in, cue_idx, G @ W_out)
    g_out = G.T @ H
    return loss, g_in, g_out


@dataclass
class SkipGramResult:
    input_rep: Representation
    output_rep: Representation
    epoch_losses: list[float]
    initial_loss: float

    def __iter__(self):
        return iter((self.input_rep, self.output_rep))


def sg_softmax_train(
    pairs: Sequence[tuple[str, str]],
    dim: int = 100,
    epochs: int = 5,
    learning_rate: float = 0.025,
    seed: int = 0,
    min_lr_fraction: float = 1e-4,
    name: str = "sg-softmax",
) -> SkipGramResult:
    """Train cue (input) and response (output) vectors with a full softmax.

    Plain SGD over the pairs, reshuffled every epoch, with the learning rate
    decaying linearly from ``learning_rate`` to
    ``learning_rate * min_lr_fraction`` across all updates. Both tables are
    initialized uniformly in ``(-0.5/dim, 0.5/dim)``. Given the same seed the
    result is bit-identical.

    The returned object unpacks as ``(input_rep, output_rep)``; it also keeps
    the mean training loss after every epoch.
    """
    if not pairs:
        raise ValueError("empty pair list")
    if dim < 1 or epochs < 1:
        raise ValueError("dim and epochs must be positive")
    cues = VocabSet(c for c, _ in pairs)
    responses = VocabSet(r for _, r in pairs)
    cue_idx = cues.positions(c for c, _ in pairs)
    resp_idx = responses.positions(r for _, r in pairs)

    ss = np.random.SeedSequence(seed)
    init_rng, shuffle_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    bound = 0.5 / dim
    W_in = init_rng.uniform(-bound, bound, size=(len(cues), dim))
    W_out = init_rng.uniform(-bound, bound, size=(len(responses), dim))

    n = len(pairs)
    initial_loss = sg_softmax_loss_and_grad(W_in, W_out, cue_idx, resp_idx)[0] / n
    total_steps = epochs * n
    min_lr = learning_rate * min_lr_fraction
    step = 0
    epoch_losses = []
    for _ in range(epochs):
        for i in shuffle_rng.permutation(n):
            lr = max(min_lr, learning_rate * (1.0 - step / total_steps))
            c, r = cue_idx[i], resp_idx[i]
            h = W_in[c].copy()
            p = softmax(W_out @ h)
            p[r] -= 1.0
            W_in[c] -= lr * (p @ W_out)
            W_out -= lr * np.outer(p, h)
            step += 1
        epoch_losses.append(sg_softmax_loss_and_grad(W_in, W_out, cue_idx, resp_idx)[0] / n)
        log.debug("epoch %d loss %.6f", len(epoch_losses), epoch_losses[-1])

    return SkipGramResult(
        Representation(f"{name}-input", "behavior", cues, W_in),
        Representation(f"{name}-output", "behavior", responses, W_out),
        epoch_losses,
        initial_loss,
    )


def load_pairs(path: str | Path) -> list[tuple[str, str]]:
    """Expand a ``cue,response,count`` csv into individual pairs.

    Counts must be whole numbers; each (cue, response) row contributes
    ``count`` training pairs.
    """
    counts = load_cue_response_counts(path)
    if np.any(counts.counts != np.round(counts.counts)):
        raise ValueError("skip-gram training needs integer counts")
    pairs = []
    for i, j in zip(*np.nonzero(counts.counts)):
        pairs.extend([(counts.cues[i], counts.responses[j])] * int(counts.counts[i, j]))
    return pairs
