"""Representational similarity analysis over word representations.

Each representation is summarized by the cosine similarities among its words
(a representational similarity matrix, kept as the packed upper triangle).
Two representations are compared by the Spearman correlation of their packed
triangles over their shared vocabulary.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from ._parallel import parallel_map
from .numkernels import DegenerateInputError, classical_mds
from .numkernels.ranking import centered_rank_pearson, rank_transform, searchsorted_ranks
from .store import DATA_TYPES, Representation, VocabSet

#: Common vocabularies at least this large use the two-pass streaming path.
STREAMING_MIN_WORDS = 30_000
_BLOCK_ROWS = 512


class ZeroNormError(ValueError):
    pass


class InsufficientOverlapError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RSM:
    """Packed upper triangle (row-major, no diagonal) of a cosine similarity matrix."""

    vocab: VocabSet
    upper: np.ndarray

    def __post_init__(self):
        n = len(self.vocab)
        if self.upper.shape != (n * (n - 1) // 2,):
            raise ValueError("packed length does not match vocabulary size")

    def square(self) -> np.ndarray:
        n = len(self.vocab)
        S = np.eye(n)
        iu = np.triu_indices(n, 1)
        S[iu] = self.upper
        S.T[iu] = self.upper
        return S


def _normalized_rows(rep: Representation) -> np.ndarray:
    norms = np.linalg.norm(rep.matrix, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        words = ", ".join(rep.vocab[i] for i in zero[:10])
        raise ZeroNormError(f"{rep.name}: zero-norm embedding row(s): {words}")
    return rep.matrix / norms[:, None]


def _packed_blocks(Mn: np.ndarray, block_rows: int = _BLOCK_ROWS) -> Iterator[np.ndarray]:
    """Yield the packed upper triangle of ``Mn @ Mn.T`` in row-major chunks.

    Recomputing with the same block size reproduces the same bits, which the
    streaming correlation relies on.
    """
    n = Mn.shape[0]
    for i0 in range(0, n - 1, block_rows):
        i1 = min(n - 1, i0 + block_rows)
        G = Mn[i0:i1] @ Mn[i0:].T
        np.clip(G, -1.0, 1.0, out=G)
        yield np.concatenate([G[r, r + 1 :] for r in range(i1 - i0)])


def representational_similarity_matrix(rep: Representation) -> RSM:
    """Cosine RSM of ``rep`` (rows L2-normalized, then ``M @ M.T``)."""
    if len(rep) < 3:
        raise ValueError(f"{rep.name}: need at least 3 words for an RSM")
    Mn = _normalized_rows(rep)
    n = Mn.shape[0]
    upper = np.empty(n * (n - 1) // 2)
    pos = 0
    for chunk in _packed_blocks(Mn):
        upper[pos : pos + chunk.size] = chunk
        pos += chunk.size
    return RSM(rep.vocab, upper)


def rsm_correlation(a: RSM, b: RSM) -> float:
    """Spearman correlation of two RSMs over the same vocabulary."""
    if a.vocab != b.vocab:
        raise ValueError("RSMs must share the same vocabulary")
    return centered_rank_pearson(rank_transform(a.upper), rank_transform(b.upper))


def _sorted_packed(Mn: np.ndarray) -> np.ndarray:
    n = Mn.shape[0]
    out = np.empty(n * (n - 1) // 2)
    pos = 0
    for chunk in _packed_blocks(Mn):
        out[pos : pos + chunk.size] = chunk
        pos += chunk.size
    out.sort()
    return out


def _streaming_spearman(Ma: np.ndarray, Mb: np.ndarray) -> float:
    """Spearman over packed cosine triangles without materializing ranks.

    Pass one stores a sorted copy of each triangle (8 bytes per pair each);
    pass two recomputes the triangles block by block and ranks each block by
    binary search in the sorted copies while accumulating the correlation.
    """
    sa = _sorted_packed(Ma)
    sb = _sorted_packed(Mb)
    mid = (sa.size + 1) / 2.0
    sxy = sxx = syy = 0.0
    for ca, cb in zip(_packed_blocks(Ma), _packed_blocks(Mb)):
        ra = searchsorted_ranks(sa, ca) - mid
        rb = searchsorted_ranks(sb, cb) - mid
        sxy += float(ra @ rb)
        sxx += float(ra @ ra)
        syy += float(rb @ rb)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInputError("constant similarity structure")
    return min(1.0, max(-1.0, sxy / math.sqrt(sxx * syy)))


def rsa_correlation(
    rep_i: Representation, rep_j: Representation, streaming_min_words: int = STREAMING_MIN_WORDS
) -> tuple[float, int]:
    """Spearman correlation between the RSMs of two representations.

    Both are first restricted to their common vocabulary, in the same
    (lexicographic) word order.

    Returns
    -------
    rho : float
    n_common : int
        Size of the common vocabulary.
    """
    common = rep_i.vocab & rep_j.vocab
    if len(common) < 3:
        raise InsufficientOverlapError(
            f"{rep_i.name} / {rep_j.name}: only {len(common)} common words (need 3)"
        )
    a = rep_i.subset(common)
    b = rep_j.subset(common)
    if len(common) >= streaming_min_words:
        return _streaming_spearman(_normalized_rows(a), _normalized_rows(b)), len(common)
    rho = rsm_correlation(representational_similarity_matrix(a), representational_similarity_matrix(b))
    return rho, len(common)


@dataclass(frozen=True, eq=False)
class RsaMatrix:
    """Symmetric matrix of pairwise RSA correlations; ``NaN`` marks missing cells."""

    names: tuple[str, ...]
    labels: tuple[str, ...]
    rho: np.ndarray
    pair_vocab_sizes: np.ndarray

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self.rho).any())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["name", *self.names])
        for name, row in zip(self.names, self.rho):
            writer.writerow([name, *("" if np.isnan(v) else repr(float(v)) for v in row)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "labels": list(self.labels),
            "rho": [[None if np.isnan(v) else float(v) for v in row] for row in self.rho],
            "pair_vocab_sizes": self.pair_vocab_sizes.astype(int).tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> RsaMatrix:
        rho = np.array([[np.nan if v is None else v for v in row] for row in d["rho"]], dtype=float)
        return cls(tuple(d["names"]), tuple(d["labels"]), rho, np.asarray(d["pair_vocab_sizes"]))


def _pair_job(args):
    rep_i, rep_j, streaming_min_words = args
    try:
        return rsa_correlation(rep_i, rep_j, streaming_min_words)
    except (InsufficientOverlapError, DegenerateInputError):
        return math.nan, len(rep_i.vocab & rep_j.vocab)


def pairwise_rsa(
    reps: Sequence[Representation], jobs: int | None = 1, streaming_min_words: int = STREAMING_MIN_WORDS
) -> RsaMatrix:
    """RSA correlation for every unordered pair, in input order.

    Pairs with too small an overlap or a constant RSM are recorded as ``NaN``
    rather than raising.
    """
    if len(reps) < 2:
        raise ValueError("need at least two representations")
    names = [r.name for r in reps]
    if len(set(names)) != len(names):
        raise ValueError("representation names must be unique")
    n = len(reps)
    pairs = list(combinations(range(n), 2))
    results = parallel_map(_pair_job, [(reps[i], reps[j], streaming_min_words) for i, j in pairs], jobs)
    rho = np.eye(n)
    sizes = np.diag([len(r) for r in reps]).astype(np.int64)
    for (i, j), (r, m) in zip(pairs, results):
        rho[i, j] = rho[j, i] = r
        sizes[i, j] = sizes[j, i] = m
    return RsaMatrix(tuple(names), tuple(r.data_type for r in reps), rho, sizes)


def mds_projection(rsa: RsaMatrix, dims: int = 2) -> np.ndarray:
    """Classical MDS of the dissimilarities ``1 - rho``."""
    if rsa.has_missing:
        raise ValueError("RSA matrix has missing cells; impute or drop them first")
    D = 1.0 - rsa.rho
    D = (D + D.T) / 2
    np.fill_diagonal(D, 0.0)
    return classical_mds(D, dims)


def _type_key(a: str, b: str) -> tuple[str, str]:
    order = {t: i for i, t in enumerate(DATA_TYPES)}
    return tuple(sorted((a, b), key=lambda t: (order.get(t, len(order)), t)))


def within_between_summary(rsa: RsaMatrix) -> dict[tuple[str, str], float]:
    """Mean rho over unordered off-diagonal pairs per pair of data types.

    Missing cells are ignored; type combinations with no cells are omitted.
    """
    groups: dict[tuple[str, str], list[float]] = {}
    n = len(rsa.names)
    for i, j in combinations(range(n), 2):
        v = rsa.rho[i, j]
        if np.isnan(v):
            continue
        groups.setdefault(_type_key(rsa.labels[i], rsa.labels[j]), []).append(float(v))
    return {k: math.fsum(v) / len(v) for k, v in sorted(groups.items(), key=lambda kv: _pair_sort(kv[0]))}


def _pair_sort(key):
    order = {t: i for i, t in enumerate(DATA_TYPES)}
    return tuple(order.get(t, len(order)) for t in key), key


def same_type_neighbor_affinity(rsa: RsaMatrix, k: int = 3) -> dict[str, float]:
    """Average share of each representation's ``k`` nearest neighbors (by rho) sharing its type.

    Ties in rho are broken by input order; missing cells are never neighbors.
    """
    n = len(rsa.names)
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the number of representations ({n})")
    per_type: dict[str, list[float]] = {}
    for i in range(n):
        candidates = [j for j in range(n) if j != i and not np.isnan(rsa.rho[i, j])]
        if len(candidates) < k:
            raise ValueError(f"{rsa.names[i]} has fewer than {k} comparable representations")
        nearest = sorted(candidates, key=lambda j: -rsa.rho[i, j])[:k]
        same = sum(rsa.labels[j] == rsa.labels[i] for j in nearest) / k
        per_type.setdefault(rsa.labels[i], []).append(same)
    return {t: float(np.mean(v)) for t, v in sorted(per_type.items(), key=lambda kv: _pair_sort((kv[0],)))}
