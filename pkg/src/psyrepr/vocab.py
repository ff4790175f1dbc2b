"""Vocabulary algebra: base vocabulary, subsetting, coverage."""

from __future__ import annotations

import math
from functools import reduce
from typing import Sequence

from .store import FrequencyTable, Representation, VocabSet


class EmptySubsetError(ValueError):
    pass


def _union(vocabs: Sequence[VocabSet]) -> VocabSet:
    return VocabSet(w for v in vocabs for w in v)


def build_base_vocabulary(
    norm_vocabs: Sequence[VocabSet],
    behavior_vocabs: Sequence[VocabSet],
    brain_vocabs: Sequence[VocabSet],
) -> VocabSet:
    """Words covered by some norm and by some behavior or brain source.

    Returns ``(union of norm vocabularies) & (union of behavior and brain
    vocabularies)``. An empty result is returned as-is.
    """
    if not norm_vocabs:
        raise ValueError("at least one norm vocabulary is required")
    if not behavior_vocabs and not brain_vocabs:
        raise ValueError("at least one behavior or brain vocabulary is required")
    return _union(norm_vocabs) & _union(list(behavior_vocabs) + list(brain_vocabs))


def subset_representation(rep: Representation, base: VocabSet) -> Representation:
    """Restrict ``rep`` to the words it shares with ``base``."""
    common = rep.vocab & base
    if len(common) == 0:
        raise EmptySubsetError(f"{rep.name}: no words in common with the base vocabulary")
    if len(common) == len(rep.vocab):
        return rep
    return rep.subset(common)


def coverage(vocab: VocabSet, freq: FrequencyTable) -> float:
    """Share of total token mass in ``freq`` covered by ``vocab``."""
    counts = freq.counts
    return math.fsum(counts.get(w, 0.0) for w in vocab) / freq.total


def common_vocabulary(vocabs: Sequence[VocabSet]) -> VocabSet:
    if not vocabs:
        raise ValueError("need at least one vocabulary")
    return reduce(lambda a, b: a & b, vocabs)
