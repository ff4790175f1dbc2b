"""Synthetic representation families and norms with known structure.

Words carry a latent code shared by every family plus one latent code per
family. A representation mixes the shared code, its family's code and its
own noise through a random linear map, so representations of one family
share more similarity structure than representations of different families.
Norms are planted on chosen latent codes, which fixes which families can
decode them.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .store import DATA_TYPES, NormTable, Representation, VocabSet, write_embeddings, write_norm_manifest, write_norm_table


@dataclass
class SyntheticSuite:
    reps: list[Representation]
    norms: list[NormTable]
    frequencies: dict[str, float]
    words: list[str]


def _vocab_subset(rng, words, fraction):
    keep = rng.random(len(words)) < fraction
    return [w for w, k in zip(words, keep) if k]


def make_suite(
    seed: int = 0,
    n_words: int = 600,
    reps_per_family: int = 3,
    latent_dim: int = 6,
    dim: int = 40,
    noise: float = 0.6,
    norms_per_category: int = 8,
) -> SyntheticSuite:
    """Build representations for the three data types plus planted norms.

    Norm categories:

    * ``Shared``: linear in the shared code, decodable by every family.
    * ``Text Only``: linear in the text code.
    * ``Behavior Only``: linear in the behavior code.
    * ``This/That``: a binary norm thresholding the shared code.
    * ``Sparse``: a norm covering too few words to probe.
    """
    rng = np.random.default_rng(seed)
    words = [f"w{i:04d}" for i in range(n_words)]
    shared = rng.standard_normal((n_words, latent_dim))
    family = {t: rng.standard_normal((n_words, latent_dim)) for t in DATA_TYPES}
    coverage = {"text": 1.0, "behavior": 0.92, "brain": 0.7}

    reps = []
    for t in DATA_TYPES:
        for r in range(reps_per_family):
            latent = np.hstack([shared, family[t], noise * rng.standard_normal((n_words, latent_dim))])
            mix = rng.standard_normal((latent.shape[1], dim)) / np.sqrt(latent.shape[1])
            matrix = latent @ mix
            keep = _vocab_subset(rng, range(n_words), coverage[t]) if coverage[t] < 1 else range(n_words)
            keep = list(keep)
            reps.append(
                Representation.from_rows(f"{t}{r + 1}", t, [words[i] for i in keep], matrix[keep])
            )

    norms = []

    def numeric(name, category, code, noise_sd=0.3, fraction=0.9):
        w = rng.standard_normal(code.shape[1])
        y = code @ w
        y = y / y.std() + noise_sd * rng.standard_normal(n_words)
        idx = np.flatnonzero(rng.random(n_words) < fraction)
        norms.append(NormTable(name, category, "numeric", VocabSet(words[i] for i in idx), y[idx]))

    for k in range(norms_per_category):
        numeric(f"shared_{k}", "Shared", shared)
        numeric(f"text_{k}", "Text Only", family["text"])
        numeric(f"behavior_{k}", "Behavior Only", family["behavior"])
    z = shared @ rng.standard_normal(latent_dim)
    norms.append(
        NormTable("this_that", "This/That", "binary", VocabSet(words), (z > np.median(z)).astype(int), ("this", "that"))
    )
    sparse_idx = rng.choice(n_words, size=60, replace=False)
    sparse_idx.sort()
    norms.append(
        NormTable("sparse", "Sparse", "numeric", VocabSet(words[i] for i in sparse_idx), shared[sparse_idx, 0])
    )
    freqs = {w: float(c) for w, c in zip(words, rng.zipf(1.5, n_words).clip(max=10**6))}
    freqs["unseen_word"] = 1000.0
    return SyntheticSuite(reps, norms, freqs, words)


def write_project(out_dir: str | Path, seed: int = 0, **kwargs) -> Path:
    """Write a synthetic suite and a run config to ``out_dir``; return the config path."""
    out = Path(out_dir)
    (out / "reps").mkdir(parents=True, exist_ok=True)
    (out / "norms").mkdir(parents=True, exist_ok=True)
    suite = make_suite(seed=seed, **kwargs)
    rep_entries = []
    for rep in suite.reps:
        write_embeddings(rep, out / "reps" / f"{rep.name}.txt")
        rep_entries.append(
            {"name": rep.name, "path": f"reps/{rep.name}.txt", "format": "header-text", "data_type": rep.data_type}
        )
    files = {}
    for norm in suite.norms:
        files[norm.name] = f"{norm.name}.csv"
        write_norm_table(norm, out / "norms" / files[norm.name])
    write_norm_manifest(suite.norms, out / "norms" / "manifest.yaml", files)
    with open(out / "frequency.csv", "w", encoding="utf-8") as fh:
        fh.write("word,count\n")
        for w, c in suite.frequencies.items():
            fh.write(f"{w},{c!r}\n")
    config = {
        "seed": seed,
        "output_dir": "results",
        "representations": rep_entries,
        "norms": {"manifest": "norms/manifest.yaml"},
        "frequency": "frequency.csv",
        "probe": {"outer_folds": 5, "inner_folds": 5, "min_test_samples": 20},
        "ensembles": [
            {"label": "Text & Text", "members": ["text1", "text2"]},
            {"label": "Text & Behavior", "members": ["text1", "behavior1"]},
        ],
        "contrasts": [["Text & Behavior", "Text & Text"]],
        "report": {"rca_reference": "behavior1"},
    }
    path = out / "config.yaml"
    path.write_text(yaml.safe_dump(config, sort_keys=False), encoding="utf-8")
    return path
