"""Shared fixtures: tiny dataset configurations that exercise every code path
while keeping the unit suites fast."""

from __future__ import annotations

import pytest

from latentlearn import codebooks, gridworld, reversals, semantic
from latentlearn.rng import SeededRng


@pytest.fixture(scope="session")
def tiny_codebooks():
    cfg = codebooks.CodebooksDatasetConfig(
        n_codebooks=6,
        n_latent_codebooks=2,
        latent_pairs_per_codebook=4,
        plaintext_len_range=(3, 6),
        n_icl_codebooks=2,
        suite_size=16,
    )
    return codebooks.generate_dataset(cfg, SeededRng(11, "tiny-cb"))


@pytest.fixture(scope="session")
def tiny_reversals():
    cfg = reversals.ReversalsDatasetConfig(
        n_entities=24, n_relations=3, n_holdout=6, repetitions_per_fact=3, suite_size=18
    )
    return reversals.generate_dataset(cfg, SeededRng(12, "tiny-rev"))


@pytest.fixture(scope="session")
def tiny_semantic():
    cfg = semantic.SemanticDatasetConfig(
        n_clones=2,
        n_docs=420,
        suite_size=24,
        n_reversal_holdout_per_clone=8,
        n_syllogism_holdout_per_clone=10,
    )
    return semantic.generate_dataset(cfg, SeededRng(13, "tiny-sem"))


@pytest.fixture(scope="session")
def tiny_gridworld():
    cfg = gridworld.GridworldDatasetConfig(
        n_mazes=3, trajectories_per_pair=4, max_doc_len=600
    )
    return gridworld.generate_dataset(cfg, SeededRng(14, "tiny-gw"), episodes_per_suite=12)
