#!/usr/bin/python
# coding: utf-8

r"""Tests for the evaluation module."""

import numpy as np
import pytest

from midam.bags import generate_synthetic
from midam.evaluation import auc, dataset_auc, score_dataset
from midam.model import init_params
from midam.pooling import PoolKind, pool
from tests._helpers import brute_force_auc


def test_auc_examples():
    assert auc([0.9, 0.8], [0.1, 0.2]) == 1.
    assert auc([0.1], [0.9]) == 0.
    assert auc([0.5], [0.5]) == 0.5
    assert auc([0.3, 0.7], [0.5]) == 0.5


def test_auc_brute_force():
    r"""Tie-bearing random scores: rank formula and pair count agree exactly."""
    rng = np.random.default_rng(0)
    for _ in range(200):
        n_pos, n_neg = rng.integers(1, 30, 2)
        scores_pos = rng.integers(0, 8, n_pos) / 4.
        scores_neg = rng.integers(0, 8, n_neg) / 4.
        assert auc(scores_pos, scores_neg) == brute_force_auc(scores_pos, scores_neg)


def test_auc_complement_symmetry():
    rng = np.random.default_rng(1)
    for _ in range(50):
        scores_pos = rng.integers(0, 5, 7).astype(float)
        scores_neg = rng.integers(0, 5, 9).astype(float)
        assert abs(auc(scores_pos, scores_neg) + auc(scores_neg, scores_pos) - 1.) <= 1e-15


def test_auc_monotone_invariance():
    rng = np.random.default_rng(2)
    for _ in range(50):
        scores_pos = rng.normal(size=11)
        scores_neg = np.concatenate([rng.normal(size=6), scores_pos[:2]])
        assert auc(scores_pos, scores_neg) == auc(np.exp(3. * scores_pos), np.exp(3. * scores_neg))


def test_auc_empty():
    with pytest.raises(ValueError):
        _ = auc([], [0.5])


def test_auc_non_finite():
    with pytest.raises(ValueError):
        _ = auc([np.nan], [0.5])


def test_score_dataset():
    ds = generate_synthetic(3, 3, 5, 2, 1.0, 1, seed=0)
    p = init_params(ds.dim, seed=0)
    kind = PoolKind.attention()
    scores = score_dataset(p, ds, kind)
    assert scores.shape == (6,)
    assert scores[4] == pool(p, ds.bags[4], None, kind)


def test_dataset_auc():
    ds = generate_synthetic(3, 3, 5, 2, 1.0, 1, seed=0)
    p = init_params(ds.dim, seed=0)
    kind = PoolKind.smoothed_max()
    scores = score_dataset(p, ds, kind)
    assert dataset_auc(p, ds, kind) == brute_force_auc(scores[ds.pos_index], scores[ds.neg_index])
    assert dataset_auc(p, None, kind) is None
    assert dataset_auc(p, ds.subset(ds.pos_index), kind) is None
