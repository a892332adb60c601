#!/usr/bin/python
# coding: utf-8

r"""Tests for the sampling module."""

import numpy as np
import pytest

from midam.bags import generate_synthetic
from midam.sampling import BagSampler, sample_batch
from tests._helpers import small_dataset


def test_sample_batch_shapes():
    ds = generate_synthetic(6, 5, 10, 3, 1.0, 1, seed=0)
    batch = sample_batch(ds, 3, 2, 4, BagSampler(ds, 0))
    assert len(batch.bag_ids) == 5
    assert batch.n_pos == 3
    assert all(ds.bags[i].label == 1 for i in batch.pos_bag_ids)
    assert all(ds.bags[i].label == 0 for i in batch.neg_bag_ids)
    assert len(set(batch.bag_ids)) == 5
    for indices in batch.per_bag_instances:
        assert len(indices) == 4
        assert len(set(indices.tolist())) == 4
        assert list(indices) == sorted(indices)
    assert batch.n_instances == 20


def test_instance_batch_larger_than_bag():
    ds = small_dataset()
    batch = sample_batch(ds, 2, 2, 100, BagSampler(ds, 0))
    for bag_id, indices in zip(batch.bag_ids, batch.per_bag_instances):
        assert list(indices) == list(range(ds.bags[bag_id].instances.shape[0]))


def test_epoch_semantics():
    r"""Every bag of a class is drawn once per pass over the class."""
    ds = generate_synthetic(6, 6, 3, 2, 1.0, 1, seed=0)
    sampler = BagSampler(ds, seed=4)
    drawn = list()
    for _ in range(3):
        drawn.extend(sampler.sample(2, 2, 1).pos_bag_ids)
    assert sorted(drawn) == sorted(ds.pos_index.tolist())


def test_no_duplicate_across_refill():
    ds = generate_synthetic(3, 3, 3, 2, 1.0, 1, seed=0)
    sampler = BagSampler(ds, seed=0)
    for _ in range(20):
        batch = sampler.sample(2, 3, 1)
        assert len(set(batch.bag_ids)) == 5


def test_sampler_deterministic():
    ds = generate_synthetic(5, 5, 8, 2, 1.0, 1, seed=0)
    s1, s2 = BagSampler(ds, seed=11), BagSampler(ds, seed=11)
    for _ in range(5):
        b1, b2 = s1.sample(2, 2, 3), s2.sample(2, 2, 3)
        assert b1.bag_ids == b2.bag_ids
        for i1, i2 in zip(b1.per_bag_instances, b2.per_bag_instances):
            assert np.array_equal(i1, i2)


def test_sampler_accepts_generator():
    ds = small_dataset()
    rng = np.random.default_rng(0)
    sampler = BagSampler(ds, rng)
    assert sampler.rng is rng


def test_too_many_bags():
    ds = small_dataset()
    with pytest.raises(ValueError):
        _ = sample_batch(ds, 3, 1, 2, BagSampler(ds, 0))
    with pytest.raises(ValueError):
        _ = sample_batch(ds, 1, 1, 0, BagSampler(ds, 0))


def test_sample_batch_advances_sampler():
    r"""Consecutive batches continue the queues of the sampler instead of restarting them."""
    ds = generate_synthetic(6, 6, 3, 2, 1.0, 1, seed=0)
    sampler = BagSampler(ds, seed=2)
    drawn = list()
    for _ in range(3):
        drawn.extend(sample_batch(ds, 2, 2, 1, sampler).pos_bag_ids)
    assert sorted(drawn) == sorted(ds.pos_index.tolist())
    with pytest.raises(ValueError):
        _ = sample_batch(small_dataset(), 1, 1, 1, sampler)


def test_queue_fairness():
    r"""After n steps every bag of a class was drawn at least floor(n S / D) times."""
    ds = generate_synthetic(7, 5, 3, 2, 1.0, 1, seed=0)
    sampler = BagSampler(ds, seed=3)
    n_steps, s_pos, s_neg = 1000, 3, 2
    counts = np.zeros(len(ds), dtype=int)
    for _ in range(n_steps):
        for bag_id in sampler.sample(s_pos, s_neg, 1).bag_ids:
            counts[bag_id] += 1
    assert np.min(counts[ds.pos_index]) >= (n_steps * s_pos) // ds.n_pos
    assert np.min(counts[ds.neg_index]) >= (n_steps * s_neg) // ds.n_neg
    assert np.sum(counts[ds.pos_index]) == n_steps * s_pos


def test_instance_uniformity():
    r"""Each instance of a 10-instance bag is drawn with frequency b / n = 0.2, within 3 standard errors."""
    ds = generate_synthetic(1, 1, 10, 2, 1.0, 1, seed=0)
    sampler = BagSampler(ds, seed=0)
    n_draws, b = 10000, 2
    counts = np.zeros(10, dtype=int)
    for _ in range(n_draws):
        counts[sampler.draw_instances(0, b)] += 1
    frequency = counts / n_draws
    standard_error = np.sqrt(0.2 * 0.8 / n_draws)
    assert np.all(np.abs(frequency - 0.2) <= 3. * standard_error)
