# coding: utf-8

r"""Two-level sampling: bags from per-class queues, then instances within bags."""

import collections
import logging
from typing import List

import numpy as np

from midam.bags import BagDataset

logger = logging.getLogger(__name__)


class SampleBatch(collections.namedtuple('SampleBatch', 'bag_ids per_bag_instances n_pos')):
    r"""Sampled bag positions (positives first) and the sorted instance indices for each.

    n_pos is the number of positive bags at the head of bag_ids.

    """
    __slots__ = ()

    @property
    def pos_bag_ids(self) -> List[int]:
        return self.bag_ids[:self.n_pos]

    @property
    def neg_bag_ids(self) -> List[int]:
        return self.bag_ids[self.n_pos:]

    @property
    def n_instances(self) -> int:
        r"""Instances processed by one step, the (S+ + S-) * B cost of an iteration."""
        return sum(len(idx) for idx in self.per_bag_instances)


class BagSampler(object):
    r"""Per-class shuffled queues of bag positions with a private RNG.

    A queue is reshuffled when exhausted, so that every bag of a class is
    visited once per pass over that class.

    Parameters
    ----------
    ds : the dataset to sample from
    seed : RNG seed, or an existing numpy Generator

    """

    def __init__(self, ds: BagDataset, seed=0):
        self._ds = ds
        self._rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self._queues = {1: collections.deque(), 0: collections.deque()}

    @property
    def rng(self) -> np.random.Generator:
        return self._rng

    @property
    def dataset(self) -> BagDataset:
        return self._ds

    def _draw_bags(self, label: int, count: int) -> List[int]:
        index = self._ds.pos_index if label == 1 else self._ds.neg_index
        queue = self._queues[label]
        drawn = list()
        deferred = list()
        while len(drawn) < count:
            if len(queue) == 0:
                queue.extend(self._rng.permutation(index).tolist())
            bag_id = queue.popleft()
            if bag_id in drawn:
                # already in this batch: keep it at the head of the refilled queue
                deferred.append(bag_id)
            else:
                drawn.append(bag_id)
        queue.extendleft(reversed(deferred))
        return drawn

    def draw_instances(self, bag_id: int, b: int) -> np.ndarray:
        r"""Sorted instance indices of a bag, min(b, n_i) of them without replacement."""
        n_i = self._ds.bags[bag_id].instances.shape[0]
        if b >= n_i:
            return np.arange(n_i)
        return np.sort(self._rng.choice(n_i, size=b, replace=False))

    def sample(self, s_pos: int, s_neg: int, b: int) -> SampleBatch:
        if s_pos > self._ds.n_pos or s_neg > self._ds.n_neg:
            msg = f"cannot sample {s_pos} positive / {s_neg} negative bags " \
                  f"from D+={self._ds.n_pos}, D-={self._ds.n_neg}"
            logger.error(msg)
            raise ValueError(msg)
        if s_pos < 0 or s_neg < 0 or b < 1:
            msg = "s_pos and s_neg should be >= 0 and b >= 1"
            logger.error(msg)
            raise ValueError(msg)

        bag_ids = self._draw_bags(1, s_pos) + self._draw_bags(0, s_neg)
        per_bag = [self.draw_instances(bag_id, b) for bag_id in bag_ids]
        batch = SampleBatch(bag_ids=bag_ids, per_bag_instances=per_bag, n_pos=s_pos)
        logger.debug(f"sampled {len(bag_ids)} bags, {batch.n_instances} instances")
        return batch


def sample_batch(ds: BagDataset,
                 s_pos: int,
                 s_neg: int,
                 b: int,
                 sampler: BagSampler) -> SampleBatch:
    r"""Sample s_pos positive and s_neg negative bags and up to b instances per bag.

    Parameters
    ----------
    ds : dataset
    s_pos, s_neg : bag-batch sizes per class
    b : instance-batch size per bag
    sampler : the sampler of ds holding queues and RNG state, advanced by the call

    """
    if sampler.dataset is not ds:
        msg = "the sampler draws from another dataset"
        logger.error(msg)
        raise ValueError(msg)
    return sampler.sample(s_pos, s_neg, b)
