# coding: utf-8

r"""Variance-reduced stochastic pooling (VRSP) state.

One moving-average estimate s_i of the inner function f1(w; X_i) is kept per
bag and refreshed only when the bag is sampled:

    s_i <- (1 - gamma0) s_i + gamma0 f1(w; B_i)

where B_i is the sampled instance subset. The first visit of a bag copies the
fresh value instead of blending it with the zero initialization.

"""

import collections
import logging

import numpy as np

from midam.bags import BagDataset
from midam.model import ModelParams
from midam.pooling import InnerValue, PoolKind, inner_f1

logger = logging.getLogger(__name__)

# Class-wise mean squared deviation between the estimates and the full-bag f1
EstimatorErrorReport = collections.namedtuple('EstimatorErrorReport', 'upsilon_pos upsilon_neg')


class PoolState(object):
    r"""Dense per-bag inner estimates, indexed by bag position."""

    def __init__(self, n_bags: int, kind: PoolKind, gamma0: float):
        if not kind.decomposable:
            msg = f"{kind.name} pooling has no inner function to track"
            logger.error(msg)
            raise ValueError(msg)
        self._kind = kind
        self.gamma0 = gamma0
        self._s = np.zeros((n_bags, kind.inner_size))
        self._visited = np.zeros(n_bags, dtype=bool)

    @property
    def gamma0(self) -> float:
        return self._gamma0

    @gamma0.setter
    def gamma0(self, value: float):
        if not 0. < value <= 1.:
            msg = f"gamma0 ({value}) should be in (0, 1]"
            logger.error(msg)
            raise ValueError(msg)
        self._gamma0 = value

    @property
    def kind(self) -> PoolKind:
        return self._kind

    @property
    def visited(self) -> np.ndarray:
        return self._visited

    @property
    def values(self) -> np.ndarray:
        r"""(n_bags, 1) or (n_bags, 2) array of estimates."""
        return self._s

    def __len__(self):
        return len(self._visited)

    def copy(self) -> "PoolState":
        other = PoolState(len(self), self._kind, self._gamma0)
        other._s[:] = self._s
        other._visited[:] = self._visited
        return other

    def _check_id(self, bag_id: int) -> None:
        if not 0 <= bag_id < len(self._visited):
            msg = f"unknown bag id {bag_id}"
            logger.error(msg)
            raise IndexError(msg)

    def _as_inner(self, row: np.ndarray) -> InnerValue:
        return row.copy() if self._kind.inner_size == 2 else float(row[0])

    def value(self, bag_id: int) -> InnerValue:
        r"""Current estimate of a bag."""
        self._check_id(bag_id)
        return self._as_inner(self._s[bag_id])

    def estimate(self, bag_id: int, fresh: InnerValue) -> InnerValue:
        r"""Estimate before an update with fresh: the stored value, or fresh on first visit."""
        self._check_id(bag_id)
        if self._visited[bag_id]:
            return self._as_inner(self._s[bag_id])
        return fresh

    def update(self, bag_id: int, fresh: InnerValue) -> InnerValue:
        r"""Blend fresh into the estimate of bag_id and return the new estimate."""
        self._check_id(bag_id)
        fresh = np.atleast_1d(np.asarray(fresh, dtype=np.float64))
        if self._visited[bag_id]:
            self._s[bag_id] = (1. - self._gamma0) * self._s[bag_id] + self._gamma0 * fresh
        else:
            self._s[bag_id] = fresh
            self._visited[bag_id] = True
        return self._as_inner(self._s[bag_id])

    def error_report(self, p: ModelParams, ds: BagDataset) -> EstimatorErrorReport:
        r"""Mean squared deviation from the full-bag f1, per class. Costs a full forward pass."""
        full = np.array([np.atleast_1d(inner_f1(p, bag, None, self._kind)) for bag in ds.bags])
        squared = np.sum((self._s - full) ** 2, axis=1)
        upsilon_pos = float(np.mean(squared[ds.pos_index])) if ds.n_pos > 0 else 0.
        upsilon_neg = float(np.mean(squared[ds.neg_index])) if ds.n_neg > 0 else 0.
        return EstimatorErrorReport(upsilon_pos=upsilon_pos, upsilon_neg=upsilon_neg)


def init_state(ds: BagDataset, kind: PoolKind, gamma0: float) -> PoolState:
    r"""Zero estimates, none visited, one slot per bag of ds."""
    return PoolState(len(ds), kind, gamma0)


def update(state: PoolState, bag_id: int, fresh: InnerValue) -> InnerValue:
    return state.update(bag_id, fresh)


def error_report(state: PoolState, p: ModelParams, ds: BagDataset) -> EstimatorErrorReport:
    return state.error_report(p, ds)
