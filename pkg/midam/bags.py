# coding: utf-8

r"""Model for bags of instances and multi-instance datasets.

A bag is a nonempty ordered set of instances (feature vectors of a common
dimension d) sharing one binary label. Instance labels are not observed.

"""

import collections
import logging
from typing import List, Optional, Sequence

import numpy as np
from sklearn.model_selection import StratifiedKFold
from sklearn.preprocessing import StandardScaler

from midam.exceptions import EmptyDatasetError, IntegrityError, ShapeError, SplitError

logger = logging.getLogger(__name__)

# instances is a (n_i, d) float64 array. witnesses is an optional boolean mask
# of the instances known to carry the positive signal (synthetic data only).
Bag = collections.namedtuple('Bag', 'id label instances witnesses', defaults=(None,))

# One (train, validation, test) partition of a dataset
SplitTriple = collections.namedtuple('SplitTriple', 'train val test')

DatasetStats = collections.namedtuple('DatasetStats', 'n_pos n_neg mean_bag_size n_features')


class BagDataset(object):
    r"""A labeled collection of bags, indexed by position.

    Parameters
    ----------
    bags : list of Bag
    dim : the instance dimension. Inferred from the first bag if None.

    """

    def __init__(self, bags: List[Bag], dim: Optional[int] = None):
        if not isinstance(bags, list):
            msg = "bags should be a list"
            logger.error(msg)
            raise ValueError(msg)

        if dim is None:
            if len(bags) == 0:
                msg = "cannot infer the instance dimension of an empty dataset"
                logger.error(msg)
                raise EmptyDatasetError(msg)
            dim = bags[0].instances.shape[1]

        for bag in bags:
            _check_bag(bag, dim)

        self._bags = bags
        self._dim = int(dim)
        labels = np.array([bag.label for bag in bags], dtype=int)
        self._pos_index = np.flatnonzero(labels == 1)
        self._neg_index = np.flatnonzero(labels == 0)

    @property
    def bags(self) -> List[Bag]:
        r"""The bags, in positional order."""
        return self._bags

    @property
    def dim(self) -> int:
        r"""Instance dimension d."""
        return self._dim

    @property
    def pos_index(self) -> np.ndarray:
        r"""Positions of the positive bags."""
        return self._pos_index

    @property
    def neg_index(self) -> np.ndarray:
        r"""Positions of the negative bags."""
        return self._neg_index

    @property
    def n_pos(self) -> int:
        return len(self._pos_index)

    @property
    def n_neg(self) -> int:
        return len(self._neg_index)

    @property
    def labels(self) -> np.ndarray:
        r"""Bag labels in positional order."""
        return np.array([bag.label for bag in self._bags], dtype=int)

    def subset(self, positions: Sequence[int]) -> "BagDataset":
        r"""A dataset made of the bags at the given positions, in ascending order."""
        return BagDataset([self._bags[i] for i in sorted(positions)], dim=self._dim)

    def map_instances(self, func) -> "BagDataset":
        r"""A dataset whose instance arrays are transformed by func (row-wise)."""
        return BagDataset([bag._replace(instances=func(bag.instances)) for bag in self._bags],
                          dim=self._dim)

    def __len__(self):
        return len(self._bags)

    def __repr__(self):
        return f"BagDataset <{len(self)} bags, D+={self.n_pos}, D-={self.n_neg}, d={self.dim}>"


def _check_bag(bag: Bag, dim: int) -> None:
    if not isinstance(bag, Bag):
        msg = "bag should be a Bag instance"
        logger.error(msg)
        raise ValueError(msg)
    if bag.label not in (0, 1):
        msg = f"bag {bag.id} has label {bag.label}, should be 0 or 1"
        logger.error(msg)
        raise IntegrityError(msg)
    if bag.instances.ndim != 2 or bag.instances.shape[0] < 1:
        msg = f"bag {bag.id} should hold a nonempty (n, d) array of instances"
        logger.error(msg)
        raise ShapeError(msg)
    if bag.instances.shape[1] != dim:
        msg = f"bag {bag.id} has instances of dimension {bag.instances.shape[1]}, expected {dim}"
        logger.error(msg)
        raise ShapeError(msg)
    if not np.all(np.isfinite(bag.instances)):
        msg = f"bag {bag.id} holds non-finite feature values"
        logger.error(msg)
        raise IntegrityError(msg)


def describe(ds: BagDataset) -> DatasetStats:
    r"""Positive / negative bag counts, average bag size and number of features."""
    sizes = [bag.instances.shape[0] for bag in ds.bags]
    mean_size = float(np.mean(sizes)) if sizes else 0.
    return DatasetStats(n_pos=ds.n_pos, n_neg=ds.n_neg, mean_bag_size=mean_size, n_features=ds.dim)


def generate_synthetic(n_pos: int,
                       n_neg: int,
                       bag_size: int,
                       d: int,
                       witness_shift: float,
                       witness_count: int,
                       seed: int) -> BagDataset:
    r"""Generate a Gaussian witness dataset.

    Negative bags only hold standard normal instances. Positive bags hold
    witness_count witnesses drawn from N(witness_shift * 1, I) at random
    positions, the rest being standard normal.

    Parameters
    ----------
    n_pos, n_neg : number of positive and negative bags
    bag_size : number of instances per bag
    d : instance dimension
    witness_shift : mean of every coordinate of a witness
    witness_count : witnesses per positive bag (<= bag_size)
    seed : RNG seed

    """
    for name, value in (("n_pos", n_pos), ("n_neg", n_neg), ("bag_size", bag_size),
                        ("d", d), ("witness_count", witness_count)):
        if value < 1:
            msg = f"{name} should be >= 1"
            logger.error(msg)
            raise ValueError(msg)
    if witness_count > bag_size:
        msg = f"witness_count ({witness_count}) should not exceed bag_size ({bag_size})"
        logger.error(msg)
        raise ValueError(msg)

    rng = np.random.default_rng(seed)
    bags = list()
    for i in range(n_pos + n_neg):
        instances = rng.standard_normal((bag_size, d))
        witnesses = np.zeros(bag_size, dtype=bool)
        label = 1 if i < n_pos else 0
        if label == 1:
            rows = rng.choice(bag_size, size=witness_count, replace=False)
            instances[rows] += witness_shift
            witnesses[rows] = True
        bags.append(Bag(id=i, label=label, instances=instances, witnesses=witnesses))

    ds = BagDataset(bags, dim=d)
    logger.debug(f"generated {ds}")
    return ds


def stratified_split(ds: BagDataset,
                     folds: int,
                     test_frac: float,
                     seed: int) -> List[SplitTriple]:
    r"""Stratified hold-out test set plus stratified validation folds.

    The test set holds round(test_frac * D_c) bags of each class c (at least
    one), drawn once for the seed. The remaining bags are split into `folds`
    stratified folds, each giving one (train, val, test) triple.

    """
    if folds < 2:
        msg = "folds should be >= 2"
        logger.error(msg)
        raise ValueError(msg)
    if not 0. < test_frac < 1.:
        msg = "test_frac should be in (0, 1)"
        logger.error(msg)
        raise ValueError(msg)

    rng = np.random.default_rng(seed)
    test_positions = list()
    remaining = list()
    for name, index in (("positive", ds.pos_index), ("negative", ds.neg_index)):
        shuffled = rng.permutation(index)
        n_test = max(1, int(np.floor(test_frac * len(index) + 0.5)))
        if len(index) - n_test < folds:
            msg = f"{name} class has {len(index)} bags, too few for a test set and {folds} folds"
            logger.error(msg)
            raise SplitError(msg)
        test_positions.extend(shuffled[:n_test].tolist())
        remaining.extend(shuffled[n_test:].tolist())

    remaining = np.array(sorted(remaining))
    remaining_labels = ds.labels[remaining]
    test = ds.subset(test_positions)

    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    triples = list()
    for train_idx, val_idx in splitter.split(remaining, remaining_labels):
        triples.append(SplitTriple(train=ds.subset(remaining[train_idx]),
                                   val=ds.subset(remaining[val_idx]),
                                   test=test))
    return triples


class Standardizer(object):
    r"""Per-feature z-scoring fit on the instances of a (training) dataset."""

    def __init__(self):
        self._scaler = StandardScaler()
        self._fitted = False

    def fit(self, ds: BagDataset) -> "Standardizer":
        self._scaler.fit(np.vstack([bag.instances for bag in ds.bags]))
        self._fitted = True
        return self

    def transform(self, ds: BagDataset) -> BagDataset:
        if not self._fitted:
            msg = "the Standardizer should be fit before transform"
            logger.error(msg)
            raise ValueError(msg)
        return ds.map_instances(self._scaler.transform)
