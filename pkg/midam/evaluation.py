# coding: utf-8

r"""Exact AUC and bag scoring."""

import collections
import logging
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from midam.bags import BagDataset
from midam.model import ModelParams
from midam.objective import pool_dataset
from midam.pooling import PoolKind

logger = logging.getLogger(__name__)

# One epoch of logged diagnostics. upsilon_* are None outside diagnostic epochs,
# val_auc / test_auc are None without a validation / test set.
MetricsRow = collections.namedtuple('MetricsRow', 'epoch train_auc val_auc test_auc objective '
                                                  'upsilon_pos upsilon_neg alpha lr wall_ms')

TrialResult = collections.namedtuple('TrialResult', 'fold seed test_auc_at_best_val')


def auc(scores_pos: Sequence[float], scores_neg: Sequence[float]) -> float:
    r"""Wilcoxon-Mann-Whitney AUC: fraction of (positive, negative) pairs ranked correctly.

    A tie counts one half. Computed from tie-averaged ranks in O((P + N) log(P + N)).

    """
    scores_pos = np.asarray(scores_pos, dtype=np.float64).ravel()
    scores_neg = np.asarray(scores_neg, dtype=np.float64).ravel()
    if scores_pos.size == 0 or scores_neg.size == 0:
        msg = "auc needs at least one positive and one negative score"
        logger.error(msg)
        raise ValueError(msg)
    if not (np.all(np.isfinite(scores_pos)) and np.all(np.isfinite(scores_neg))):
        msg = "auc scores should be finite"
        logger.error(msg)
        raise ValueError(msg)

    n_pos, n_neg = scores_pos.size, scores_neg.size
    ranks = rankdata(np.concatenate([scores_pos, scores_neg]), method='average')
    u_statistic = np.sum(ranks[:n_pos]) - n_pos * (n_pos + 1) / 2.
    return float(u_statistic / (n_pos * n_neg))


def score_dataset(p: ModelParams, ds: BagDataset, kind: PoolKind) -> np.ndarray:
    r"""Full-bag pooled predictions for every bag, in bag order. No subsampling, no VRSP state."""
    return pool_dataset(p, ds, kind)


def dataset_auc(p: ModelParams, ds: Optional[BagDataset], kind: PoolKind) -> Optional[float]:
    r"""Bag-level AUC of the model on ds. None if ds is None or lacks a class."""
    if ds is None or ds.n_pos == 0 or ds.n_neg == 0:
        return None
    scores = score_dataset(p, ds, kind)
    return auc(scores[ds.pos_index], scores[ds.neg_index])
