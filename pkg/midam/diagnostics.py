# coding: utf-8

r"""Frozen-model estimator comparison and ablation grids.

The frozen-model comparison holds the network fixed and replays VRSP updates
and naive mini-batch pooling over every bag for a number of rounds, measuring
the squared deviation of each pooled estimate from the full-bag prediction.

"""

import collections
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from midam.bags import BagDataset
from midam.config import TrainConfig
from midam.evaluation import MetricsRow
from midam.model import ModelParams, attention_terms, forward
from midam.objective import pool_dataset
from midam.pooling import PoolKind, outer_f2
from midam.trainer import train
from midam.vrsp import PoolState

logger = logging.getLogger(__name__)

# Long-run mean squared pooled-prediction errors, averaged over seeds
FrozenComparison = collections.namedtuple('FrozenComparison', 'kind gamma0 b vrsp_error naive_error')


def _instance_terms(p: ModelParams, ds: BagDataset, kind: PoolKind) -> List[np.ndarray]:
    r"""Per-instance summands of f1, one (n_i, inner_size) array per bag."""
    terms = list()
    for bag in ds.bags:
        fw = forward(p, bag.instances)
        if kind.name == 'smx':
            terms.append(np.exp(fw.phi / kind.tau)[:, np.newaxis])
        elif kind.name == 'mean':
            terms.append(fw.phi[:, np.newaxis])
        else:
            terms.append(np.column_stack(attention_terms(fw)))
    return terms


def _subset_means(terms: np.ndarray, b: int, rounds: int, rng: np.random.Generator) -> np.ndarray:
    r"""(rounds, n_bags, k) means of terms (n_bags, n, k) over b instances drawn without replacement."""
    n_bags, n, _ = terms.shape
    if b >= n:
        return np.broadcast_to(terms.mean(axis=1), (rounds,) + (n_bags, terms.shape[2]))
    keys = rng.random((rounds, n_bags, n))
    picked = np.argpartition(keys, b - 1, axis=-1)[..., :b]
    gathered = terms[np.arange(n_bags)[np.newaxis, :, np.newaxis], picked]
    return gathered.mean(axis=2)


def frozen_error_curves(p: ModelParams,
                        ds: BagDataset,
                        kind: PoolKind,
                        b: int,
                        gamma0: float,
                        rounds: int,
                        seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    r"""Per-round mean squared error of the VRSP and naive pooled predictions on a frozen model.

    Every round samples b instances in every bag. The fresh subset means feed
    a PoolState with the given gamma0 and, unsmoothed, the naive estimate;
    both go through f2 and are compared with the full-bag pooling.

    Returns
    -------
    (vrsp, naive), two arrays of length rounds

    """
    if not kind.decomposable:
        msg = f"{kind.name} pooling has no inner function to track"
        logger.error(msg)
        raise ValueError(msg)
    if rounds < 1 or b < 1 or not 0. < gamma0 <= 1.:
        msg = f"invalid frozen-model settings rounds={rounds}, b={b}, gamma0={gamma0}"
        logger.error(msg)
        raise ValueError(msg)

    rng = np.random.default_rng(seed)
    terms = _instance_terms(p, ds, kind)
    full = pool_dataset(p, ds, kind)

    fresh = np.zeros((rounds, len(ds), kind.inner_size))
    # bags of equal size share one vectorized draw
    sizes = np.array([t.shape[0] for t in terms])
    for size in np.unique(sizes):
        positions = np.flatnonzero(sizes == size)
        stacked = np.stack([terms[k] for k in positions])
        fresh[:, positions] = _subset_means(stacked, b, rounds, rng)

    state = PoolState(len(ds), kind, gamma0)
    vrsp, naive = np.zeros(rounds), np.zeros(rounds)
    h_vrsp, h_naive = np.zeros(len(ds)), np.zeros(len(ds))
    for t in range(rounds):
        for bag_id in range(len(ds)):
            value = fresh[t, bag_id] if kind.inner_size == 2 else float(fresh[t, bag_id, 0])
            h_naive[bag_id] = outer_f2(value, kind)
            h_vrsp[bag_id] = outer_f2(state.update(bag_id, value), kind)
        vrsp[t] = np.mean((h_vrsp - full) ** 2)
        naive[t] = np.mean((h_naive - full) ** 2)
    return vrsp, naive


def frozen_model_comparison(p: ModelParams,
                            ds: BagDataset,
                            kind: PoolKind,
                            b: int,
                            gamma0: float = 0.1,
                            rounds: int = 500,
                            seeds: Sequence[int] = tuple(range(20))) -> FrozenComparison:
    r"""Long-run (second half of the rounds) errors of VRSP and naive pooling, averaged over seeds."""
    burn_in = rounds // 2
    vrsp_errors, naive_errors = list(), list()
    for seed in seeds:
        vrsp, naive = frozen_error_curves(p, ds, kind, b, gamma0, rounds, seed)
        vrsp_errors.append(np.mean(vrsp[burn_in:]))
        naive_errors.append(np.mean(naive[burn_in:]))
    result = FrozenComparison(kind=kind.name, gamma0=gamma0, b=b,
                              vrsp_error=float(np.mean(vrsp_errors)),
                              naive_error=float(np.mean(naive_errors)))
    logger.info(f"frozen model ({kind.name}, b={b}, gamma0={gamma0}): "
                f"vrsp {result.vrsp_error:.3e} naive {result.naive_error:.3e}")
    return result


def budget_grid(budget: int) -> List[Tuple[int, int]]:
    r"""(s, b) cells with s * b == budget, s a power of two in [2, budget / 2]."""
    cells = list()
    s = 2
    while s <= budget // 2:
        if budget % s == 0:
            cells.append((s, budget // s))
        s *= 2
    if len(cells) == 0:
        msg = f"budget {budget} admits no (s, b) cell"
        logger.error(msg)
        raise ValueError(msg)
    return cells


def instance_batch_sweep(ds: BagDataset, values: Sequence[int] = (1, 2, 4)) -> List[int]:
    r"""Instance-batch sizes of the b sweep, the largest bag size (full bags) appended."""
    full = max(bag.instances.shape[0] for bag in ds.bags)
    return sorted(set([v for v in values if v < full] + [full]))


def epochs_to_reach(rows: Sequence[MetricsRow], threshold: float) -> Optional[int]:
    r"""First epoch whose training AUC is at least threshold, None if never reached."""
    for row in rows:
        if row.train_auc is not None and row.train_auc >= threshold:
            return row.epoch
    return None


def _grid_cell(ds_train: BagDataset, ds_val: Optional[BagDataset], cfg: TrainConfig) -> List[MetricsRow]:
    logger.info(f"grid cell s={cfg.s_pos}, b={cfg.b}")
    _, rows = train(ds_train, ds_val, None, cfg)
    return rows


def run_grid(ds_train: BagDataset,
             ds_val: Optional[BagDataset],
             cfg: TrainConfig,
             cells: Sequence[Tuple[int, int]],
             threads: int = 1) -> Dict[Tuple[int, int], List[MetricsRow]]:
    r"""Train one model per (s, b) cell with S+ = S- = s, all other settings from cfg.

    Cells run in threads worker processes (1: sequential). Each cell is
    seeded by cfg alone, so the results do not depend on threads.

    """
    configs = [cfg.replace(s_pos=s, s_neg=s, b=b) for s, b in cells]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            futures = [executor.submit(_grid_cell, ds_train, ds_val, c) for c in configs]
            rows = [future.result() for future in futures]
    else:
        rows = [_grid_cell(ds_train, ds_val, c) for c in configs]
    return dict(zip([tuple(cell) for cell in cells], rows))
