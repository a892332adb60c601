# coding: utf-8

r"""Cross-validation over (fold, seed) trials, with test AUC at the best validation epoch."""

import collections
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from midam.bags import BagDataset, SplitTriple, Standardizer, stratified_split
from midam.config import TrainConfig
from midam.evaluation import MetricsRow, TrialResult, dataset_auc
from midam.trainer import train

logger = logging.getLogger(__name__)

# trials: successful TrialResult list; failures: (fold, seed, message) list
CVReport = collections.namedtuple('CVReport', 'label trials failures mean std')


def trial_seed(seed: int, fold: int) -> int:
    r"""Seed of the private RNG streams of the (seed, fold) trial."""
    return 1000 * seed + fold


def prepare_split(split: SplitTriple, standardize: bool = True) -> SplitTriple:
    r"""Z-score the three datasets with statistics of the training set."""
    if not standardize:
        return split
    scaler = Standardizer().fit(split.train)
    return SplitTriple(*[scaler.transform(ds) for ds in split])


def run_trial(split: SplitTriple,
              cfg: TrainConfig,
              fold: int,
              seed: int,
              standardize: bool = True) -> Tuple[TrialResult, List[MetricsRow]]:
    r"""Train on one split and score the test set with the best-validation model."""
    split = prepare_split(split, standardize)
    best, rows = train(split.train, split.val, split.test, cfg.replace(seed=trial_seed(seed, fold)))
    result = TrialResult(fold=fold, seed=seed,
                         test_auc_at_best_val=dataset_auc(best, split.test, cfg.kind))
    logger.info(f"trial fold={fold} seed={seed}: test AUC {result.test_auc_at_best_val:.4f}")
    return result, rows


def _summary(values: Sequence[float]) -> Tuple[float, float]:
    if len(values) == 0:
        return float('nan'), float('nan')
    std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.
    return float(np.mean(values)), std


def run_cv(ds: BagDataset,
           cfg: TrainConfig,
           folds: int,
           seeds: Sequence[int],
           test_frac: float = 0.1,
           standardize: bool = True,
           threads: int = 1,
           on_trial: Optional[Callable[[TrialResult, List[MetricsRow]], None]] = None) -> CVReport:
    r"""Train one model per (seed, fold) and summarize the test AUCs.

    Parameters
    ----------
    ds : the whole dataset
    cfg : training configuration (its seed is replaced per trial)
    folds : number of validation folds
    seeds : one stratified test split per seed
    test_frac : per-class proportion of the test set
    standardize : z-score features with training-set statistics
    threads : trials run in that many worker processes (1: sequential, bit-reproducible)
    on_trial : called with each successful trial result and its metrics

    """
    jobs = list()
    for seed in seeds:
        for fold, split in enumerate(stratified_split(ds, folds, test_frac, seed)):
            jobs.append((split, fold, seed))

    outcomes = list()
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            futures = [executor.submit(run_trial, split, cfg, fold, seed, standardize)
                       for split, fold, seed in jobs]
            for future, (_, fold, seed) in zip(futures, jobs):
                try:
                    outcomes.append((fold, seed, future.result(), None))
                except Exception as e:
                    logger.exception(f"trial fold={fold} seed={seed} failed")
                    outcomes.append((fold, seed, None, e))
    else:
        for split, fold, seed in jobs:
            try:
                outcomes.append((fold, seed, run_trial(split, cfg, fold, seed, standardize), None))
            except Exception as e:
                logger.exception(f"trial fold={fold} seed={seed} failed")
                outcomes.append((fold, seed, None, e))

    trials, failures = list(), list()
    for fold, seed, outcome, error in outcomes:
        if error is not None:
            failures.append((fold, seed, str(error)))
            continue
        trials.append(outcome[0])
        if on_trial is not None:
            on_trial(*outcome)

    mean, std = _summary([t.test_auc_at_best_val for t in trials])
    return CVReport(label=cfg.label, trials=trials, failures=failures, mean=mean, std=std)


def format_summary(report: CVReport) -> str:
    r"""'label: mean(std)' line, e.g. 'midam (smx): 0.834(0.120)'."""
    return f"{report.label}: {report.mean:.3f}({report.std:.3f})"


def summary_dict(report: CVReport) -> dict:
    return {"method": report.label,
            "mean": report.mean,
            "std": report.std,
            "trials": len(report.trials),
            "failures": [{"fold": f, "seed": s, "error": e} for f, s, e in report.failures],
            "test_auc": [{"fold": t.fold, "seed": t.seed, "auc": t.test_auc_at_best_val}
                         for t in report.trials]}
