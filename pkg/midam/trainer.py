# coding: utf-8

r"""MIDAM training loop and the DAM (mini-batch pooling) and cross-entropy baselines.

One MIDAM step samples S+ positive and S- negative bags and at most B
instances per bag, refreshes the VRSP estimates of the sampled bags, builds
the stochastic gradient of the min-max objective, takes a momentum (or
Adam-style) step on (w, a, b) and a projected ascent step on alpha.

"""

import dataclasses
import logging
import math
import os
import time
from typing import Callable, List, Optional, Tuple

import numpy as np

from midam.bags import BagDataset
from midam.config import TrainConfig
from midam.evaluation import MetricsRow, dataset_auc
from midam.exceptions import NumericError
from midam.io import save_checkpoint
from midam.model import ModelParams, init_params
from midam.objective import GradEstimate, ce_loss_and_grad, eval_full, grad_estimators
from midam.optim import MomentumState, dual_update, primal_update
from midam.pooling import inner_f1
from midam.sampling import BagSampler
from midam.vrsp import PoolState, init_state

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class StepSizes(object):
    r"""Current primal step eta, dual step eta', momentum retention beta1 and VRSP gamma0."""
    eta: float
    eta_prime: float
    beta1: float
    gamma0: float

    @classmethod
    def from_config(cls, cfg: TrainConfig) -> "StepSizes":
        return cls(cfg.eta, cfg.eta_prime, cfg.beta1, cfg.gamma0)

    def decayed(self, lr_factor: float, mom_factor: float) -> "StepSizes":
        r"""eta / lr_factor; eta', 1 - beta1 and gamma0 divided by mom_factor."""
        return StepSizes(eta=self.eta / lr_factor,
                         eta_prime=self.eta_prime / mom_factor,
                         beta1=1. - (1. - self.beta1) / mom_factor,
                         gamma0=min(1., self.gamma0 / mom_factor))


def _check_finite_gradient(grad: GradEstimate) -> None:
    bad = grad.g_w.first_non_finite()
    if bad is None:
        for name in ('g_a', 'g_b', 'g_alpha'):
            if not math.isfinite(getattr(grad, name)):
                bad = name
                break
    if bad is not None:
        msg = f"non-finite gradient estimate in {bad}"
        logger.error(msg)
        raise NumericError(msg, name=bad)


def _apply_update(p: ModelParams,
                  grad: GradEstimate,
                  mom: MomentumState,
                  cfg: TrainConfig,
                  sizes: StepSizes) -> ModelParams:
    _check_finite_gradient(grad)
    g_w = grad.g_w + p.weights * cfg.weight_decay
    updated = primal_update(p, g_w, grad.g_a, grad.g_b, mom,
                            eta=sizes.eta,
                            beta1=sizes.beta1,
                            optimizer=cfg.resolved_optimizer,
                            adam_beta2=cfg.adam_beta2,
                            adam_eps=cfg.adam_eps)
    updated.alpha = dual_update(p.alpha, grad.g_alpha, sizes.eta_prime, cfg.margin_cfg)
    bad = updated.first_non_finite()
    if bad is not None:
        msg = f"non-finite update of {bad}"
        logger.error(msg)
        raise NumericError(msg, name=bad)
    return updated


def midam_step(p: ModelParams,
               ds: BagDataset,
               state: Optional[PoolState],
               mom: MomentumState,
               cfg: TrainConfig,
               sampler: BagSampler,
               sizes: Optional[StepSizes] = None) -> Tuple[ModelParams, Optional[PoolState], MomentumState]:
    r"""One iteration of the unified MIDAM algorithm.

    With cfg.estimator == 'pre' (the default) the gradient uses the estimates
    held before this iteration, or the fresh value on a bag's first visit;
    with 'post' it uses the freshly updated estimates. Max pooling keeps no state.

    """
    sizes = StepSizes.from_config(cfg) if sizes is None else sizes
    kind = cfg.kind
    batch = sampler.sample(cfg.s_pos, cfg.s_neg, cfg.b)

    estimates = None
    if kind.decomposable:
        state.gamma0 = sizes.gamma0
        fresh = [inner_f1(p, ds.bags[bag_id], subset, kind)
                 for bag_id, subset in zip(batch.bag_ids, batch.per_bag_instances)]
        if cfg.estimator == 'pre':
            estimates = [state.estimate(bag_id, f) for bag_id, f in zip(batch.bag_ids, fresh)]
            for bag_id, f in zip(batch.bag_ids, fresh):
                state.update(bag_id, f)
        else:
            estimates = [state.update(bag_id, f) for bag_id, f in zip(batch.bag_ids, fresh)]

    grad = grad_estimators(p, ds, batch, kind, cfg.margin_cfg, estimates)
    return _apply_update(p, grad, mom, cfg, sizes), state, mom


def baseline_dam_mb_step(p: ModelParams,
                         ds: BagDataset,
                         mom: MomentumState,
                         cfg: TrainConfig,
                         sampler: BagSampler,
                         sizes: Optional[StepSizes] = None) -> Tuple[ModelParams, MomentumState]:
    r"""MIDAM step with naive mini-batch pooling: f2(f1(w; B_i)) replaces every estimate."""
    sizes = StepSizes.from_config(cfg) if sizes is None else sizes
    batch = sampler.sample(cfg.s_pos, cfg.s_neg, cfg.b)
    grad = grad_estimators(p, ds, batch, cfg.kind, cfg.margin_cfg, None)
    return _apply_update(p, grad, mom, cfg, sizes), mom


def ce_step(p: ModelParams,
            ds: BagDataset,
            mom: MomentumState,
            cfg: TrainConfig,
            sampler: BagSampler,
            sizes: Optional[StepSizes] = None) -> Tuple[ModelParams, MomentumState, float]:
    r"""Cross-entropy step on the weights. a, b and alpha are left untouched."""
    sizes = StepSizes.from_config(cfg) if sizes is None else sizes
    batch = sampler.sample(cfg.s_pos, cfg.s_neg, cfg.b)
    loss, g_w = ce_loss_and_grad(p, ds, batch, cfg.kind)
    bad = g_w.first_non_finite()
    if bad is not None:
        msg = f"non-finite cross-entropy gradient in {bad}"
        logger.error(msg)
        raise NumericError(msg, name=bad)
    updated = primal_update(p, g_w + p.weights * cfg.weight_decay, 0., 0., mom,
                            eta=sizes.eta,
                            beta1=sizes.beta1,
                            optimizer=cfg.resolved_optimizer,
                            adam_beta2=cfg.adam_beta2,
                            adam_eps=cfg.adam_eps)
    updated.a, updated.b = p.a, p.b
    bad = updated.first_non_finite()
    if bad is not None:
        msg = f"non-finite update of {bad}"
        logger.error(msg)
        raise NumericError(msg, name=bad)
    return updated, mom, loss


def steps_per_epoch(ds: BagDataset, s_pos: int, s_neg: int) -> int:
    r"""Steps needed for the larger class to be visited once: ceil(max(D+ / S+, D- / S-))."""
    return int(math.ceil(max(ds.n_pos / s_pos, ds.n_neg / s_neg)))


def _effective_config(ds: BagDataset, cfg: TrainConfig) -> TrainConfig:
    if ds.n_pos < 1 or ds.n_neg < 1:
        msg = f"the training set should hold both classes ({ds})"
        logger.error(msg)
        raise ValueError(msg)
    s_pos, s_neg = min(cfg.s_pos, ds.n_pos), min(cfg.s_neg, ds.n_neg)
    if (s_pos, s_neg) != (cfg.s_pos, cfg.s_neg):
        logger.warning(f"bag-batch sizes reduced to S+={s_pos}, S-={s_neg} for {ds}")
    return cfg.replace(s_pos=s_pos, s_neg=s_neg)


def train(ds_train: BagDataset,
          ds_val: Optional[BagDataset],
          ds_test: Optional[BagDataset],
          cfg: TrainConfig,
          checkpoint_dir: Optional[str] = None,
          on_epoch: Optional[Callable[[MetricsRow], None]] = None) -> Tuple[ModelParams, List[MetricsRow]]:
    r"""Train with cfg.method and return the parameters of best validation AUC.

    Parameters
    ----------
    ds_train, ds_val, ds_test : disjoint datasets. Model selection falls back to the
                                training AUC without a validation set
    cfg : the configuration
    checkpoint_dir : where checkpoints go every cfg.checkpoint_every epochs, and at the end
                     checkpoint.npz with the best parameters and the VRSP state of that
                     epoch (none if None)
    on_epoch : called with each MetricsRow as soon as it is computed

    Returns
    -------
    best parameters, metrics (one row per epoch)

    """
    cfg = _effective_config(ds_train, cfg)
    kind = cfg.kind
    p = init_params(ds_train.dim, cfg.att_dim or None, seed=cfg.seed, scale=cfg.init_scale)
    sampler = BagSampler(ds_train, np.random.default_rng([cfg.seed, 1]))
    state = init_state(ds_train, kind, cfg.gamma0) if cfg.method == 'midam' and kind.decomposable else None
    mom = MomentumState.zeros(p, adam=cfg.resolved_optimizer == 'adam')
    sizes = StepSizes.from_config(cfg)
    n_steps = steps_per_epoch(ds_train, cfg.s_pos, cfg.s_neg)

    best, best_score = p.copy(), -np.inf
    best_state = None if state is None else state.copy()
    rows = list()
    for epoch in range(cfg.epochs):
        if epoch in cfg.lr_decay_epochs:
            sizes = sizes.decayed(cfg.lr_decay_factor, cfg.mom_gamma_decay_factor)
            logger.info(f"epoch {epoch}: step sizes decayed to {sizes}")

        start = time.perf_counter()
        for _ in range(n_steps):
            if cfg.method == 'midam':
                p, state, mom = midam_step(p, ds_train, state, mom, cfg, sampler, sizes)
            elif cfg.method == 'dam_mb':
                p, mom = baseline_dam_mb_step(p, ds_train, mom, cfg, sampler, sizes)
            else:
                p, mom, _ = ce_step(p, ds_train, mom, cfg, sampler, sizes)

        upsilon_pos = upsilon_neg = None
        if state is not None and cfg.diag_every > 0 and (epoch + 1) % cfg.diag_every == 0:
            upsilon_pos, upsilon_neg = state.error_report(p, ds_train)

        train_auc = dataset_auc(p, ds_train, kind)
        val_auc = dataset_auc(p, ds_val, kind)
        row = MetricsRow(epoch=epoch + 1,
                         train_auc=train_auc,
                         val_auc=val_auc,
                         test_auc=dataset_auc(p, ds_test, kind),
                         objective=eval_full(p, ds_train, kind, cfg.margin_cfg).total,
                         upsilon_pos=upsilon_pos,
                         upsilon_neg=upsilon_neg,
                         alpha=p.alpha,
                         lr=sizes.eta,
                         wall_ms=int((time.perf_counter() - start) * 1000))
        rows.append(row)
        logger.info(f"epoch {row.epoch}: train_auc={train_auc:.4f} val_auc={val_auc} "
                    f"objective={row.objective:.6f} alpha={p.alpha:.4f} lr={sizes.eta:g}")
        if on_epoch is not None:
            on_epoch(row)

        score = val_auc if val_auc is not None else train_auc
        if score > best_score:
            best, best_score = p.copy(), score
            best_state = None if state is None else state.copy()

        if checkpoint_dir is not None and cfg.checkpoint_every > 0 and (epoch + 1) % cfg.checkpoint_every == 0:
            save_checkpoint(os.path.join(checkpoint_dir, f"checkpoint_epoch{epoch + 1}.npz"), p, state)

    if checkpoint_dir is not None:
        save_checkpoint(os.path.join(checkpoint_dir, "checkpoint.npz"), best, best_state)
    return best, rows
