# coding: utf-8

r"""Min-max AUC margin objective and its stochastic gradient estimators.

    F(w, a, b, alpha) = E_pos[(h - a)^2] + E_neg[(h - b)^2]
                        + alpha (c + E_neg[h] - E_pos[h]) - alpha^2 / 2

minimized over (w, a, b) and maximized over alpha in [0, omega_upper]. The
expectations are averages over positive and negative bags respectively.

"""

import collections
import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from midam.bags import BagDataset
from midam.constants import MARGIN_DEFAULT, OMEGA_UPPER_DEFAULT, PROB_CLAMP
from midam.model import ModelParams, ParamGrad
from midam.pooling import InnerValue, PoolKind, inner_f1, outer_f2, pool, pool_vjp
from midam.sampling import SampleBatch

logger = logging.getLogger(__name__)

GradEstimate = collections.namedtuple('GradEstimate', 'g_w g_a g_b g_alpha')

ObjectiveValue = collections.namedtuple('ObjectiveValue', 'f1_term f2_term f3_term total')


class MarginConfig(collections.namedtuple('MarginConfig', 'margin omega_upper')):
    r"""Margin c > 0 and the upper bound of the dual domain [0, omega_upper]."""
    __slots__ = ()

    def __new__(cls, margin: float = MARGIN_DEFAULT, omega_upper: float = OMEGA_UPPER_DEFAULT):
        if not margin > 0.:
            msg = "margin should be > 0"
            logger.error(msg)
            raise ValueError(msg)
        if not omega_upper > 0.:
            msg = "omega_upper should be > 0"
            logger.error(msg)
            raise ValueError(msg)
        if omega_upper < margin + 1.:
            logger.warning(f"omega_upper ({omega_upper}) is below margin + 1 ({margin + 1.})")
        return super().__new__(cls, float(margin), float(omega_upper))


def pool_dataset(p: ModelParams, ds: BagDataset, kind: PoolKind) -> np.ndarray:
    r"""Deterministic full-bag pooled predictions h(w; X_i), in bag order."""
    return np.array([pool(p, bag, None, kind) for bag in ds.bags])


def project_alpha(alpha: float, cfg: MarginConfig) -> float:
    r"""Projection onto [0, omega_upper]."""
    return float(min(max(alpha, 0.), cfg.omega_upper))


def eval_full(p: ModelParams, ds: BagDataset, kind: PoolKind, cfg: MarginConfig) -> ObjectiveValue:
    r"""Exact objective value with full-bag pooling over every bag of ds."""
    if ds.n_pos < 1 or ds.n_neg < 1:
        msg = "the objective needs at least one positive and one negative bag"
        logger.error(msg)
        raise ValueError(msg)
    h = pool_dataset(p, ds, kind)
    h_pos, h_neg = h[ds.pos_index], h[ds.neg_index]
    f1_term = float(np.mean((h_pos - p.a) ** 2))
    f2_term = float(np.mean((h_neg - p.b) ** 2))
    f3_term = float(p.alpha * (cfg.margin + np.mean(h_neg) - np.mean(h_pos)) - p.alpha ** 2 / 2.)
    return ObjectiveValue(f1_term, f2_term, f3_term, f1_term + f2_term + f3_term)


def optimal_alpha(mean_pos_h: float, mean_neg_h: float, cfg: MarginConfig) -> float:
    r"""Maximizer of alpha z - alpha^2 / 2 over [0, omega_upper], z = c + mean_neg - mean_pos."""
    return project_alpha(cfg.margin + mean_neg_h - mean_pos_h, cfg)


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def grad_estimators(p: ModelParams,
                    ds: BagDataset,
                    batch: SampleBatch,
                    kind: PoolKind,
                    cfg: MarginConfig,
                    estimates: Optional[Sequence[InnerValue]] = None) -> GradEstimate:
    r"""Stochastic gradients of the objective in (w, a, b, alpha).

    Parameters
    ----------
    p : model, including a, b and alpha
    ds : dataset the batch was sampled from
    batch : sampled bags and instance subsets
    kind : pooling
    cfg : margin configuration
    estimates : for each sampled bag (batch order), the inner value s_i at which f2 and its
                gradient are evaluated. When None, the fresh inner_f1 over the sampled
                subset is used (naive mini-batch pooling). Ignored by max pooling.

    """
    if batch.n_pos < 1 or len(batch.bag_ids) - batch.n_pos < 1:
        msg = "the batch should hold at least one positive and one negative bag"
        logger.error(msg)
        raise ValueError(msg)
    if estimates is not None and len(estimates) != len(batch.bag_ids):
        msg = "estimates should hold one inner value per sampled bag"
        logger.error(msg)
        raise ValueError(msg)

    n_pos = batch.n_pos
    n_neg = len(batch.bag_ids) - n_pos
    h_pos, h_neg = list(), list()
    g_w = ParamGrad.zeros(p.dim, p.att_dim)

    for k, (bag_id, subset) in enumerate(zip(batch.bag_ids, batch.per_bag_instances)):
        bag = ds.bags[bag_id]
        if kind.decomposable:
            s = estimates[k] if estimates is not None else inner_f1(p, bag, subset, kind)
            h = outer_f2(s, kind)
        else:
            s = None
            h = pool(p, bag, subset, kind)

        if k < n_pos:
            h_pos.append(h)
            upstream = (2. * (h - p.a) - p.alpha) / n_pos
        else:
            h_neg.append(h)
            upstream = (2. * (h - p.b) + p.alpha) / n_neg
        g_w = g_w + pool_vjp(p, bag, subset, kind, s, upstream)

    g_a = _mean([-2. * (h - p.a) for h in h_pos])
    g_b = _mean([-2. * (h - p.b) for h in h_neg])
    g_alpha = cfg.margin + _mean(h_neg) - _mean(h_pos)
    return GradEstimate(g_w=g_w, g_a=g_a, g_b=g_b, g_alpha=g_alpha)


def ce_loss_and_grad(p: ModelParams,
                     ds: BagDataset,
                     batch: SampleBatch,
                     kind: PoolKind) -> Tuple[float, ParamGrad]:
    r"""Binary cross-entropy of the mini-batch pooled predictions and its weight gradient."""
    if len(batch.bag_ids) == 0:
        msg = "empty batch"
        logger.error(msg)
        raise ValueError(msg)

    n = len(batch.bag_ids)
    losses = list()
    grad = ParamGrad.zeros(p.dim, p.att_dim)
    for bag_id, subset in zip(batch.bag_ids, batch.per_bag_instances):
        bag = ds.bags[bag_id]
        y = float(bag.label)
        h_raw = pool(p, bag, subset, kind)
        h = min(max(h_raw, PROB_CLAMP), 1. - PROB_CLAMP)
        losses.append(-(y * math.log(h) + (1. - y) * math.log(1. - h)))
        if kind.name == 'att':
            # sigmoid composed with the log-loss: d loss / d logit = h - y
            grad = grad + pool_vjp(p, bag, subset, kind, None, (h_raw - y) / n, logit_upstream=True)
        elif h == h_raw:
            # the clamped loss is flat: no gradient outside [PROB_CLAMP, 1 - PROB_CLAMP]
            grad = grad + pool_vjp(p, bag, subset, kind, None, (h - y) / (h * (1. - h)) / n)
    return _mean(losses), grad
