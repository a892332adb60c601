# coding: utf-8

r"""Pooling of instance scores into a bag prediction.

Smoothed-max, attention and mean pooling are compositions h = f2(f1(w; X))
where the inner function f1 is a mean over instances:

    smx   f1 = mean exp(phi / tau)                     f2(s) = tau log(s)
    att   f1 = (mean exp(g) delta, mean exp(g))        f2(s) = sigmoid(s1 / s2)
    mean  f1 = mean phi                                f2(s) = s

Max pooling has no such decomposition. Reductions always run over instance
indices in ascending order.

"""

import dataclasses
import logging
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit, logsumexp, softmax

from midam.bags import Bag
from midam.constants import EPS_DEN, TAU_DEFAULT
from midam.exceptions import NumericError
from midam.model import ModelParams, ParamGrad, attention_terms, backward_att_pair, backward_phi, \
    clamped_logit, forward

logger = logging.getLogger(__name__)

InnerValue = Union[float, np.ndarray]

_ALIASES = {'mean': 'mean', 'max': 'max',
            'smx': 'smx', 'smoothed_max': 'smx',
            'att': 'att', 'attention': 'att'}


@dataclasses.dataclass(frozen=True)
class PoolKind(object):
    r"""A pooling operator: 'mean', 'max', 'smx' (smoothed-max, temperature tau) or 'att'."""
    name: str
    tau: float = TAU_DEFAULT

    def __post_init__(self):
        if self.name not in _ALIASES.values():
            msg = f"unknown pooling {self.name}"
            logger.error(msg)
            raise ValueError(msg)
        if self.name == 'smx' and not self.tau > 0.:
            msg = "tau should be > 0 for smoothed-max pooling"
            logger.error(msg)
            raise ValueError(msg)

    @classmethod
    def from_name(cls, name: str, tau: float = TAU_DEFAULT) -> "PoolKind":
        try:
            return cls(_ALIASES[name], tau)
        except KeyError:
            msg = f"unknown pooling {name}, should be one of {sorted(_ALIASES)}"
            logger.error(msg)
            raise ValueError(msg)

    @classmethod
    def mean(cls) -> "PoolKind":
        return cls('mean')

    @classmethod
    def max(cls) -> "PoolKind":
        return cls('max')

    @classmethod
    def smoothed_max(cls, tau: float = TAU_DEFAULT) -> "PoolKind":
        return cls('smx', tau)

    @classmethod
    def attention(cls) -> "PoolKind":
        return cls('att')

    @property
    def decomposable(self) -> bool:
        r"""True when the pooling is f2(f1) with f1 a mean over instances."""
        return self.name != 'max'

    @property
    def inner_size(self) -> int:
        r"""Size of the inner value: 2 for attention, 1 otherwise."""
        return 2 if self.name == 'att' else 1


def _rows(bag: Bag, subset: Optional[Sequence[int]]) -> np.ndarray:
    if subset is None:
        return bag.instances
    subset = np.sort(np.asarray(subset, dtype=int))
    if subset.size == 0:
        msg = f"empty instance subset for bag {bag.id}"
        logger.error(msg)
        raise ValueError(msg)
    return bag.instances[subset]


def inner_f1(p: ModelParams, bag: Bag, subset: Optional[Sequence[int]], kind: PoolKind) -> InnerValue:
    r"""Inner function f1 over the instances of subset (the full bag if None)."""
    if not kind.decomposable:
        msg = f"{kind.name} pooling has no inner function"
        logger.error(msg)
        raise ValueError(msg)
    rows = _rows(bag, subset)
    fw = forward(p, rows)
    if kind.name == 'smx':
        return float(np.mean(np.exp(fw.phi / kind.tau)))
    if kind.name == 'mean':
        return float(np.mean(fw.phi))
    numerator, denominator = attention_terms(fw)
    return np.array([np.mean(numerator), np.mean(denominator)])


def _check_inner(s: InnerValue, kind: PoolKind) -> Tuple[float, float]:
    r"""Validate s against the domain of f2. Returns (s1, s2) with s2 floored (att), (s, 1) else."""
    if kind.name == 'att':
        s1, s2 = float(s[0]), float(s[1])
        if not math.isfinite(s1):
            msg = f"attention numerator s1={s1} is not finite"
            logger.error(msg)
            raise NumericError(msg, name='s1')
        if not (math.isfinite(s2) and s2 > 0.):
            msg = f"attention denominator s2={s2} should be finite and > 0"
            logger.error(msg)
            raise NumericError(msg, name='s2')
        return s1, max(s2, EPS_DEN)
    s = float(s)
    if not math.isfinite(s):
        msg = f"inner value s={s} is not finite"
        logger.error(msg)
        raise NumericError(msg, name='s')
    if kind.name == 'smx' and not s > 0.:
        msg = f"smoothed-max inner value s={s} should be > 0"
        logger.error(msg)
        raise NumericError(msg, name='s')
    return s, 1.


def outer_f2(s: InnerValue, kind: PoolKind) -> float:
    r"""Outer function f2 of the pooling."""
    if not kind.decomposable:
        msg = f"{kind.name} pooling has no outer function"
        logger.error(msg)
        raise ValueError(msg)
    s1, s2 = _check_inner(s, kind)
    if kind.name == 'smx':
        return kind.tau * math.log(s1)
    if kind.name == 'mean':
        return s1
    return float(expit(s1 / s2))


def pool(p: ModelParams, bag: Bag, subset: Optional[Sequence[int]], kind: PoolKind) -> float:
    r"""Pooled prediction over subset; over the full bag (subset None) it is h(w; X)."""
    rows = _rows(bag, subset)
    fw = forward(p, rows)
    if kind.name == 'mean':
        return float(np.mean(fw.phi))
    if kind.name == 'max':
        return float(np.max(fw.phi))
    if kind.name == 'smx':
        return float(kind.tau * (logsumexp(fw.phi / kind.tau) - math.log(rows.shape[0])))
    weights = softmax(clamped_logit(fw.g_logit))
    return float(expit(weights @ fw.delta))


def attention_weights(p: ModelParams, bag: Bag) -> Tuple[np.ndarray, np.ndarray]:
    r"""Attention weights and instance scores phi over the full bag."""
    fw = forward(p, bag.instances)
    return softmax(clamped_logit(fw.g_logit)), fw.phi


def pool_vjp(p: ModelParams,
             bag: Bag,
             subset: Optional[Sequence[int]],
             kind: PoolKind,
             s_eval: Optional[InnerValue],
             upstream: float,
             logit_upstream: bool = False) -> ParamGrad:
    r"""Stochastic gradient of the pooled prediction: grad f1(w; subset) . grad f2(s_eval) * upstream.

    Parameters
    ----------
    p : model
    bag : the bag
    subset : instance indices producing grad f1 (the full bag if None)
    kind : pooling
    s_eval : the inner value at which grad f2 is evaluated. inner_f1 over subset if None.
             Ignored by mean and max pooling.
    upstream : scalar multiplier
    logit_upstream : attention only, upstream is taken with respect to s1 / s2
                     (the sigmoid derivative is not applied)

    """
    if not math.isfinite(upstream):
        msg = f"non-finite upstream {upstream}"
        logger.error(msg)
        raise NumericError(msg, name='upstream')
    rows = _rows(bag, subset)
    n = rows.shape[0]

    if kind.name == 'mean':
        return backward_phi(p, rows, upstream / n)
    if kind.name == 'max':
        phi = forward(p, rows).phi
        # lowest index wins ties
        return backward_phi(p, rows[int(np.argmax(phi))], upstream)

    if s_eval is None:
        s_eval = inner_f1(p, bag, subset, kind)
    s1, s2 = _check_inner(s_eval, kind)

    if kind.name == 'smx':
        phi = forward(p, rows).phi
        return backward_phi(p, rows, upstream * np.exp(phi / kind.tau) / (s1 * n))

    ratio = s1 / s2
    if logit_upstream:
        d_ratio = upstream
    else:
        sig = expit(ratio)
        d_ratio = upstream * sig * (1. - sig)
    return backward_att_pair(p, rows, d_ratio / (s2 * n), -d_ratio * s1 / (s2 * s2 * n))
