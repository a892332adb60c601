# coding: utf-8

r"""Instance-level network with explicit backward passes.

The encoder is one tanh layer of width d (the input dimension):

    e(x)     = tanh(W1 x + b1)
    delta(x) = w_c . e(x) + c0
    phi(x)   = sigmoid(delta(x))
    g(x)     = w_a . tanh(V e(x))

phi is the instance score, g the attention logit and delta the unnormalized
score aggregated by attention pooling. Every function accepts a single
instance (shape (d,)) or a stack of instances (shape (n, d)); backward passes
return the gradient summed over the instances, in row order.

"""

import collections
import dataclasses
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit

from midam.constants import ATT_DIM_MIN, LOGIT_CLAMP
from midam.exceptions import NumericError, ShapeError

logger = logging.getLogger(__name__)

WEIGHT_NAMES = ('W1', 'b1', 'w_c', 'c0', 'V', 'w_a')

InstanceForward = collections.namedtuple('InstanceForward', 'hidden phi g_logit delta att_hidden')


@dataclasses.dataclass(eq=False)
class ParamGrad(object):
    r"""A tensor per network weight: gradients, momentum buffers, weight deltas."""
    W1: np.ndarray
    b1: np.ndarray
    w_c: np.ndarray
    c0: float
    V: np.ndarray
    w_a: np.ndarray

    @classmethod
    def zeros(cls, d: int, m: int) -> "ParamGrad":
        return cls(W1=np.zeros((d, d)), b1=np.zeros(d), w_c=np.zeros(d), c0=0.,
                   V=np.zeros((m, d)), w_a=np.zeros(m))

    def tensors(self) -> Tuple:
        return tuple(getattr(self, name) for name in WEIGHT_NAMES)

    def _map(self, func) -> "ParamGrad":
        return ParamGrad(*[func(t) for t in self.tensors()])

    def _zip(self, other: "ParamGrad", func) -> "ParamGrad":
        return ParamGrad(*[func(t, o) for t, o in zip(self.tensors(), other.tensors())])

    def __add__(self, other: "ParamGrad") -> "ParamGrad":
        return self._zip(other, lambda t, o: t + o)

    def __sub__(self, other: "ParamGrad") -> "ParamGrad":
        return self._zip(other, lambda t, o: t - o)

    def __mul__(self, factor: float) -> "ParamGrad":
        return self._map(lambda t: t * factor)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ParamGrad":
        if isinstance(other, ParamGrad):
            return self._zip(other, lambda t, o: t / o)
        return self._map(lambda t: t / other)

    def square(self) -> "ParamGrad":
        return self._map(lambda t: t * t)

    def sqrt(self) -> "ParamGrad":
        return self._map(np.sqrt)

    def shift(self, value: float) -> "ParamGrad":
        return self._map(lambda t: t + value)

    def flat(self) -> np.ndarray:
        r"""All entries in WEIGHT_NAMES order, as one vector."""
        return np.concatenate([np.ravel(t) for t in self.tensors()])

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat()))

    def first_non_finite(self) -> Optional[str]:
        r"""Name of the first tensor holding a non-finite value, None if all finite."""
        for name in WEIGHT_NAMES:
            if not np.all(np.isfinite(getattr(self, name))):
                return name
        return None


@dataclasses.dataclass(eq=False)
class ModelParams(object):
    r"""Network weights plus the AUC auxiliary scalars a, b and the dual variable alpha."""
    W1: np.ndarray
    b1: np.ndarray
    w_c: np.ndarray
    c0: float
    V: np.ndarray
    w_a: np.ndarray
    a: float = 0.
    b: float = 0.
    alpha: float = 0.

    @property
    def dim(self) -> int:
        return self.W1.shape[1]

    @property
    def att_dim(self) -> int:
        return self.V.shape[0]

    @property
    def weights(self) -> ParamGrad:
        r"""The network weights as a ParamGrad (arrays are shared, not copied)."""
        return ParamGrad(*[getattr(self, name) for name in WEIGHT_NAMES])

    def with_weights(self, weights: ParamGrad) -> "ModelParams":
        return dataclasses.replace(self, **{name: getattr(weights, name) for name in WEIGHT_NAMES})

    def copy(self) -> "ModelParams":
        return dataclasses.replace(self, **{name: np.copy(getattr(self, name))
                                            for name in WEIGHT_NAMES})

    def first_non_finite(self) -> Optional[str]:
        name = self.weights.first_non_finite()
        if name is not None:
            return name
        for name in ('a', 'b', 'alpha'):
            if not math.isfinite(getattr(self, name)):
                return name
        return None


def default_att_dim(d: int) -> int:
    r"""Attention hidden width: d / 2 rounded up, at least ATT_DIM_MIN."""
    return max(ATT_DIM_MIN, int(math.ceil(d / 2)))


def init_params(d: int, m: Optional[int] = None, seed: int = 0, scale: float = 1.) -> ModelParams:
    r"""Initialize the network with i.i.d. uniform weights.

    Parameters
    ----------
    d : input dimension, also the width of the hidden layer
    m : attention hidden width. default_att_dim(d) if None
    seed : RNG seed
    scale : weights are drawn in [-scale / sqrt(d), scale / sqrt(d)]

    """
    if d < 1:
        msg = "d should be >= 1"
        logger.error(msg)
        raise ValueError(msg)
    if m is None or m == 0:
        m = default_att_dim(d)
    if m < 1:
        msg = "m should be >= 1"
        logger.error(msg)
        raise ValueError(msg)

    rng = np.random.default_rng(seed)
    bound = scale * math.sqrt(1. / d)
    return ModelParams(W1=rng.uniform(-bound, bound, (d, d)),
                       b1=rng.uniform(-bound, bound, d),
                       w_c=rng.uniform(-bound, bound, d),
                       c0=float(rng.uniform(-bound, bound)),
                       V=rng.uniform(-bound, bound, (m, d)),
                       w_a=rng.uniform(-bound, bound, m))


def _as_rows(p: ModelParams, x) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    rows = np.atleast_2d(x)
    if rows.ndim != 2 or rows.shape[1] != p.dim:
        msg = f"instances of shape {x.shape} do not match the model dimension {p.dim}"
        logger.error(msg)
        raise ShapeError(msg)
    return rows, single


def _forward_rows(p: ModelParams, rows: np.ndarray) -> InstanceForward:
    hidden = np.tanh(rows @ p.W1.T + p.b1)
    delta = hidden @ p.w_c + p.c0
    att_hidden = np.tanh(hidden @ p.V.T)
    return InstanceForward(hidden=hidden,
                           phi=expit(delta),
                           g_logit=att_hidden @ p.w_a,
                           delta=delta,
                           att_hidden=att_hidden)


def forward(p: ModelParams, x) -> InstanceForward:
    r"""Forward pass for one instance (scalar outputs) or a stack of instances."""
    rows, single = _as_rows(p, x)
    fw = _forward_rows(p, rows)
    if single:
        return InstanceForward(hidden=fw.hidden[0], phi=float(fw.phi[0]), g_logit=float(fw.g_logit[0]),
                               delta=float(fw.delta[0]), att_hidden=fw.att_hidden[0])
    return fw


def _backward_rows(p: ModelParams,
                   rows: np.ndarray,
                   fw: InstanceForward,
                   up_delta: np.ndarray,
                   up_g: np.ndarray) -> ParamGrad:
    r"""Sum over rows of up_delta * d(delta)/dw + up_g * d(g)/dw."""
    d_att = (up_g[:, None] * p.w_a[None, :]) * (1. - fw.att_hidden ** 2)
    d_hidden = up_delta[:, None] * p.w_c[None, :] + d_att @ p.V
    d_pre = d_hidden * (1. - fw.hidden ** 2)
    return ParamGrad(W1=d_pre.T @ rows,
                     b1=d_pre.sum(axis=0),
                     w_c=fw.hidden.T @ up_delta,
                     c0=float(up_delta.sum()),
                     V=d_att.T @ fw.hidden,
                     w_a=fw.att_hidden.T @ up_g)


def _check_upstream(name: str, value, n: int) -> np.ndarray:
    value = np.broadcast_to(np.asarray(value, dtype=np.float64), (n,))
    if not np.all(np.isfinite(value)):
        msg = f"non-finite upstream gradient {name}"
        logger.error(msg)
        raise NumericError(msg, name=name)
    return value


def backward_phi(p: ModelParams, x, upstream) -> ParamGrad:
    r"""Vector-Jacobian product of phi: sum over instances of upstream * dphi/dw.

    upstream is a scalar or one value per instance.

    """
    rows, _ = _as_rows(p, x)
    fw = _forward_rows(p, rows)
    upstream = _check_upstream("upstream", upstream, rows.shape[0])
    return _backward_rows(p, rows, fw, upstream * fw.phi * (1. - fw.phi), np.zeros(rows.shape[0]))


def clamped_logit(g: np.ndarray) -> np.ndarray:
    r"""Attention logits clamped to [-LOGIT_CLAMP, LOGIT_CLAMP]."""
    return np.clip(g, -LOGIT_CLAMP, LOGIT_CLAMP)


def attention_terms(fw: InstanceForward) -> Tuple[np.ndarray, np.ndarray]:
    r"""Per-instance (exp(g) * delta, exp(g)), with clamped logits."""
    weight = np.exp(clamped_logit(fw.g_logit))
    return weight * fw.delta, weight


def backward_att_pair(p: ModelParams, x, up_num, up_den) -> ParamGrad:
    r"""Vector-Jacobian product of the attention pair (exp(g) * delta, exp(g)).

    Returns the sum over instances of up_num * d(exp(g) delta)/dw + up_den * d(exp(g))/dw.
    The logit clamp has zero gradient on its boundary and outside.

    """
    rows, _ = _as_rows(p, x)
    n = rows.shape[0]
    fw = _forward_rows(p, rows)
    up_num = _check_upstream("up_num", up_num, n)
    up_den = _check_upstream("up_den", up_den, n)
    weight = np.exp(clamped_logit(fw.g_logit))
    interior = np.abs(fw.g_logit) < LOGIT_CLAMP
    up_delta = up_num * weight
    up_g = (up_num * fw.delta + up_den) * weight * interior
    grad = _backward_rows(p, rows, fw, up_delta, up_g)
    bad = grad.first_non_finite()
    if bad is not None:
        msg = f"non-finite attention gradient in {bad}"
        logger.error(msg)
        raise NumericError(msg, name=bad)
    return grad
