# coding: utf-8

r"""Primal momentum / Adam-style updates and the projected dual ascent step."""

import dataclasses
import logging
import math
from typing import Optional

from midam.exceptions import NumericError
from midam.model import ModelParams, ParamGrad
from midam.objective import MarginConfig, project_alpha

logger = logging.getLogger(__name__)

OPTIMIZERS = ('momentum', 'adam')


@dataclasses.dataclass(eq=False)
class MomentumState(object):
    r"""Moving averages v of the (w, a, b) gradient estimates, plus Adam second moments."""
    v_w: ParamGrad
    v_a: float = 0.
    v_b: float = 0.
    m2_w: Optional[ParamGrad] = None
    m2_a: float = 0.
    m2_b: float = 0.
    step: int = 0

    @classmethod
    def zeros(cls, p: ModelParams, adam: bool = False) -> "MomentumState":
        return cls(v_w=ParamGrad.zeros(p.dim, p.att_dim),
                   m2_w=ParamGrad.zeros(p.dim, p.att_dim) if adam else None)

    def norm(self) -> float:
        r"""Euclidean norm of (v_w, v_a, v_b)."""
        return math.sqrt(self.v_w.norm() ** 2 + self.v_a ** 2 + self.v_b ** 2)


def primal_update(p: ModelParams,
                  g_w: ParamGrad,
                  g_a: float,
                  g_b: float,
                  mom: MomentumState,
                  eta: float,
                  beta1: float,
                  optimizer: str = 'momentum',
                  adam_beta2: float = 0.999,
                  adam_eps: float = 1e-8) -> ModelParams:
    r"""v <- beta1 v + (1 - beta1) G, then (w, a, b) <- (w, a, b) - eta v.

    With optimizer='adam', the step is divided by sqrt of the bias-corrected
    second moment plus adam_eps, per coordinate. mom is updated in place.

    """
    if optimizer not in OPTIMIZERS:
        msg = f"unknown optimizer {optimizer}, should be one of {OPTIMIZERS}"
        logger.error(msg)
        raise ValueError(msg)
    if not 0. <= beta1 < 1.:
        msg = f"beta1 ({beta1}) should be in [0, 1)"
        logger.error(msg)
        raise ValueError(msg)

    mom.step += 1
    mom.v_w = mom.v_w * beta1 + g_w * (1. - beta1)
    mom.v_a = beta1 * mom.v_a + (1. - beta1) * g_a
    mom.v_b = beta1 * mom.v_b + (1. - beta1) * g_b

    if optimizer == 'momentum':
        step_w, step_a, step_b = mom.v_w, mom.v_a, mom.v_b
    else:
        if mom.m2_w is None:
            mom.m2_w = ParamGrad.zeros(p.dim, p.att_dim)
        mom.m2_w = mom.m2_w * adam_beta2 + g_w.square() * (1. - adam_beta2)
        mom.m2_a = adam_beta2 * mom.m2_a + (1. - adam_beta2) * g_a ** 2
        mom.m2_b = adam_beta2 * mom.m2_b + (1. - adam_beta2) * g_b ** 2
        correction = 1. - adam_beta2 ** mom.step
        step_w = mom.v_w / (mom.m2_w * (1. / correction)).sqrt().shift(adam_eps)
        step_a = mom.v_a / (math.sqrt(mom.m2_a / correction) + adam_eps)
        step_b = mom.v_b / (math.sqrt(mom.m2_b / correction) + adam_eps)

    updated = p.with_weights(p.weights - step_w * eta)
    updated.a = p.a - eta * step_a
    updated.b = p.b - eta * step_b
    return updated


def dual_update(alpha: float, g_alpha: float, eta_prime: float, cfg: MarginConfig) -> float:
    r"""Projected ascent alpha <- clip(alpha + eta' (g_alpha - alpha), 0, omega_upper)."""
    alpha = project_alpha(alpha + eta_prime * (g_alpha - alpha), cfg)
    if not math.isfinite(alpha):
        msg = "non-finite dual variable alpha"
        logger.error(msg)
        raise NumericError(msg, name='alpha')
    return alpha
