# coding: utf-8

r"""Training configuration and its flat key=value representation."""

import dataclasses
import logging
from typing import Dict, List, Mapping, Tuple

from midam.constants import MARGIN_DEFAULT, OMEGA_UPPER_DEFAULT, TAU_DEFAULT, WEIGHT_DECAY_DEFAULT
from midam.objective import MarginConfig
from midam.optim import OPTIMIZERS
from midam.pooling import PoolKind

logger = logging.getLogger(__name__)

METHODS = ('midam', 'dam_mb', 'ce')

ESTIMATOR_TIMINGS = ('pre', 'post')


@dataclasses.dataclass(frozen=True)
class TrainConfig(object):
    r"""Complete configuration of a training run.

    Defaults follow the tabular protocol: 100 epochs, learning rate divided by
    10 at epochs 50 and 75, eta' = 1 and 1 - beta1 = 0.9 divided by 2 at the
    same epochs, weight decay 1e-4, margin 0.1, 8 + 8 bags of at most 4
    instances per step.

    """
    method: str = 'midam'
    pool: str = 'smx'
    tau: float = TAU_DEFAULT
    s_pos: int = 8
    s_neg: int = 8
    b: int = 4
    eta: float = 0.1
    eta_prime: float = 1.
    beta1: float = 0.1
    gamma0: float = 0.9
    epochs: int = 100
    lr_decay_epochs: Tuple[int, ...] = (50, 75)
    lr_decay_factor: float = 10.
    mom_gamma_decay_factor: float = 2.
    weight_decay: float = WEIGHT_DECAY_DEFAULT
    margin: float = MARGIN_DEFAULT
    omega_upper: float = OMEGA_UPPER_DEFAULT
    optimizer: str = 'auto'
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    init_scale: float = 1.
    att_dim: int = 0
    estimator: str = 'pre'
    diag_every: int = 0
    checkpoint_every: int = 0

    def __post_init__(self):
        checks = [(self.method in METHODS, f"method should be one of {METHODS}"),
                  (self.estimator in ESTIMATOR_TIMINGS, f"estimator should be one of {ESTIMATOR_TIMINGS}"),
                  (self.optimizer in OPTIMIZERS + ('auto',), f"optimizer should be one of {OPTIMIZERS} or auto"),
                  (self.eta > 0., "eta should be > 0"),
                  (self.eta_prime > 0., "eta_prime should be > 0"),
                  (0. < self.gamma0 <= 1., "gamma0 should be in (0, 1]"),
                  (0. <= self.beta1 < 1., "beta1 should be in [0, 1)"),
                  (self.epochs >= 0, "epochs should be >= 0"),
                  (self.s_pos >= 1 and self.s_neg >= 1 and self.b >= 1, "s_pos, s_neg and b should be >= 1"),
                  (self.lr_decay_factor > 0. and self.mom_gamma_decay_factor > 0., "decay factors should be > 0"),
                  (self.weight_decay >= 0., "weight_decay should be >= 0")]
        if self.method != 'ce' and self.resolved_optimizer == 'momentum':
            checks.append((self.eta < 0.5, "eta should be < 0.5 for the momentum update of a and b"))
        for ok, msg in checks:
            if not ok:
                logger.error(msg)
                raise ValueError(msg)
        # raises on unknown pooling / invalid tau or margin
        _ = self.kind
        _ = self.margin_cfg

    @property
    def kind(self) -> PoolKind:
        return PoolKind.from_name(self.pool, self.tau)

    @property
    def margin_cfg(self) -> MarginConfig:
        return MarginConfig(self.margin, self.omega_upper)

    @property
    def resolved_optimizer(self) -> str:
        r"""Adam for the cross-entropy baseline, momentum otherwise, unless set explicitly."""
        if self.optimizer != 'auto':
            return self.optimizer
        return 'adam' if self.method == 'ce' else 'momentum'

    @property
    def label(self) -> str:
        r"""Report label such as 'midam (smx)'."""
        return f"{self.method} ({self.kind.name})"

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def with_overrides(self, overrides: Mapping[str, str]) -> "TrainConfig":
        r"""A copy with textual overrides applied. Unknown keys raise KeyError."""
        return self.replace(**parse_values(overrides))

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "TrainConfig":
        return cls().with_overrides(values)

    def to_lines(self) -> List[str]:
        r"""key=value lines, one per field, in declaration order."""
        return [f"{field.name}={format_value(getattr(self, field.name))}"
                for field in dataclasses.fields(self)]


_FIELDS = {field.name: field for field in dataclasses.fields(TrainConfig)}


def format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_values(values: Mapping[str, str]) -> Dict:
    r"""Convert textual values to the types of the TrainConfig fields."""
    parsed = dict()
    for raw_key, text in values.items():
        key = raw_key.replace("-", "_")
        if key not in _FIELDS:
            msg = f"unknown configuration key {raw_key}"
            logger.error(msg)
            raise KeyError(msg)
        default = _FIELDS[key].default
        text = str(text).strip()
        try:
            if isinstance(default, tuple):
                parsed[key] = tuple(int(v) for v in text.split(",") if v.strip() != "")
            elif isinstance(default, bool):
                parsed[key] = text.lower() in ("1", "true", "yes", "on")
            elif isinstance(default, int):
                parsed[key] = int(text)
            elif isinstance(default, float):
                parsed[key] = float(text)
            else:
                parsed[key] = text
        except ValueError:
            msg = f"invalid value {text!r} for configuration key {raw_key}"
            logger.error(msg)
            raise ValueError(msg)
    return parsed


# Settings under which MIDAM separates the synthetic witness benchmark within 50 epochs
SYNTHETIC_BENCHMARK = TrainConfig(epochs=50, s_pos=4, s_neg=4, b=4, eta=0.4, margin=1.0)
