#!/usr/bin/python
# coding: utf-8

r"""Tests for the config module."""

import pytest

from midam.config import TrainConfig, format_value, parse_values
from midam.pooling import PoolKind


def test_defaults():
    cfg = TrainConfig()
    assert cfg.method == 'midam'
    assert (cfg.s_pos, cfg.s_neg, cfg.b) == (8, 8, 4)
    assert cfg.lr_decay_epochs == (50, 75)
    assert cfg.kind == PoolKind.smoothed_max(0.1)
    assert cfg.resolved_optimizer == 'momentum'
    assert cfg.label == "midam (smx)"


def test_resolved_optimizer():
    assert TrainConfig(method='ce').resolved_optimizer == 'adam'
    assert TrainConfig(method='dam_mb').resolved_optimizer == 'momentum'
    assert TrainConfig(optimizer='adam', eta=1.).resolved_optimizer == 'adam'


@pytest.mark.parametrize("changes", [dict(method='sgd'),
                                     dict(pool='median'),
                                     dict(tau=0.),
                                     dict(gamma0=0.),
                                     dict(gamma0=1.5),
                                     dict(beta1=1.),
                                     dict(eta=0.5),
                                     dict(eta=-0.1),
                                     dict(epochs=-1),
                                     dict(b=0),
                                     dict(margin=0.),
                                     dict(estimator='late'),
                                     dict(optimizer='rmsprop')])
def test_invalid(changes):
    with pytest.raises(ValueError):
        _ = TrainConfig(**changes)


def test_large_eta_allowed_for_cross_entropy():
    assert TrainConfig(method='ce', eta=0.8).eta == 0.8


def test_with_overrides():
    cfg = TrainConfig().with_overrides({"pool": "att", "s-pos": "16", "eta": "0.05",
                                        "lr-decay-epochs": "10,20", "seed": "3"})
    assert cfg.pool == 'att'
    assert cfg.s_pos == 16
    assert cfg.eta == 0.05
    assert cfg.lr_decay_epochs == (10, 20)
    assert cfg.seed == 3


def test_unknown_key():
    with pytest.raises(KeyError):
        _ = TrainConfig().with_overrides({"learning-rate": "0.1"})


def test_bad_value():
    with pytest.raises(ValueError):
        _ = parse_values({"epochs": "many"})


def test_to_lines_round_trip():
    cfg = TrainConfig(pool='mean', eta=1. / 3., lr_decay_epochs=(), tau=0.25, seed=7)
    lines = cfg.to_lines()
    assert "pool=mean" in lines
    assert "lr_decay_epochs=" in lines
    assert TrainConfig.from_mapping(dict(line.split("=", 1) for line in lines)) == cfg


def test_format_value():
    assert format_value((50, 75)) == "50,75"
    assert format_value(0.1) == "0.1"
    assert format_value('smx') == "smx"
