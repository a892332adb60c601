#!/usr/bin/python
# coding: utf-8

r"""Tests for the io module."""

import numpy as np
import pytest

from midam.bags import generate_synthetic
from midam.evaluation import MetricsRow
from midam.exceptions import EmptyDatasetError, IntegrityError, ParseError
from midam.io import METRICS_COLUMNS, convert, load_checkpoint, load_csv, load_musk, load_svmlight_mil, \
    read_config_file, save_checkpoint, save_csv, write_config_file, write_metrics
from midam.model import init_params
from midam.pooling import PoolKind
from midam.vrsp import PoolState
from tests._helpers import path_from_file


def test_load_csv():
    ds = load_csv(path_from_file(__file__, "test_data_files/tiny.csv"))
    assert len(ds) == 2
    assert ds.n_pos == 1
    assert ds.n_neg == 1
    assert ds.dim == 2
    first = ds.bags[0]
    assert first.id == 0
    assert first.instances.shape == (2, 2)
    # row order within a bag
    assert first.instances[0, 0] == 0.5
    assert first.instances[1, 1] == 0.9


def test_load_csv_header():
    ds = load_csv(path_from_file(__file__, "test_data_files/tiny_header.csv"), header=True)
    assert len(ds) == 3
    assert ds.n_pos == 1
    assert ds.n_neg == 2
    assert ds.bags[2].instances.shape == (2, 2)


def test_load_csv_schema():
    ds = load_csv(path_from_file(__file__, "test_data_files/tiny.csv"), schema={"bag_id": 0, "label": 1})
    assert len(ds) == 2


def test_load_csv_inconsistent_labels():
    with pytest.raises(IntegrityError):
        _ = load_csv(path_from_file(__file__, "test_data_files/mixed_labels.csv"))


def test_load_csv_malformed():
    with pytest.raises(ParseError) as info:
        _ = load_csv(path_from_file(__file__, "test_data_files/malformed.csv"))
    assert info.value.line_number == 2


def test_load_csv_empty():
    with pytest.raises(EmptyDatasetError):
        _ = load_csv(path_from_file(__file__, "test_data_files/empty.csv"))


def test_csv_write_read(tmp_path):
    ds = generate_synthetic(3, 2, 4, 3, 2.0, 1, seed=0)
    filename = str(tmp_path / "synthetic.csv")
    save_csv(filename, ds)
    loaded = load_csv(filename)
    assert len(loaded) == len(ds)
    for original, read in zip(ds.bags, loaded.bags):
        assert original.id == read.id
        assert original.label == read.label
        assert np.array_equal(original.instances, read.instances)


def test_load_musk():
    ds = load_musk(path_from_file(__file__, "test_data_files/musk_sample.data"))
    assert len(ds) == 3
    assert ds.n_pos == 1
    assert ds.n_neg == 2
    assert ds.dim == 4
    assert ds.bags[0].instances.shape == (2, 4)
    assert ds.bags[0].instances[1, 1] == -188.


def test_load_svmlight_mil():
    ds = load_svmlight_mil(path_from_file(__file__, "test_data_files/svmlight_sample.data"))
    assert len(ds) == 3
    assert ds.dim == 3
    # a bag is positive when one of its instances is
    assert ds.bags[0].label == 1
    assert ds.n_neg == 2
    assert np.array_equal(ds.bags[0].instances[0], np.array([0.5, 0., 1.]))
    assert np.array_equal(ds.bags[0].instances[1], np.array([0., 0.25, 0.]))


def test_convert(tmp_path):
    output = str(tmp_path / "musk.csv")
    ds = convert(path_from_file(__file__, "test_data_files/musk_sample.data"), output, "musk")
    loaded = load_csv(output)
    assert len(loaded) == len(ds)
    assert loaded.dim == 4


def test_convert_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        _ = convert(path_from_file(__file__, "test_data_files/tiny.csv"), str(tmp_path / "x.csv"), "arff")


def test_checkpoint(tmp_path):
    p = init_params(4, seed=3)
    p.a, p.b, p.alpha = 0.7, 0.2, 0.4
    state = PoolState(3, PoolKind.attention(), 0.5)
    state.update(1, np.array([0.3, 1.2]))

    filename = str(tmp_path / "checkpoint.npz")
    save_checkpoint(filename, p, state)
    loaded, loaded_state = load_checkpoint(filename)

    assert np.array_equal(loaded.W1, p.W1)
    assert np.array_equal(loaded.w_a, p.w_a)
    assert loaded.c0 == p.c0
    assert (loaded.a, loaded.b, loaded.alpha) == (0.7, 0.2, 0.4)
    assert loaded_state.kind == state.kind
    assert loaded_state.gamma0 == 0.5
    assert np.array_equal(loaded_state.values, state.values)
    assert list(loaded_state.visited) == [False, True, False]


def test_checkpoint_without_state(tmp_path):
    filename = str(tmp_path / "checkpoint.npz")
    save_checkpoint(filename, init_params(2))
    _, state = load_checkpoint(filename)
    assert state is None


def test_write_metrics(tmp_path):
    filename = str(tmp_path / "metrics.csv")
    row = MetricsRow(epoch=1, train_auc=0.75, val_auc=None, test_auc=0.5, objective=0.125,
                     upsilon_pos=None, upsilon_neg=None, alpha=0.1, lr=0.1, wall_ms=12)
    write_metrics(filename, [])
    write_metrics(filename, [row], append=True)
    write_metrics(filename, [row._replace(epoch=2)], append=True)
    with open(filename) as f:
        lines = f.read().splitlines()
    assert lines[0] == "epoch,train_auc,val_auc,test_auc,objective,upsilon_pos,upsilon_neg,alpha,lr,wall_ms"
    assert lines[0].split(",") == list(METRICS_COLUMNS)
    assert lines[1] == "1,0.75,,0.5,0.125,,,0.1,0.1,12"
    assert lines[2].startswith("2,")
    assert len(lines) == 3


def test_config_file(tmp_path):
    filename = str(tmp_path / "config.txt")
    write_config_file(filename, ["eta=0.05", "# not a value", "pool = att"], comment="test")
    values = read_config_file(filename)
    assert values == {"eta": "0.05", "pool": "att"}


def test_config_file_malformed(tmp_path):
    filename = str(tmp_path / "config.txt")
    write_config_file(filename, ["eta"])
    with pytest.raises(ParseError):
        _ = read_config_file(filename)
