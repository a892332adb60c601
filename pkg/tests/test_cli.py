#!/usr/bin/python
# coding: utf-8

r"""Tests for the cli module."""

import json
import os

import pytest

from midam.cli import parse_and_dispatch, parse_overrides, resolve_config
from midam.config import TrainConfig
from midam.exceptions import UsageError
from midam.io import load_checkpoint, load_csv, read_config_file
from tests._helpers import path_from_file

QUICK = ["--epochs=2", "--s-pos=2", "--s-neg=2", "--b=2"]


def _generate(tmp_path) -> str:
    dataset = os.path.join(str(tmp_path), "synthetic.csv")
    assert parse_and_dispatch(["gen", "--output", dataset, "--n-pos", "10", "--n-neg", "10",
                               "--bag-size", "4", "--dim", "3", "--seed", "1"]) == 0
    return dataset


def test_no_arguments():
    assert parse_and_dispatch([]) == 1


def test_missing_subcommand():
    assert parse_and_dispatch(["--log-level", "INFO"]) == 1


def test_unknown_key(tmp_path):
    dataset = _generate(tmp_path)
    assert parse_and_dispatch(["train", "--dataset", dataset, "--outdir", str(tmp_path),
                               "--learning-rate=0.1"]) == 1


def test_invalid_value(tmp_path):
    dataset = _generate(tmp_path)
    assert parse_and_dispatch(["train", "--dataset", dataset, "--outdir", str(tmp_path), "--eta=0.9"]) == 1


def test_version():
    assert parse_and_dispatch(["--version"]) == 0


def test_gen(tmp_path):
    ds = load_csv(_generate(tmp_path))
    assert (ds.n_pos, ds.n_neg, ds.dim) == (10, 10, 3)


def test_gen_rejects_overrides(tmp_path):
    assert parse_and_dispatch(["gen", "--output", os.path.join(str(tmp_path), "x.csv"), "--epochs=3"]) == 1


def test_convert(tmp_path):
    output = os.path.join(str(tmp_path), "musk.csv")
    assert parse_and_dispatch(["convert", "--input", path_from_file(__file__, "test_data_files/musk_sample.data"),
                               "--output", output, "--format", "musk"]) == 0
    ds = load_csv(output)
    assert (len(ds), ds.n_pos, ds.dim) == (3, 1, 4)


def test_train(tmp_path):
    dataset = _generate(tmp_path)
    code = parse_and_dispatch(["train", "--dataset", dataset, "--outdir", str(tmp_path), "--run-id", "run",
                               "--folds", "3", "--test-frac", "0.2", "--pool=att", "--seed=5"] + QUICK)
    assert code == 0
    run_dir = os.path.join(str(tmp_path), "run")
    for name in ("config.txt", "metrics.csv", "checkpoint.npz", "summary.txt"):
        assert os.path.isfile(os.path.join(run_dir, name))

    cfg, run = resolve_config(os.path.join(run_dir, "config.txt"), {})
    assert cfg == TrainConfig(pool='att', seed=5, epochs=2, s_pos=2, s_neg=2, b=2)
    assert run["standardize"]
    assert (run["dataset"], run["folds"], run["test_frac"], run["fold"], run["split_seed"]) == (dataset, 3, 0.2, 0, 0)

    _, state = load_checkpoint(os.path.join(run_dir, "checkpoint.npz"))
    assert state is not None and state.kind.name == 'att'
    assert read_config_file(os.path.join(run_dir, "config.txt"))["pool"] == "att"

    with open(os.path.join(run_dir, "metrics.csv")) as f:
        lines = f.read().splitlines()
    assert lines[0].startswith("epoch,train_auc,val_auc,test_auc")
    assert len(lines) == 3


def test_train_config_file(tmp_path):
    dataset = _generate(tmp_path)
    config = os.path.join(str(tmp_path), "cfg.txt")
    with open(config, "w") as f:
        f.write("# quick run\npool=mean\nepochs=5\nstandardize=false\n")
    code = parse_and_dispatch(["train", "--dataset", dataset, "--outdir", str(tmp_path), "--run-id", "run",
                               "--folds", "3", "--test-frac", "0.2", "--config", config, "--epochs=1"])
    assert code == 0
    cfg, run = resolve_config(os.path.join(str(tmp_path), "run", "config.txt"), {})
    assert cfg.pool == 'mean'
    assert cfg.epochs == 1
    assert not run["standardize"]


def test_train_bad_fold(tmp_path):
    dataset = _generate(tmp_path)
    assert parse_and_dispatch(["train", "--dataset", dataset, "--outdir", str(tmp_path),
                               "--folds", "3", "--fold", "3"] + QUICK) == 1


def test_train_missing_dataset(tmp_path):
    assert parse_and_dispatch(["train", "--dataset", os.path.join(str(tmp_path), "missing.csv"),
                               "--outdir", str(tmp_path)] + QUICK) == 2


def test_cv(tmp_path):
    dataset = _generate(tmp_path)
    code = parse_and_dispatch(["cv", "--dataset", dataset, "--outdir", str(tmp_path), "--run-id", "cv",
                               "--folds", "2", "--test-frac", "0.2", "--seeds", "2"] + QUICK)
    assert code == 0
    run_dir = os.path.join(str(tmp_path), "cv")
    for seed in range(2):
        for fold in range(2):
            assert os.path.isfile(os.path.join(run_dir, f"metrics_seed{seed}_fold{fold}.csv"))
    with open(os.path.join(run_dir, "summary.txt")) as f:
        first, rest = f.read().split("\n", 1)
    assert first.startswith("midam (smx): ")
    assert json.loads(rest)["trials"] == 4


def test_diag(tmp_path):
    dataset = _generate(tmp_path)
    code = parse_and_dispatch(["diag", "--dataset", dataset, "--outdir", str(tmp_path), "--run-id", "diag",
                               "--grid", "b", "--bag-batch", "2", "--b-values", "1",
                               "--rounds", "10", "--diag-seeds", "2", "--frozen-b", "2", "--threads", "1"] + QUICK)
    assert code == 0
    run_dir = os.path.join(str(tmp_path), "diag")
    assert os.path.isfile(os.path.join(run_dir, "metrics_s2_b1.csv"))
    assert os.path.isfile(os.path.join(run_dir, "metrics_s2_b4.csv"))
    with open(os.path.join(run_dir, "summary.txt")) as f:
        summary = f.read()
    assert "frozen model smx" in summary
    assert "frozen model att" in summary


def test_diag_bad_b_values(tmp_path):
    dataset = _generate(tmp_path)
    assert parse_and_dispatch(["diag", "--dataset", dataset, "--outdir", str(tmp_path),
                               "--grid", "none", "--b-values", "one"]) == 1


def test_outdir_environment(tmp_path, monkeypatch):
    dataset = _generate(tmp_path)
    outdir = os.path.join(str(tmp_path), "env")
    monkeypatch.setenv("MIDAM_OUTDIR", outdir)
    assert parse_and_dispatch(["train", "--dataset", dataset, "--run-id", "r",
                               "--folds", "3", "--test-frac", "0.2"] + QUICK) == 0
    assert os.path.isfile(os.path.join(outdir, "r", "summary.txt"))


def test_parse_overrides():
    assert parse_overrides(["--eta=0.05", "--s-pos", "4"]) == {"eta": "0.05", "s_pos": "4"}
    assert parse_overrides([]) == {}
    with pytest.raises(UsageError):
        _ = parse_overrides(["eta=0.05"])
    with pytest.raises(UsageError):
        _ = parse_overrides(["--eta"])


def test_resolve_config_run_keys():
    cfg, run = resolve_config(None, {"standardize": "no", "pool": "max", "folds": "4", "test_frac": "0.25"})
    assert cfg.pool == 'max'
    assert not run["standardize"]
    assert (run["folds"], run["test_frac"], run["fold"], run["threads"]) == (4, 0.25, 0, 1)
    assert run["dataset"] is None
    with pytest.raises(UsageError):
        _ = resolve_config(None, {"pol": "max"})
    with pytest.raises(UsageError):
        _ = resolve_config(None, {"folds": "four"})


def test_train_repeat_from_config(tmp_path):
    r"""The echoed config.txt alone repeats a run on the same split."""
    dataset = _generate(tmp_path)
    assert parse_and_dispatch(["train", "--dataset", dataset, "--outdir", str(tmp_path), "--run-id", "first",
                               "--folds", "3", "--test-frac", "0.2", "--fold", "2", "--split-seed", "7"] + QUICK) == 0
    first = os.path.join(str(tmp_path), "first")
    assert parse_and_dispatch(["train", "--outdir", str(tmp_path), "--run-id", "second",
                               "--config", os.path.join(first, "config.txt")]) == 0
    second = os.path.join(str(tmp_path), "second")

    settings = read_config_file(os.path.join(second, "config.txt"))
    assert (settings["fold"], settings["folds"], settings["split_seed"], settings["test_frac"]) == ("2", "3", "7", "0.2")
    assert settings["dataset"] == dataset
    with open(os.path.join(first, "summary.txt")) as f1, open(os.path.join(second, "summary.txt")) as f2:
        assert f1.read() == f2.read()


def test_threads_flag(tmp_path):
    dataset = _generate(tmp_path)
    assert parse_and_dispatch(["train", "--dataset", dataset, "--outdir", str(tmp_path), "--run-id", "t",
                               "--folds", "3", "--test-frac", "0.2", "--threads=1"] + QUICK) == 0
    assert read_config_file(os.path.join(str(tmp_path), "t", "config.txt"))["threads"] == "1"
    assert parse_and_dispatch(["train", "--dataset", dataset, "--outdir", str(tmp_path),
                               "--folds", "3", "--test-frac", "0.2", "--threads=0"] + QUICK) == 1
