# coding: utf-8

r"""Command line interface: gen, convert, train, cv and diag subcommands.

Every TrainConfig field and run-level setting can be set as --key=value
(hyphens or underscores), after the values of an optional --config file of
key=value lines. The config.txt written in every run directory is such a
file: passing it back with --config repeats the run on the same split.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.

"""

import argparse
import json
import logging
import os
import sys
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple

from midam import __version__
from midam.bags import BagDataset, Standardizer, describe, generate_synthetic, stratified_split
from midam.config import TrainConfig, format_value
from midam.constants import OUTDIR_DEFAULT, OUTDIR_ENV_VAR, SYNTHETIC_BENCHMARK_DATA
from midam.crossval import format_summary, prepare_split, run_cv, summary_dict
from midam.diagnostics import budget_grid, epochs_to_reach, frozen_model_comparison, \
    instance_batch_sweep, run_grid
from midam.evaluation import dataset_auc
from midam.exceptions import UsageError
from midam.io import convert, load_csv, read_config_file, save_csv, write_config_file, \
    write_metrics
from midam.model import init_params
from midam.pooling import PoolKind
from midam.trainer import train

logger = logging.getLogger(__name__)

# Run-level settings accepted in configuration files and overrides besides the
# TrainConfig fields: name -> (type, default). Flags given on the command line win.
RUN_SETTINGS = {"standardize": (bool, True),
                "dataset": (str, None),
                "header": (bool, False),
                "folds": (int, 5),
                "test_frac": (float, 0.1),
                "fold": (int, 0),
                "split_seed": (int, 0),
                "seeds": (int, 3),
                "threads": (int, 1)}

_TRUE = ("1", "true", "yes", "on")


class ArgumentParser(argparse.ArgumentParser):
    r"""argparse parser raising UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--config", help="key=value configuration file, overridden by --key=value flags")
    common.add_argument("--outdir", help=f"output directory (default: ${OUTDIR_ENV_VAR} or {OUTDIR_DEFAULT})")
    common.add_argument("--run-id", help="name of the run directory (default: subcommand and time stamp)")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    data = ArgumentParser(add_help=False, allow_abbrev=False)
    data.add_argument("--dataset", help="canonical CSV dataset (bag_id, label, f0, ..., f{d-1})")
    data.add_argument("--header", action="store_true", default=None, help="the dataset CSV has a header line")
    data.add_argument("--folds", type=int, help="validation folds (default: 5)")
    data.add_argument("--test-frac", type=float, help="per-class test proportion (default: 0.1)")
    data.add_argument("--no-standardize", action="store_true", help="keep the raw feature values")
    data.add_argument("--threads", type=int,
                      help="worker processes of cv trials and diag grid cells (default: 1, bit-reproducible)")

    parser = ArgumentParser(prog="midam", allow_abbrev=False,
                            description="Multi-instance deep AUC maximization with variance-reduced pooling")
    parser.add_argument("--version", action="version", version=f"midam {__version__}")
    subparsers = parser.add_subparsers(dest="command")

    gen = subparsers.add_parser("gen", parents=[common], allow_abbrev=False,
                                help="generate a synthetic witness dataset")
    gen.add_argument("--output", required=True)
    gen.add_argument("--n-pos", type=int, default=SYNTHETIC_BENCHMARK_DATA["n_pos"])
    gen.add_argument("--n-neg", type=int, default=SYNTHETIC_BENCHMARK_DATA["n_neg"])
    gen.add_argument("--bag-size", type=int, default=SYNTHETIC_BENCHMARK_DATA["bag_size"])
    gen.add_argument("--dim", type=int, default=SYNTHETIC_BENCHMARK_DATA["d"])
    gen.add_argument("--witness-shift", type=float, default=SYNTHETIC_BENCHMARK_DATA["witness_shift"])
    gen.add_argument("--witness-count", type=int, default=SYNTHETIC_BENCHMARK_DATA["witness_count"])
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--header", action="store_true")

    conv = subparsers.add_parser("convert", parents=[common], allow_abbrev=False,
                                 help="convert a MUSK or sparse MIL file to the canonical CSV")
    conv.add_argument("--input", required=True)
    conv.add_argument("--output", required=True)
    conv.add_argument("--format", default="musk", choices=["musk", "svmlight", "csv"])

    tr = subparsers.add_parser("train", parents=[common, data], allow_abbrev=False,
                               help="train on one (train, val, test) split")
    tr.add_argument("--fold", type=int, help="validation fold (default: 0)")
    tr.add_argument("--split-seed", type=int, help="seed of the test split (default: 0)")

    cv = subparsers.add_parser("cv", parents=[common, data], allow_abbrev=False,
                               help="cross-validation over folds and seeds")
    cv.add_argument("--seeds", type=int, help="number of test-split seeds (default: 3)")

    diag = subparsers.add_parser("diag", parents=[common, data], allow_abbrev=False,
                                 help="ablation grids and frozen-model estimator comparison")
    diag.add_argument("--grid", default="all", choices=["budget", "b", "all", "none"])
    diag.add_argument("--budget", type=int, default=64, help="S+ * B of the fixed-budget grid")
    diag.add_argument("--bag-batch", type=int, default=8, help="S+ = S- of the instance-batch sweep")
    diag.add_argument("--b-values", default="1,2,4", help="instance-batch sizes, full bags are added")
    diag.add_argument("--threshold", type=float, default=0.9, help="train AUC of the epochs-to-reach report")
    diag.add_argument("--rounds", type=int, default=500)
    diag.add_argument("--diag-seeds", type=int, default=20)
    diag.add_argument("--frozen-b", type=int, default=4)
    diag.add_argument("--frozen-gamma0", type=float, default=0.1)
    return parser


def parse_overrides(tokens: Sequence[str]) -> Dict[str, str]:
    r"""--key=value and --key value tokens to a {key: value} dict."""
    overrides = dict()
    tokens = list(tokens)
    k = 0
    while k < len(tokens):
        token = tokens[k]
        if not token.startswith("--") or len(token) == 2:
            raise UsageError(f"unexpected argument {token}")
        if "=" in token:
            key, value = token[2:].split("=", 1)
        elif k + 1 < len(tokens) and not tokens[k + 1].startswith("--"):
            key, value = token[2:], tokens[k + 1]
            k += 1
        else:
            raise UsageError(f"missing value for {token}")
        overrides[key.replace("-", "_")] = value
        k += 1
    return overrides


def _parse_run_value(key: str, text):
    kind = RUN_SETTINGS[key][0]
    text = str(text).strip()
    if kind is bool:
        return text.lower() in _TRUE
    try:
        return kind(text)
    except ValueError:
        raise UsageError(f"invalid value {text!r} for {key}")


def _format_run_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return format_value(value)


def resolve_config(config_file: Optional[str], overrides: Dict[str, str]) -> Tuple[TrainConfig, Dict[str, Any]]:
    r"""TrainConfig and run-level settings from defaults < config file < overrides."""
    values = dict()
    if config_file is not None:
        values.update({key.replace("-", "_"): value for key, value in read_config_file(config_file).items()})
    values.update(overrides)
    run = {key: default for key, (_, default) in RUN_SETTINGS.items()}
    run.update({key: _parse_run_value(key, values.pop(key)) for key in RUN_SETTINGS if key in values})
    try:
        cfg = TrainConfig.from_mapping(values)
    except (KeyError, ValueError) as e:
        raise UsageError(str(e).strip("'\""))
    return cfg, run


def _settle_run_settings(args, run: Dict[str, Any]) -> bool:
    r"""Fill the run-level flags absent from the command line with run. Returns standardize."""
    for key, value in run.items():
        if key in vars(args) and getattr(args, key) is None:
            setattr(args, key, value)
    if "threads" in vars(args) and args.threads < 1:
        raise UsageError("--threads should be >= 1")
    return run["standardize"] and not args.no_standardize


def _run_dir(args) -> str:
    outdir = args.outdir or os.environ.get(OUTDIR_ENV_VAR, OUTDIR_DEFAULT)
    run_id = args.run_id or f"{args.command}-{time.strftime('%Y%m%d-%H%M%S')}"
    path = os.path.join(outdir, run_id)
    os.makedirs(path, exist_ok=True)
    return path


def _echo_config(run_dir: str, cfg: TrainConfig, standardize: bool, args) -> None:
    r"""Write the resolved configuration and run-level settings, other flags as comment lines."""
    lines = cfg.to_lines() + [f"standardize={_format_run_value(standardize)}"]
    lines += [f"{key}={_format_run_value(getattr(args, key))}" for key in RUN_SETTINGS
              if key in vars(args) and getattr(args, key) is not None]
    settings = {key: value for key, value in sorted(vars(args).items())
                if key not in RUN_SETTINGS and key not in ("config", "outdir", "run_id", "log_level", "no_standardize")}
    lines += [f"# {key}={value}" for key, value in settings.items()]
    write_config_file(os.path.join(run_dir, "config.txt"), lines, comment=f"midam {__version__}")


def _load_dataset(args) -> BagDataset:
    if args.dataset is None:
        raise UsageError("--dataset is required")
    return load_csv(args.dataset, header=args.header)


def _write_summary(run_dir: str, lines: List[str]) -> None:
    with open(os.path.join(run_dir, "summary.txt"), "w") as f:
        for line in lines:
            f.write(f"{line}\n")
    print("\n".join(lines))


def gen_command(args) -> int:
    ds = generate_synthetic(args.n_pos, args.n_neg, args.bag_size, args.dim,
                            args.witness_shift, args.witness_count, args.seed)
    save_csv(args.output, ds, header=args.header)
    print(f"{args.output}: {describe(ds)}")
    return 0


def convert_command(args) -> int:
    ds = convert(args.input, args.output, args.format)
    print(f"{args.output}: {describe(ds)}")
    return 0


def train_command(cfg: TrainConfig, standardize: bool, args, run_dir: str) -> int:
    if not 0 <= args.fold < args.folds:
        raise UsageError(f"--fold should be in [0, {args.folds})")
    ds = _load_dataset(args)
    split = stratified_split(ds, args.folds, args.test_frac, args.split_seed)[args.fold]
    split = prepare_split(split, standardize)

    metrics = os.path.join(run_dir, "metrics.csv")
    write_metrics(metrics, [])
    best, rows = train(split.train, split.val, split.test, cfg, checkpoint_dir=run_dir,
                       on_epoch=lambda row: write_metrics(metrics, [row], append=True))

    test_auc = dataset_auc(best, split.test, cfg.kind)
    best_epoch = max(rows, key=lambda r: r.train_auc if r.val_auc is None else r.val_auc).epoch if rows else 0
    _write_summary(run_dir, [f"dataset: {describe(ds)}",
                             f"{cfg.label}: best validation epoch {best_epoch}, test AUC {test_auc:.4f}"])
    return 0


def cv_command(cfg: TrainConfig, standardize: bool, args, run_dir: str) -> int:
    if args.seeds < 1:
        raise UsageError("--seeds should be >= 1")
    ds = _load_dataset(args)

    def on_trial(result, rows):
        write_metrics(os.path.join(run_dir, f"metrics_seed{result.seed}_fold{result.fold}.csv"), rows)

    report = run_cv(ds, cfg, args.folds, list(range(args.seeds)), args.test_frac, standardize,
                    args.threads, on_trial)
    _write_summary(run_dir, [format_summary(report), json.dumps(summary_dict(report), indent=2)])
    return 0 if len(report.trials) > 0 else 2


def diag_command(cfg: TrainConfig, standardize: bool, args, run_dir: str) -> int:
    r"""Ablation grids (one metrics CSV per cell) and the frozen-model VRSP / naive comparison."""
    if args.dataset is None:
        ds = generate_synthetic(seed=cfg.seed, **SYNTHETIC_BENCHMARK_DATA)
    else:
        ds = _load_dataset(args)
    if standardize:
        ds = Standardizer().fit(ds).transform(ds)

    try:
        b_values = [int(v) for v in args.b_values.split(",") if v.strip() != ""]
    except ValueError:
        raise UsageError(f"--b-values should be comma-separated integers, got {args.b_values}")

    cells = list()
    if args.grid in ("budget", "all"):
        try:
            cells += budget_grid(args.budget)
        except ValueError as e:
            raise UsageError(str(e))
    if args.grid in ("b", "all"):
        cells += [(args.bag_batch, b) for b in instance_batch_sweep(ds, b_values)]

    lines = [f"dataset: {describe(ds)}"]
    for (s, b), rows in run_grid(ds, None, cfg, list(dict.fromkeys(cells)), args.threads).items():
        write_metrics(os.path.join(run_dir, f"metrics_s{s}_b{b}.csv"), rows)
        lines.append(f"s={s} b={b}: epochs to train AUC {args.threshold}: "
                     f"{epochs_to_reach(rows, args.threshold)}")

    p = init_params(ds.dim, cfg.att_dim or None, seed=cfg.seed, scale=cfg.init_scale)
    for name in ("smx", "att"):
        result = frozen_model_comparison(p, ds, PoolKind.from_name(name, cfg.tau), args.frozen_b,
                                         args.frozen_gamma0, args.rounds, range(args.diag_seeds))
        verdict = "pass" if result.vrsp_error < result.naive_error else "fail"
        lines.append(f"frozen model {name} b={args.frozen_b} gamma0={args.frozen_gamma0}: "
                     f"vrsp {result.vrsp_error:.4e} naive {result.naive_error:.4e} {verdict}")
    _write_summary(run_dir, lines)
    return 0


_COMMANDS = {"train": train_command, "cv": cv_command, "diag": diag_command}


def parse_and_dispatch(argv: Sequence[str]) -> int:
    r"""Run the command line argv (without the program name) and return the exit code."""
    parser = build_parser()
    if len(argv) == 0:
        parser.print_usage(sys.stderr)
        return 1
    try:
        args, extras = parser.parse_known_args(list(argv))
        if args.command is None:
            raise UsageError("a subcommand is required")
        logging.basicConfig(level=getattr(logging, args.log_level),
                            format="%(asctime)s %(levelname)s %(name)s: %(message)s")
        overrides = parse_overrides(extras)

        if args.command in ("gen", "convert"):
            if overrides:
                raise UsageError(f"unknown arguments {extras}")
            return gen_command(args) if args.command == "gen" else convert_command(args)

        cfg, run = resolve_config(args.config, overrides)
        standardize = _settle_run_settings(args, run)
        run_dir = _run_dir(args)
        _echo_config(run_dir, cfg, standardize, args)
        logger.info(f"{args.command} run in {run_dir}")
        return _COMMANDS[args.command](cfg, standardize, args, run_dir)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"midam: error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:
        # --help and --version
        return e.code if isinstance(e.code, int) else 0
    except Exception as e:
        logger.exception(f"run failed: {e}")
        return 2


def main():
    sys.exit(parse_and_dispatch(sys.argv[1:]))
