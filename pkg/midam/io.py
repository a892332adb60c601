# coding: utf-8

r"""Read and write for datasets, checkpoints, metrics and configuration files."""

import collections
import logging
import os
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from midam.bags import Bag, BagDataset
from midam.exceptions import EmptyDatasetError, IntegrityError, ParseError
from midam.model import WEIGHT_NAMES, ModelParams
from midam.pooling import PoolKind
from midam.vrsp import PoolState

logger = logging.getLogger(__name__)

DEFAULT_SCHEMA = {"bag_id": 0, "label": 1}

METRICS_COLUMNS = ("epoch", "train_auc", "val_auc", "test_auc", "objective",
                   "upsilon_pos", "upsilon_neg", "alpha", "lr", "wall_ms")


def _data_lines(filename: str) -> List[Tuple[int, str]]:
    r"""(line number, stripped line) pairs, comment lines and empty lines removed."""
    with open(filename) as f:
        return [(number, line.strip()) for number, line in enumerate(f, start=1)
                if len(line.strip()) > 0 and not line.startswith("#")]


def _group_bags(rows: Iterable[Tuple[int, int, int, np.ndarray]], dim: int) -> BagDataset:
    r"""Group (line number, bag id, label, features) rows by bag id, in order of first appearance."""
    labels = dict()
    instances = collections.OrderedDict()
    for number, bag_id, label, features in rows:
        if bag_id in labels and labels[bag_id] != label:
            msg = f"line {number}: bag {bag_id} labeled both {labels[bag_id]} and {label}"
            logger.error(msg)
            raise IntegrityError(msg)
        labels[bag_id] = label
        instances.setdefault(bag_id, list()).append(features)

    if len(instances) == 0:
        msg = "the dataset file holds no instance"
        logger.error(msg)
        raise EmptyDatasetError(msg)

    bags = [Bag(id=bag_id, label=labels[bag_id], instances=np.vstack(rows))
            for bag_id, rows in instances.items()]
    return BagDataset(bags, dim=dim)


def load_csv(filename: str,
             schema: Optional[Mapping[str, int]] = None,
             header: bool = False) -> BagDataset:
    r"""Load a dataset from a one-instance-per-row CSV file.

    Parameters
    ----------
    filename : Path to the file
        The file has the following format:
        # comment
        bag_id, label, f0, f1, ..., f{d-1}
        ...
        Bags are groups of rows sharing a bag_id; all rows of a bag carry the same label (0 or 1).
    schema : column positions of "bag_id" and "label". The remaining columns are the features,
             in file order. DEFAULT_SCHEMA if None
    header : is the first data line a header to skip?

    Returns
    -------
    BagDataset, bags in order of first appearance, rows in file order within a bag

    """
    schema = dict(DEFAULT_SCHEMA if schema is None else schema)
    lines = _data_lines(filename)
    if header:
        lines = lines[1:]

    rows = list()
    dim = None
    for number, line in lines:
        parts = [part.strip() for part in line.split(",")]
        try:
            bag_id = int(parts[schema["bag_id"]])
            label = int(float(parts[schema["label"]]))
            features = np.array([float(v) for k, v in enumerate(parts)
                                 if k not in (schema["bag_id"], schema["label"])])
        except (ValueError, IndexError) as e:
            msg = f"line {number}: cannot parse {line!r} ({e})"
            logger.error(msg)
            raise ParseError(msg, line_number=number)
        if label not in (0, 1):
            msg = f"line {number}: label {label} should be 0 or 1"
            logger.error(msg)
            raise ParseError(msg, line_number=number)
        if dim is None:
            dim = len(features)
        if len(features) != dim or dim == 0:
            msg = f"line {number}: {len(features)} features, expected {dim}"
            logger.error(msg)
            raise ParseError(msg, line_number=number)
        if not np.all(np.isfinite(features)):
            msg = f"line {number}: non-finite feature value"
            logger.error(msg)
            raise ParseError(msg, line_number=number)
        rows.append((number, bag_id, label, features))

    ds = _group_bags(rows, dim)
    logger.info(f"loaded {ds} from {filename}")
    return ds


def save_csv(filename: str, ds: BagDataset, header: bool = False) -> None:
    r"""Write a dataset to a canonical CSV file (17 significant digits)."""
    with open(filename, 'w') as f:
        if header:
            f.write(",".join(["bag_id", "label"] + [f"f{k}" for k in range(ds.dim)]) + "\n")
        for bag in ds.bags:
            for row in bag.instances:
                f.write(f"{bag.id},{bag.label}," + ",".join(f"{v:.17g}" for v in row) + "\n")


def load_musk(filename: str) -> BagDataset:
    r"""Load a MUSK-style file: molecule_name, conformation_name, f1, ..., fd, class."""
    rows = list()
    bag_ids = dict()
    dim = None
    for number, line in _data_lines(filename):
        parts = [part.strip() for part in line.rstrip(".").split(",")]
        try:
            features = np.array([float(v) for v in parts[2:-1]])
            label = int(float(parts[-1]))
        except (ValueError, IndexError) as e:
            msg = f"line {number}: cannot parse MUSK row ({e})"
            logger.error(msg)
            raise ParseError(msg, line_number=number)
        if dim is None:
            dim = len(features)
        if len(features) != dim or dim == 0 or label not in (0, 1):
            msg = f"line {number}: malformed MUSK row"
            logger.error(msg)
            raise ParseError(msg, line_number=number)
        bag_id = bag_ids.setdefault(parts[0], len(bag_ids))
        rows.append((number, bag_id, label, features))
    return _group_bags(rows, dim)


def load_svmlight_mil(filename: str) -> BagDataset:
    r"""Load a sparse MIL file: lines 'instance_id:bag_id:label index:value ...'.

    Feature indices are 1-based, missing features are 0. A bag is positive if
    any of its instances is labeled positive (label > 0).

    """
    records = list()
    dim = 0
    for number, line in _data_lines(filename):
        tokens = line.split()
        try:
            _, bag_id, label = tokens[0].split(":")
            sparse = [(int(k), float(v)) for k, v in (t.split(":") for t in tokens[1:])]
        except ValueError as e:
            msg = f"line {number}: cannot parse sparse MIL row ({e})"
            logger.error(msg)
            raise ParseError(msg, line_number=number)
        if any(k < 1 for k, _ in sparse):
            msg = f"line {number}: feature indices should be >= 1"
            logger.error(msg)
            raise ParseError(msg, line_number=number)
        dim = max([dim] + [k for k, _ in sparse])
        records.append((number, int(bag_id), 1 if float(label) > 0 else 0, sparse))

    bag_labels = dict()
    for _, bag_id, label, _ in records:
        bag_labels[bag_id] = max(label, bag_labels.get(bag_id, 0))

    rows = list()
    for number, bag_id, _, sparse in records:
        features = np.zeros(dim)
        for k, v in sparse:
            features[k - 1] = v
        rows.append((number, bag_id, bag_labels[bag_id], features))
    return _group_bags(rows, dim)


CONVERTERS = {"musk": load_musk, "svmlight": load_svmlight_mil, "csv": load_csv}


def convert(input_filename: str, output_filename: str, fmt: str) -> BagDataset:
    r"""Convert a MUSK / sparse MIL file to the canonical CSV format."""
    if fmt not in CONVERTERS:
        msg = f"unknown input format {fmt}, should be one of {sorted(CONVERTERS)}"
        logger.error(msg)
        raise ValueError(msg)
    ds = CONVERTERS[fmt](input_filename)
    save_csv(output_filename, ds)
    return ds


def save_checkpoint(filename: str, p: ModelParams, state: Optional[PoolState] = None) -> None:
    r"""Save parameters (and the VRSP state) as a .npz archive of named arrays.

    Keys: W1, b1, w_c, c0, V, w_a, a, b, alpha; with a state also
    state_s (one row per bag), state_visited, state_kind, state_tau, state_gamma0.

    """
    arrays = {name: np.asarray(getattr(p, name)) for name in WEIGHT_NAMES + ('a', 'b', 'alpha')}
    if state is not None:
        arrays.update(state_s=state.values, state_visited=state.visited,
                      state_kind=np.array(state.kind.name), state_tau=np.array(state.kind.tau),
                      state_gamma0=np.array(state.gamma0))
    with open(filename, 'wb') as f:
        np.savez(f, **arrays)
    logger.debug(f"checkpoint written to {filename}")


def load_checkpoint(filename: str) -> Tuple[ModelParams, Optional[PoolState]]:
    r"""Inverse of save_checkpoint."""
    with np.load(filename) as archive:
        values = {name: archive[name] for name in archive.files}
    p = ModelParams(**{name: np.array(values[name]) for name in ('W1', 'b1', 'w_c', 'V', 'w_a')},
                    c0=float(values['c0']), a=float(values['a']), b=float(values['b']),
                    alpha=float(values['alpha']))
    state = None
    if 'state_s' in values:
        kind = PoolKind(str(values['state_kind']), float(values['state_tau']))
        state = PoolState(values['state_s'].shape[0], kind, float(values['state_gamma0']))
        state.values[:] = values['state_s']
        state.visited[:] = values['state_visited']
    return p, state


def _format_metric(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics(filename: str, rows: Iterable, append: bool = False) -> None:
    r"""Write MetricsRow records as CSV with the METRICS_COLUMNS header. None is written empty."""
    exists = append and os.path.isfile(filename)
    with open(filename, 'a' if append else 'w') as f:
        if not exists:
            f.write(",".join(METRICS_COLUMNS) + "\n")
        for row in rows:
            f.write(",".join(_format_metric(v) for v in row) + "\n")


def read_config_file(filename: str) -> Dict[str, str]:
    r"""Read a flat 'key=value' configuration file (comments start with #)."""
    values = dict()
    for number, line in _data_lines(filename):
        if "=" not in line:
            msg = f"line {number}: expected key=value, got {line!r}"
            logger.error(msg)
            raise ParseError(msg, line_number=number)
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def write_config_file(filename: str, lines: Iterable[str], comment: Optional[str] = None) -> None:
    with open(filename, 'w') as f:
        if comment is not None:
            f.write(f"# {comment}\n")
        for line in lines:
            f.write(f"{line}\n")
