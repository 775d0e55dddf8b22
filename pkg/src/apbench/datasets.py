"""Dataset files, manifests, external CSV ingestion and NDJSON output.

A dataset directory holds one CSV per instance (header
``feature_0,...,feature_{M-1},label``, one row per time step, values written
with 17 significant digits) plus ``manifest.json``::

    {
      "format": "apbench-dataset",
      "version": 1,
      "source": "synthetic" | free-text note,
      "generator": GenConfig as a dict, or null,
      "config_hash": sha256 of the generator config, or null,
      "content_hash": sha256 over the instance files in listed order,
      "instances": [{"file", "instance_id", "N", "M", "feature_names", "label_column"}, ...]
    }
"""

import csv
import hashlib
import json
import math
import warnings
from pathlib import Path

import numpy as np

from .series import SeriesInstance

MANIFEST_NAME = "manifest.json"
MANIFEST_FORMAT = "apbench-dataset"
MANIFEST_VERSION = 1
LABEL_COLUMN = "label"


class DatasetFormatError(ValueError):
    pass


class DatasetIntegrityWarning(UserWarning):
    pass


def _fmt(x):
    return format(float(x), ".17g")


def write_instance_csv(path, instance):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(instance.feature_names) + [LABEL_COLUMN])
        for row, label in zip(instance.values, instance.labels):
            writer.writerow([_fmt(v) for v in row] + [int(label)])


def _content_hash(paths):
    h = hashlib.sha256()
    for p in paths:
        h.update(Path(p).read_bytes())
    return h.hexdigest()


def save_dataset(directory, instances, generator=None, source="synthetic"):
    """Write instances and a manifest to ``directory``; returns the manifest dict."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries, paths = [], []
    for inst in instances:
        name = f"{inst.instance_id}.csv"
        write_instance_csv(directory / name, inst)
        paths.append(directory / name)
        entries.append(
            {
                "file": name,
                "instance_id": inst.instance_id,
                "N": inst.n_steps,
                "M": inst.n_features,
                "feature_names": list(inst.feature_names),
                "label_column": LABEL_COLUMN,
            }
        )
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "source": source,
        "generator": generator.to_dict() if generator is not None else None,
        "config_hash": generator.digest() if generator is not None else None,
        "content_hash": _content_hash(paths),
        "instances": entries,
    }
    (directory / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def read_manifest(directory):
    path = Path(directory) / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {directory}")
    manifest = json.loads(path.read_text())
    if manifest.get("format") != MANIFEST_FORMAT:
        raise DatasetFormatError(f"{path}: not an {MANIFEST_FORMAT} manifest")
    if manifest.get("version") != MANIFEST_VERSION:
        raise DatasetFormatError(f"{path}: unsupported manifest version {manifest.get('version')}")
    return manifest


def _parse_float(cell, path, row, col):
    try:
        x = float(cell)
    except ValueError:
        raise DatasetFormatError(f"{path}: row {row}, column {col!r}: cannot parse {cell!r}") from None
    if not math.isfinite(x):
        raise DatasetFormatError(f"{path}: row {row}, column {col!r}: non-finite value {cell!r}")
    return x


def read_instance_csv(path, instance_id, feature_names, label_column=LABEL_COLUMN):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"instance file {path} is missing")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = list(feature_names) + [label_column]
        if header != expected:
            raise DatasetFormatError(f"{path}: header {header} does not match manifest columns {expected}")
        values, labels = [], []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise DatasetFormatError(f"{path}: row {row_no} has {len(row)} columns, expected {len(expected)}")
            values.append([_parse_float(c, path, row_no, n) for c, n in zip(row[:-1], feature_names)])
            if row[-1] not in ("0", "1"):
                raise DatasetFormatError(f"{path}: row {row_no}: label {row[-1]!r} is not 0 or 1")
            labels.append(int(row[-1]))
    if not values:
        raise DatasetFormatError(f"{path}: no data rows")
    return SeriesInstance(np.array(values), np.array(labels, dtype=np.int8), instance_id, list(feature_names))


def load_dataset(directory):
    directory = Path(directory)
    manifest = read_manifest(directory)
    instances, paths = [], []
    for entry in manifest["instances"]:
        path = directory / entry["file"]
        inst = read_instance_csv(path, entry["instance_id"], entry["feature_names"], entry["label_column"])
        if inst.n_steps != entry["N"] or inst.n_features != entry["M"]:
            raise DatasetFormatError(
                f"{path}: shape ({inst.n_steps}, {inst.n_features}) disagrees with manifest "
                f"({entry['N']}, {entry['M']})"
            )
        instances.append(inst)
        paths.append(path)
    actual = _content_hash(paths)
    if manifest.get("content_hash") and actual != manifest["content_hash"]:
        warnings.warn(
            f"{directory}: content hash {actual} does not match manifest {manifest['content_hash']}",
            DatasetIntegrityWarning,
            stacklevel=2,
        )
    return instances


def load_external_csv(path, label_column=LABEL_COLUMN, feature_columns=None, exclude=(), instance_id=None):
    """Read one CSV export (e.g. an SMD machine) as a SeriesInstance.

    Features default to every column except the label and ``exclude``.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise DatasetFormatError(f"{path}: empty file")
        if label_column not in header:
            raise DatasetFormatError(f"{path}: label column {label_column!r} not in header")
        if feature_columns is None:
            feature_columns = [c for c in header if c != label_column and c not in exclude]
        missing = [c for c in feature_columns if c not in header]
        if missing:
            raise DatasetFormatError(f"{path}: feature columns {missing} not in header")
        if not feature_columns:
            raise DatasetFormatError(f"{path}: no feature columns")
        f_idx = [header.index(c) for c in feature_columns]
        l_idx = header.index(label_column)
        values, labels = [], []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DatasetFormatError(f"{path}: row {row_no} has {len(row)} cells, header has {len(header)}")
            values.append([_parse_float(row[i], path, row_no, header[i]) for i in f_idx])
            lab = _parse_float(row[l_idx], path, row_no, label_column)
            if lab not in (0.0, 1.0):
                raise DatasetFormatError(f"{path}: row {row_no}: label {row[l_idx]!r} is not binary")
            labels.append(int(lab))
    if not values:
        raise DatasetFormatError(f"{path}: no data rows")
    return SeriesInstance(
        np.array(values), np.array(labels, dtype=np.int8), instance_id or path.stem, list(feature_columns)
    )


def write_ndjson(path, records, append=False):
    with open(path, "a" if append else "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_ndjson(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


TABLE_COLUMNS = (
    ("Wasserstein", "mean_wasserstein"),
    ("Existence", "existence"),
    ("Density", "mean_density"),
    ("Lead Time", "mean_lead_time"),
    ("Dice", "mean_dice"),
)


def render_table(records):
    """Plain-text table with one row per (dataset, model, seed) metrics record."""
    head = ["Dataset", "Model", "Seed"] + [name for name, _ in TABLE_COLUMNS]
    rows = []
    for rec in records:
        row = [str(rec.get("dataset", "")), str(rec.get("model", "")), str(rec.get("seed", ""))]
        for _, key in TABLE_COLUMNS:
            v = rec.get(key)
            row.append("-" if v is None else f"{v:.3f}")
        rows.append(row)
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in [head] + rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
