import json

import numpy as np
import pytest

from apbench.datasets import (
    DatasetFormatError,
    DatasetIntegrityWarning,
    load_dataset,
    load_external_csv,
    read_manifest,
    read_ndjson,
    render_table,
    save_dataset,
    write_ndjson,
)
from apbench.synth import dataset_config, generate_dataset


@pytest.fixture
def small_dataset(tmp_path):
    cfg = dataset_config(7, seed=3, N=600, n_events=2, n_instances=2)
    instances = generate_dataset(cfg)
    save_dataset(tmp_path, instances, generator=cfg)
    return tmp_path, instances, cfg


def test_round_trip_is_exact(small_dataset):
    path, instances, cfg = small_dataset
    loaded = load_dataset(path)
    assert loaded == instances
    manifest = read_manifest(path)
    assert manifest["generator"] == cfg.to_dict()
    assert manifest["config_hash"] == cfg.digest()
    assert [e["M"] for e in manifest["instances"]] == [3, 3]


def test_bad_label_names_row(small_dataset):
    path, instances, _ = small_dataset
    csv_path = path / f"{instances[0].instance_id}.csv"
    lines = csv_path.read_text().splitlines()
    lines[3] = lines[3].rsplit(",", 1)[0] + ",2"
    csv_path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetFormatError, match="row 4"):
        load_dataset(path)


def test_nan_cell_rejected(small_dataset):
    path, instances, _ = small_dataset
    csv_path = path / f"{instances[1].instance_id}.csv"
    lines = csv_path.read_text().splitlines()
    lines[10] = "nan," + lines[10].split(",", 1)[1]
    csv_path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetFormatError, match="non-finite"):
        load_dataset(path)


def test_hash_mismatch_warns(small_dataset):
    path, instances, _ = small_dataset
    manifest = json.loads((path / "manifest.json").read_text())
    recorded = manifest["content_hash"]
    csv_path = path / f"{instances[0].instance_id}.csv"
    lines = csv_path.read_text().splitlines()
    lines[1] = "0.5," + lines[1].split(",", 1)[1]
    csv_path.write_text("\n".join(lines) + "\n")
    with pytest.warns(DatasetIntegrityWarning) as rec:
        load_dataset(path)
    assert recorded in str(rec[0].message)


def test_missing_manifest_and_wrong_format(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path)
    (tmp_path / "manifest.json").write_text('{"format": "x"}')
    with pytest.raises(DatasetFormatError):
        read_manifest(tmp_path)


def _external(tmp_path, n_rows=30, n_feat=38, extra=""):
    rng = np.random.default_rng(0)
    header = ["timestamp"] + [f"m{j}" for j in range(n_feat)] + ["label"]
    rows = [",".join(header)]
    for i in range(n_rows):
        feats = ",".join(f"{x:.6f}" for x in rng.random(n_feat))
        rows.append(f"{i},{feats},{int(i % 7 == 0)}")
    path = tmp_path / "machine-1-1.csv"
    path.write_text("\n".join(rows) + "\n" + extra)
    return path


def test_external_csv_multivariate(tmp_path):
    inst = load_external_csv(_external(tmp_path), exclude=("timestamp",))
    assert inst.n_features == 38 and inst.n_steps == 30
    assert inst.instance_id == "machine-1-1"
    assert inst.labels.sum() == 5


def test_external_csv_explicit_columns(tmp_path):
    inst = load_external_csv(_external(tmp_path), feature_columns=["m3", "m1"])
    assert inst.feature_names == ["m3", "m1"]


def test_external_csv_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DatasetFormatError, match="empty"):
        load_external_csv(empty)
    with pytest.raises(DatasetFormatError, match="label column"):
        load_external_csv(_external(tmp_path), label_column="anomaly")
    with pytest.raises(DatasetFormatError, match="not in header"):
        load_external_csv(_external(tmp_path), feature_columns=["nope"])
    ragged = _external(tmp_path, extra="1,2\n")
    with pytest.raises(DatasetFormatError, match="row 32"):
        load_external_csv(ragged)


def test_ndjson_round_trip(tmp_path):
    path = tmp_path / "m.ndjson"
    write_ndjson(path, [{"a": 1}])
    write_ndjson(path, [{"a": 2}, {"b": None}], append=True)
    assert read_ndjson(path) == [{"a": 1}, {"a": 2}, {"b": None}]


def test_render_table():
    text = render_table(
        [
            {"dataset": "Synthetic_1", "model": "FCN", "seed": 0, "mean_wasserstein": 0.001, "existence": 0.96,
             "mean_density": 0.97, "mean_lead_time": None, "mean_dice": 0.8},
        ]
    )
    lines = text.splitlines()
    assert lines[0].split()[:3] == ["Dataset", "Model", "Seed"]
    assert "0.960" in lines[2] and "-" in lines[2].split()
