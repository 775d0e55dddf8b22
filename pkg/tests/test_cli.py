import json

import pytest

from apbench import checks, cli
from apbench.datasets import read_ndjson


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_gen_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("gen", "--dataset", 3, "--seed", 5, "--out", a) == 0
    assert run("gen", "--dataset", 3, "--seed", 5, "--out", b) == 0
    for f in sorted(a.glob("*.csv")):
        assert f.read_bytes() == (b / f.name).read_bytes()
    assert json.loads((a / "manifest.json").read_text())["generator"]["dataset_id"] == 3


def test_gen_all(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path))
    assert run("gen", "--all", "--seed", 1) == 0
    dirs = sorted(p.name for p in (tmp_path / "data").iterdir())
    assert dirs == sorted(f"synthetic_{d}" for d in range(1, 11))


def test_bad_dataset_is_config_error(tmp_path, capsys):
    assert run("gen", "--dataset", 11, "--out", tmp_path) == cli.EXIT_CONFIG
    assert "1..10" in capsys.readouterr().err
    assert run("gen", "--out", tmp_path) == cli.EXIT_CONFIG


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"seed": 1, "bogus": 2}')
    assert run("gen", "--dataset", 1, "--config", cfg, "--out", tmp_path / "d") == cli.EXIT_CONFIG


def test_run_config_round_trip(tmp_path):
    rc = cli.RunConfig(seed=3, out="x", gen={"snr": 2.0}, train={"lr": 1e-3})
    rc.dump(tmp_path / "r.json")
    assert cli.RunConfig.load(tmp_path / "r.json") == rc


@pytest.fixture(scope="module")
def small_data(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    cfg = out / "cfg.json"
    cfg.write_text(json.dumps({"seed": 2, "gen": {"N": 1200, "n_events": 3, "n_instances": 2}}))
    assert run("gen", "--dataset", 1, "--config", cfg, "--out", out / "d") == 0
    return out / "d"


def test_train_eval_report(small_data, tmp_path, capsys):
    tr = tmp_path / "train"
    assert run("train", "--data", small_data, "--out", tr, "--epochs", 2, "--hidden", 16) == 0
    assert (tr / "checkpoint.txt").exists()
    assert len(read_ndjson(tr / "history.ndjson")) <= 2
    ev = tmp_path / "eval"
    assert run("eval", "--data", small_data, "--checkpoint", tr, "--out", ev, "--dump-windows") == 0
    rec = read_ndjson(ev / "metrics.ndjson")[0]
    assert rec["dataset"] == "Synthetic_1" and rec["model"] == "FCN"
    assert len(read_ndjson(ev / "windows.ndjson")) == rec["n_windows"]
    assert run("eval", "--data", small_data, "--model", "perfect", "--out", ev) == 0
    assert run("report", ev / "metrics.ndjson", "--out", tmp_path / "t.txt") == 0
    table = (tmp_path / "t.txt").read_text()
    assert "FCN" in table and "perfect" in table
    capsys.readouterr()


def test_rerun_gives_identical_checkpoint(small_data, tmp_path):
    for name in ("a", "b"):
        assert run("train", "--data", small_data, "--out", tmp_path / name, "--epochs", 1, "--hidden", 8) == 0
    assert (tmp_path / "a" / "checkpoint.txt").read_bytes() == (tmp_path / "b" / "checkpoint.txt").read_bytes()


def test_lr_zero_runs(small_data, tmp_path, caplog):
    with caplog.at_level("WARNING"):
        code = run("train", "--data", small_data, "--out", tmp_path, "--epochs", 1, "--hidden", 4, "--lr", 0)
    assert code == 0
    assert "lr=0" in caplog.text


def test_eval_missing_checkpoint(small_data, tmp_path):
    assert run("eval", "--data", small_data, "--checkpoint", tmp_path / "none") == cli.EXIT_CONFIG


def test_check_passes(capsys):
    assert run("check") == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 5


def test_check_catches_sign_flip():
    def flipped(pred, target, normalization="full"):
        from apbench.loss import wasserstein_grad

        return -wasserstein_grad(pred, target, normalization)

    results = checks.run_all(loss_grad_fn=flipped)
    assert not results[1].passed
