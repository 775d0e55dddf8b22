"""``apbench`` command line: gen, train, eval, report, check.

Every stage reads an optional JSON config file (``--config``) whose
top-level keys are ``seed``, ``out`` and one section per subcommand
(``gen``, ``train``, ``eval``); explicit flags override it.  All randomness
comes from the root ``--seed``: dataset instance ``i`` uses
``SeedSequence([seed, i])`` and training uses ``seed`` for initialisation
and batch order.

Exit codes: 0 success, 1 runtime error, 2 configuration error,
3 verification failure.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import checks
from .datasets import load_dataset, read_manifest, read_ndjson, render_table, save_dataset, write_ndjson
from .estimators import ConstantForecaster, FCNForecaster, PerfectForecaster
from .harness import TrainConfig, evaluate, prepare_splits, train
from .synth import DATASET_TABLE, dataset_config, generate_dataset

logger = logging.getLogger("apbench")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2, 3
OUT_ENV = "APBENCH_OUT"
CHECKPOINT_NAME = "checkpoint.txt"
RUN_CONFIG_NAME = "run_config.json"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    out: str = None
    gen: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    eval: dict = field(default_factory=dict)

    SECTIONS = ("gen", "train", "eval")

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - {"seed", "out", *cls.SECTIONS}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path):
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def to_dict(self):
        return {"seed": self.seed, "out": self.out, "gen": self.gen, "train": self.train, "eval": self.eval}

    def dump(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def _default_out(name):
    return str(Path(os.environ.get(OUT_ENV, "runs")) / name)


def _merge(run, section, args, keys):
    """Section values from the config file, overridden by flags that were given."""
    merged = dict(getattr(run, section))
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _resolve(args):
    run = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        run.seed = args.seed
    if getattr(args, "out", None):
        run.out = args.out
    return run


def _train_config(run, args):
    params = _merge(run, "train", args, ("L", "T", "lr", "hidden", "stride", "threshold", "patience"))
    if getattr(args, "epochs", None) is not None:
        params["max_epochs"] = args.epochs
    params.setdefault("seed", run.seed)
    if args.seed is not None:
        params["seed"] = args.seed
    if "max_epochs" in params and "patience" not in params:
        params["patience"] = min(10, params["max_epochs"])
    try:
        return TrainConfig.from_dict(params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def cmd_gen(args):
    run = _resolve(args)
    gen = _merge(run, "gen", args, ("snr",))
    dataset = args.dataset if args.dataset is not None else gen.pop("dataset", None)
    gen.pop("dataset", None)
    if not args.all and dataset is None:
        raise ConfigError("gen needs --dataset N or --all")
    ids = sorted(DATASET_TABLE) if args.all else [dataset]
    for d in ids:
        if d not in DATASET_TABLE:
            raise ConfigError(f"--dataset must be in 1..10, got {d}")
    root = Path(run.out or _default_out("data"))
    written = []
    for d in ids:
        try:
            config = dataset_config(d, seed=run.seed, **gen)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        target = root / f"synthetic_{d}" if args.all else root
        save_dataset(target, generate_dataset(config), generator=config)
        snapshot = RunConfig(seed=run.seed, out=str(target), gen={"dataset": d, **gen})
        snapshot.dump(target / RUN_CONFIG_NAME)
        written.append(str(target))
        logger.info("wrote %s", target)
    print("\n".join(written))
    return EXIT_OK


def cmd_train(args):
    run = _resolve(args)
    config = _train_config(run, args)
    data = args.data or run.train.get("data")
    if not data:
        raise ConfigError("train needs --data DIR")
    out = Path(run.out or _default_out("train"))
    out.mkdir(parents=True, exist_ok=True)
    if config.lr == 0:
        logger.warning("lr=0: parameters will stay at their initial values")
    manifest = read_manifest(data)
    splits = prepare_splits(load_dataset(data), config)
    model = config.make_model()
    _, history = train(model, splits["train"], splits["val"])
    model.save(out / CHECKPOINT_NAME, meta={"train_config": config.to_dict(), "data": str(data)})
    write_ndjson(out / "history.ndjson", history.records)
    snapshot = RunConfig(
        seed=config.seed,
        out=str(out),
        train={**config.to_dict(), "data": str(data), "data_content_hash": manifest.get("content_hash")},
    )
    snapshot.dump(out / RUN_CONFIG_NAME)
    print(f"trained {len(history)} epochs (best {history.best_epoch}, val loss {history.best_val_loss:.6g}) -> {out}")
    return EXIT_OK


def _load_model(args, run):
    """Return ``(model, model_name, train_config)`` for eval."""
    if args.model in ("perfect", "zeros"):
        config = _train_config(run, args)
        model = PerfectForecaster() if args.model == "perfect" else ConstantForecaster(0.0)
        return model, args.model, config
    ckpt = args.checkpoint or run.eval.get("checkpoint")
    if not ckpt:
        raise ConfigError("eval needs --checkpoint PATH or --model perfect|zeros")
    path = Path(ckpt)
    if path.is_dir():
        path = path / CHECKPOINT_NAME
    if not path.exists():
        raise ConfigError(f"checkpoint {path} does not exist")
    model = FCNForecaster.load(path)
    params = dict(model.checkpoint_meta_.get("train_config", {}))
    if args.threshold is not None:
        params["threshold"] = args.threshold
    return model, "FCN", TrainConfig.from_dict(params)


def cmd_eval(args):
    run = _resolve(args)
    data = args.data or run.eval.get("data")
    if not data:
        raise ConfigError("eval needs --data DIR")
    model, name, config = _load_model(args, run)
    threshold = args.threshold if args.threshold is not None else run.eval.get("threshold", config.threshold)
    splits = prepare_splits(load_dataset(data), config)
    if isinstance(model, ConstantForecaster):
        model.n_outputs_ = config.T
    report, dump = evaluate(model, splits["test"], threshold, config.normalization)
    out = Path(run.out or _default_out("eval"))
    out.mkdir(parents=True, exist_ok=True)
    manifest = read_manifest(data)
    gen = manifest.get("generator") or {}
    record = {
        "dataset": f"Synthetic_{gen['dataset_id']}" if gen else Path(data).name,
        "model": name,
        "seed": config.seed,
        **report.to_record(),
    }
    write_ndjson(out / "metrics.ndjson", [record], append=True)
    table = render_table([record])
    (out / "table.txt").write_text(table)
    if args.dump_windows:
        write_ndjson(out / "windows.ndjson", dump)
    RunConfig(
        seed=config.seed, out=str(out), train=config.to_dict(),
        eval={"data": str(data), "model": name, "threshold": threshold, "checkpoint": args.checkpoint},
    ).dump(out / RUN_CONFIG_NAME)
    print(table, end="")
    return EXIT_OK


def cmd_report(args):
    records = []
    for path in args.metrics:
        records.extend(read_ndjson(path))
    if not records:
        raise ConfigError("no metrics records found")
    table = render_table(records)
    if args.out:
        Path(args.out).write_text(table)
    print(table, end="")
    return EXIT_OK


def cmd_check(args):
    results = checks.run_all()
    for res in results:
        print(res.line())
    ok = all(r.passed for r in results)
    print("all checks passed" if ok else "CHECKS FAILED")
    return EXIT_OK if ok else EXIT_CHECK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config file")
    common.add_argument("--seed", type=int, help="root seed (default 0)")
    common.add_argument("-v", "--verbose", action="store_true")

    proto = argparse.ArgumentParser(add_help=False)
    proto.add_argument("--L", type=int, help="look-back length (default 50)")
    proto.add_argument("--T", type=int, help="horizon length (default 20)")
    proto.add_argument("--stride", type=int, help="window stride (default 1)")
    proto.add_argument("--threshold", type=float, help="alarm threshold s (default 0.1)")

    parser = argparse.ArgumentParser(prog="apbench", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate synthetic datasets")
    p.add_argument("--dataset", type=int, help="dataset id 1..10")
    p.add_argument("--all", action="store_true", help="generate all ten datasets")
    p.add_argument("--snr", type=float, help="precursor amplitude scale (default 1.0)")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV}/data)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", parents=[common, proto], help="train the FCN forecaster")
    p.add_argument("--data", help="dataset directory")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV}/train)")
    p.add_argument("--lr", type=float)
    p.add_argument("--hidden", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--patience", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common, proto], help="score a model on the test split")
    p.add_argument("--data", help="dataset directory")
    p.add_argument("--checkpoint", help="checkpoint file or training output directory")
    p.add_argument("--model", choices=("fcn", "perfect", "zeros"), default="fcn")
    p.add_argument("--dump-windows", action="store_true", help="write per-window predictions")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV}/eval)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="render metrics NDJSON files as a table")
    p.add_argument("metrics", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report, config=None, seed=None, verbose=False)

    p = sub.add_parser("check", help="run the verification suite")
    p.set_defaults(func=cmd_check, config=None, seed=None, verbose=False)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
