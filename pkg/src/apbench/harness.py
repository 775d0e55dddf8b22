"""End-to-end protocol: window the data, split, train, evaluate."""

import logging
from dataclasses import asdict, dataclass, fields

import numpy as np

from .estimators import FCNForecaster
from .metrics import DEFAULT_THRESHOLD, aggregate_report
from .series import DEFAULT_RATIOS, make_dataset_windows, split_windows, stack_windows

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    L: int = 50
    T: int = 20
    lr: float = 5e-4
    hidden: int = 128
    n_hidden_layers: int = 2
    head: str = "linear"
    max_epochs: int = 100
    patience: int = 10
    batch_size: int = 64
    threshold: float = DEFAULT_THRESHOLD
    stride: int = 1
    seed: int = 0
    normalization: str = "full"
    tol: float = 1e-6
    standardize: bool = True
    split: str = "chronological"
    ratios: tuple = DEFAULT_RATIOS

    def __post_init__(self):
        self.ratios = tuple(self.ratios)
        for name in ("L", "T", "hidden", "n_hidden_layers", "max_epochs", "patience", "batch_size", "stride"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.lr < 0:
            raise ValueError(f"lr must be >= 0, got {self.lr}")
        if self.patience > self.max_epochs:
            raise ValueError(f"patience ({self.patience}) exceeds max_epochs ({self.max_epochs})")
        if not 0 <= self.threshold < 1:
            raise ValueError(f"threshold must be in [0, 1), got {self.threshold}")

    def to_dict(self):
        d = asdict(self)
        d["ratios"] = list(self.ratios)
        return d

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown TrainConfig keys: {sorted(unknown)}")
        return cls(**data)

    def make_model(self):
        return FCNForecaster(
            hidden=self.hidden,
            n_hidden_layers=self.n_hidden_layers,
            head=self.head,
            lr=self.lr,
            max_epochs=self.max_epochs,
            patience=self.patience,
            batch_size=self.batch_size,
            tol=self.tol,
            normalization=self.normalization,
            standardize=self.standardize,
            random_state=self.seed,
        )


def prepare_splits(instances, config):
    """Window every instance and return ``{"train": [...], "val": [...], "test": [...]}``."""
    windows = make_dataset_windows(instances, config.L, config.T, config.stride)
    split = split_windows(windows, config.ratios, seed=config.seed, strategy=config.split)
    logger.info("split sizes %s, positive ratios %s", split.sizes(), split.positive_ratios)
    return {name: [windows[i] for i in split.indices(name)] for name in ("train", "val", "test")}


def train(model, train_windows, val_windows):
    """Fit ``model`` on train windows with early stopping on val windows.

    Returns ``(params, history)``; the model is fitted in place.
    """
    if not train_windows or not val_windows:
        raise ValueError("train and val splits must be non-empty")
    X, Y = stack_windows(train_windows)
    X_val, Y_val = stack_windows(val_windows)
    model.fit(X, Y, X_val=X_val, Y_val=Y_val)
    return model.params_, model.history_


def predict_windows(model, windows):
    if hasattr(model, "predict_windows"):
        return model.predict_windows(windows)
    X, _ = stack_windows(windows)
    return model.predict(X)


def evaluate(model, windows, s=DEFAULT_THRESHOLD, normalization="full"):
    """Score ``model`` on test windows; returns ``(report, dump)``.

    ``dump`` has one record per window: origin, prediction, target, verdict.
    """
    if not windows:
        raise ValueError("test split is empty")
    P = np.asarray(predict_windows(model, windows), dtype=np.float64)
    Y = np.stack([np.asarray(w.target, dtype=np.float64) for w in windows])
    report, verdicts = aggregate_report(P, Y, s, normalization, return_verdicts=True)
    dump = [
        {
            "instance_id": w.instance_id,
            "offset": w.offset,
            "pred": p.tolist(),
            "target": [int(v) for v in w.target],
            "verdict": v.value,
        }
        for w, p, v in zip(windows, P, verdicts)
    ]
    return report, dump


def run_protocol(instances, config):
    """Train a fresh FCN on ``instances`` and return ``(model, report, history)``."""
    splits = prepare_splits(instances, config)
    model = config.make_model()
    train(model, splits["train"], splits["val"])
    report, _ = evaluate(model, splits["test"], config.threshold, config.normalization)
    return model, report, model.history_
