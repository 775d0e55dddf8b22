"""Window-level evaluation metrics for anomaly density forecasts.

A window is a (prediction, target) pair over the horizon.  Existence is an
F1 score over window verdicts; Density, Lead Time and Dice are averaged over
the true-positive windows only.
"""

import enum
from dataclasses import asdict, dataclass

import numpy as np

from .loss import batch_loss_per_window
from .validation import check_pair, check_threshold

DEFAULT_THRESHOLD = 0.1


class Verdict(str, enum.Enum):
    TP = "TP"
    FP = "FP"
    FN = "FN"
    TN = "TN"


def classify_window(pred, target, s=DEFAULT_THRESHOLD):
    pred, target = check_pair(pred, target)
    s = check_threshold(s)
    pred_pos = pred.sum() >= s
    true_pos = target.sum() >= s
    if pred_pos and true_pos:
        return Verdict.TP
    if pred_pos:
        return Verdict.FP
    if true_pos:
        return Verdict.FN
    return Verdict.TN


def existence_score(tp, fp, fn):
    if min(tp, fp, fn) < 0:
        raise ValueError("counts must be nonnegative")
    denom = 2 * tp + fp + fn
    # nothing to find and nothing claimed
    if denom == 0:
        return 1.0
    return 2 * tp / denom


def density_score(pred, target):
    pred, target = check_pair(pred, target)
    return 1.0 - abs(float((pred - target).sum())) / pred.size


def lead_time_score(pred, target, s=DEFAULT_THRESHOLD):
    """Timing agreement of the first alarm and the first true anomaly.

    Returns ``None`` when no single step of ``pred`` reaches ``s`` (the
    window may still be a TP by its sum); such windows are non-localizable.
    """
    pred, target = check_pair(pred, target)
    s = check_threshold(s)
    if target.sum() < s:
        raise ValueError(f"lead time needs a window with anomalies (sum(target)={target.sum()} < s={s})")
    true_idx = np.flatnonzero(target == 1)
    pred_idx = np.flatnonzero(pred >= s)
    if true_idx.size == 0 or pred_idx.size == 0:
        return None
    return 1.0 - abs(int(pred_idx[0]) - int(true_idx[0])) / pred.size


def dice_score(pred, target, s=DEFAULT_THRESHOLD):
    pred, target = check_pair(pred, target)
    s = check_threshold(s)
    alarm = pred >= s
    truth = target == 1
    denom = int(alarm.sum() + truth.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int((alarm & truth).sum()) / denom


@dataclass
class MetricsReport:
    tp: int
    fp: int
    fn: int
    tn: int
    existence: float
    mean_density: float
    mean_lead_time: float
    mean_dice: float
    mean_wasserstein: float
    mean_wasserstein_tp: float
    n_tp_localizable: int
    n_windows: int
    threshold: float = DEFAULT_THRESHOLD

    @property
    def counts(self):
        return (self.tp, self.fp, self.fn, self.tn)

    def to_record(self):
        return asdict(self)

    @classmethod
    def from_record(cls, record):
        return cls(**{k: record[k] for k in cls.__dataclass_fields__})


def _mean(values):
    return float(np.mean(values)) if len(values) else None


def aggregate_report(preds, targets, s=DEFAULT_THRESHOLD, normalization="full", return_verdicts=False):
    """Score a stream of windows; TP-conditional means are ``None`` when no TP exists."""
    s = check_threshold(s)
    P = np.asarray(preds, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] == 0:
        raise ValueError("need at least one window")
    if P.shape != Y.shape:
        raise ValueError(f"shape mismatch: preds {P.shape}, targets {Y.shape}")

    verdicts = [classify_window(p, y, s) for p, y in zip(P, Y)]
    counts = {v: 0 for v in Verdict}
    for v in verdicts:
        counts[v] += 1
    wass = batch_loss_per_window(P, Y, normalization)

    tp_idx = [i for i, v in enumerate(verdicts) if v is Verdict.TP]
    lead = [lead_time_score(P[i], Y[i], s) for i in tp_idx]
    lead = [x for x in lead if x is not None]

    report = MetricsReport(
        tp=counts[Verdict.TP],
        fp=counts[Verdict.FP],
        fn=counts[Verdict.FN],
        tn=counts[Verdict.TN],
        existence=existence_score(counts[Verdict.TP], counts[Verdict.FP], counts[Verdict.FN]),
        mean_density=_mean([density_score(P[i], Y[i]) for i in tp_idx]),
        mean_lead_time=_mean(lead),
        mean_dice=_mean([dice_score(P[i], Y[i], s) for i in tp_idx]),
        mean_wasserstein=float(wass.mean()),
        mean_wasserstein_tp=_mean(wass[tp_idx]),
        n_tp_localizable=len(lead),
        n_windows=len(verdicts),
        threshold=s,
    )
    return (report, verdicts) if return_verdicts else report
