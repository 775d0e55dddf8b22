"""Series, windows and chronological dataset splitting."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .validation import SizingError, check_binary

logger = logging.getLogger(__name__)

DEFAULT_RATIOS = (0.7, 0.1, 0.2)
SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True, eq=False)
class SeriesInstance:
    """One multivariate series of shape (N, M) with per-step 0/1 anomaly labels."""

    values: np.ndarray
    labels: np.ndarray
    instance_id: str = "instance"
    feature_names: list = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"{self.instance_id}: values must be (N, M) with N, M >= 1, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{self.instance_id}: values contain non-finite entries")
        labels = check_binary(self.labels, f"{self.instance_id} labels")
        if labels.ndim != 1 or labels.shape[0] != values.shape[0]:
            raise ValueError(
                f"{self.instance_id}: labels length {labels.shape} does not match N={values.shape[0]}"
            )
        names = self.feature_names
        if names is None:
            names = [f"feature_{j}" for j in range(values.shape[1])]
        if len(names) != values.shape[1]:
            raise ValueError(f"{self.instance_id}: {len(names)} feature names for M={values.shape[1]}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", list(names))

    @property
    def n_steps(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, SeriesInstance):
            return NotImplemented
        return (
            self.instance_id == other.instance_id
            and self.feature_names == other.feature_names
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True)
class WindowSample:
    """A look-back slice and the horizon labels that immediately follow it.

    ``input`` covers steps ``[offset, offset + L)`` and ``target`` covers
    ``[offset + L, offset + L + T)`` of the source instance (0-based).
    """

    input: np.ndarray
    target: np.ndarray
    instance_id: str
    offset: int

    @property
    def origin(self):
        return (self.instance_id, self.offset)

    @property
    def is_positive(self):
        return bool(self.target.any())


@dataclass
class SplitAssignment:
    train: list
    val: list
    test: list
    ratios: tuple = DEFAULT_RATIOS
    positive_ratios: dict = field(default_factory=dict)

    def indices(self, name):
        return getattr(self, name)

    def sizes(self):
        return tuple(len(self.indices(n)) for n in SPLIT_NAMES)


def n_windows(n_steps, L, T, stride=1):
    if L + T > n_steps:
        return 0
    return (n_steps - L - T) // stride + 1


def make_windows(instance, L, T, stride=1):
    """Cut an instance into (look-back, horizon) pairs at offsets 0, stride, 2*stride, ..."""
    if L < 1 or T < 1:
        raise SizingError(f"L and T must be >= 1, got L={L}, T={T}")
    if stride < 1:
        raise SizingError(f"stride must be >= 1, got {stride}")
    N = instance.n_steps
    if L + T > N:
        raise SizingError(f"instance {instance.instance_id!r}: L + T = {L + T} exceeds N = {N}")
    count = n_windows(N, L, T, stride)
    out = []
    for k in range(count):
        t = k * stride
        out.append(
            WindowSample(
                input=instance.values[t : t + L],
                target=instance.labels[t + L : t + L + T],
                instance_id=instance.instance_id,
                offset=t,
            )
        )
    return out


def make_dataset_windows(instances, L, T, stride=1):
    windows = []
    for inst in instances:
        windows.extend(make_windows(inst, L, T, stride))
    return windows


def stack_windows(windows):
    """Return ``(X, Y)`` arrays of shape (n, L, M) and (n, T)."""
    if not windows:
        raise ValueError("no windows to stack")
    X = np.stack([w.input for w in windows]).astype(np.float64)
    Y = np.stack([w.target for w in windows]).astype(np.float64)
    return X, Y


def _check_ratios(ratios):
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError(f"ratios must be three positive numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    return ratios


def _block_sizes(n, ratios):
    n_val = math.floor(n * ratios[1])
    n_test = math.floor(n * ratios[2])
    return n - n_val - n_test, n_val, n_test


def _chronological(order, positive, ratios):
    n_train, n_val, _ = _block_sizes(len(order), ratios)
    cuts = [n_train, n_train + n_val]
    # an event straddling a cut stays with the earlier split
    for c in range(2):
        while 0 < cuts[c] < len(order) and positive[order[cuts[c] - 1]] and positive[order[cuts[c]]]:
            cuts[c] += 1
        if c == 0:
            cuts[1] = max(cuts[1], cuts[0])
    return order[: cuts[0]], order[cuts[0] : cuts[1]], order[cuts[1] :]


def _stratified(order, positive, ratios, rng):
    parts = ([], [], [])
    for flag in (True, False):
        members = [i for i in order if positive[i] == flag]
        members = list(rng.permutation(members)) if members else []
        n_train, n_val, _ = _block_sizes(len(members), ratios)
        parts[0].extend(members[:n_train])
        parts[1].extend(members[n_train : n_train + n_val])
        parts[2].extend(members[n_train + n_val :])
    return tuple(sorted(int(i) for i in p) for p in parts)


def split_windows(windows, ratios=DEFAULT_RATIOS, seed=0, strategy="chronological", tolerance=0.2):
    """Partition window indices into train/val/test.

    The default ``chronological`` strategy splits each instance into
    contiguous blocks of offsets; ``stratified`` shuffles positive and
    negative windows separately with ``seed``.  The positive-window fraction
    of each split is compared against the global fraction and a warning is
    logged when it is off by more than ``tolerance`` (relative).
    """
    ratios = _check_ratios(ratios)
    if not windows:
        raise ValueError("cannot split an empty window list")
    positive = [w.is_positive for w in windows]
    rng = np.random.default_rng(seed)

    groups = {}
    for i, w in enumerate(windows):
        groups.setdefault(w.instance_id, []).append(i)

    train, val, test = [], [], []
    for ids in groups.values():
        order = sorted(ids, key=lambda i: windows[i].offset)
        if strategy == "chronological":
            a, b, c = _chronological(order, positive, ratios)
        elif strategy == "stratified":
            a, b, c = _stratified(order, positive, ratios, rng)
        else:
            raise ValueError(f"unknown split strategy {strategy!r}")
        train.extend(a)
        val.extend(b)
        test.extend(c)

    split = SplitAssignment(sorted(train), sorted(val), sorted(test), ratios)
    for name in SPLIT_NAMES:
        if not split.indices(name):
            raise ValueError(f"split {name!r} received zero windows ({len(windows)} windows total)")

    overall = float(np.mean(positive))
    split.positive_ratios["all"] = overall
    for name in SPLIT_NAMES:
        idx = split.indices(name)
        frac = float(np.mean([positive[i] for i in idx]))
        split.positive_ratios[name] = frac
        if overall > 0 and abs(frac - overall) > tolerance * overall:
            logger.warning(
                "%s split positive-window ratio %.4f deviates from global %.4f by more than %.0f%%",
                name, frac, overall, 100 * tolerance,
            )
    return split
