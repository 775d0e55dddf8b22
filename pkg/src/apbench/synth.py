"""Seeded generator for the ten synthetic anomaly-prediction datasets.

Each event is a hidden precursor (Gaussian noise followed by a rising ramp)
added to a clean periodic base, followed by a brewing gap and then a run of
positive labels (the observation period).
"""

import hashlib
import json
from dataclasses import asdict, dataclass, replace

import numpy as np

from .series import SeriesInstance

BASE_PATTERNS = ("Fixed", "Mixed", "MultiFixed", "MultiMixed")
MIXED_PERIODS = (25, 50, 100)
MAX_ATTEMPTS = 1000

# dataset_id -> (base pattern, brewing is Gaussian, observation is Gaussian)
DATASET_TABLE = {
    1: ("Fixed", False, False),
    2: ("Fixed", True, False),
    3: ("Fixed", False, True),
    4: ("Fixed", True, True),
    5: ("Mixed", True, True),
    6: ("MultiFixed", False, False),
    7: ("MultiFixed", True, False),
    8: ("MultiFixed", False, True),
    9: ("MultiFixed", True, True),
    10: ("MultiMixed", True, True),
}


@dataclass(frozen=True)
class Duration:
    """A step count that is either fixed (``std == 0``) or drawn from a rounded Gaussian."""

    mean: float
    std: float = 0.0

    @property
    def is_gaussian(self):
        return self.std > 0

    def sample(self, rng, size=None):
        if not self.is_gaussian:
            return np.full(size, int(round(self.mean))) if size is not None else int(round(self.mean))
        draw = np.rint(rng.normal(self.mean, self.std, size=size))
        return np.maximum(draw, 1).astype(int)

    def upper(self):
        # packing bound used for the feasibility check
        return int(np.ceil(self.mean + 3 * self.std))


@dataclass(frozen=True)
class GenConfig:
    dataset_id: int = 1
    N: int = 10000
    M: int = 1
    n_instances: int = 10
    n_events: int = 10
    base_pattern: str = "Fixed"
    sine_period: int = 50
    pattern_len: int = 10
    brewing: Duration = Duration(20)
    observation: Duration = Duration(10)
    snr: float = 1.0
    guard_gap: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.N < 1 or self.n_events < 1 or self.pattern_len < 1 or self.n_instances < 1:
            raise ValueError("N, n_events, n_instances and pattern_len must be >= 1")
        if not self.snr > 0:
            raise ValueError(f"snr must be > 0, got {self.snr}")
        if self.base_pattern not in BASE_PATTERNS:
            raise ValueError(f"unknown base pattern {self.base_pattern!r}")
        if self.base_pattern.startswith("Multi") and self.M < 2:
            raise ValueError(f"{self.base_pattern} needs M >= 2")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        for key in ("brewing", "observation"):
            if key in data and isinstance(data[key], dict):
                data[key] = Duration(**data[key])
        return cls(**data)

    def digest(self):
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class EventSpec:
    pattern_start: int
    pattern_len: int
    brewing: int
    observation: int

    @property
    def label_start(self):
        return self.pattern_start + self.pattern_len + self.brewing

    @property
    def end(self):
        return self.label_start + self.observation


def dataset_config(dataset_id, seed=0, **overrides):
    """Build the GenConfig for one of the ten tabulated synthetic datasets."""
    if dataset_id not in DATASET_TABLE:
        raise ValueError(f"dataset_id must be in 1..10, got {dataset_id}")
    base, gauss_brew, gauss_obs = DATASET_TABLE[dataset_id]
    cfg = GenConfig(
        dataset_id=dataset_id,
        M=3 if base.startswith("Multi") else 1,
        base_pattern=base,
        brewing=Duration(20, 5) if gauss_brew else Duration(20),
        observation=Duration(10, 3) if gauss_obs else Duration(10),
        seed=seed,
    )
    return replace(cfg, **overrides) if overrides else cfg


def instance_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _mixed_channel(k, rng, phase):
    n_terms = int(rng.integers(2, 4))
    periods = rng.choice(MIXED_PERIODS, size=n_terms, replace=False)
    amps = rng.dirichlet(np.ones(n_terms))
    return sum(a * np.sin(2 * np.pi * k / p + phase) for a, p in zip(amps, periods))


def gen_base_series(config, rng, instance_id="instance"):
    """Clean periodic base with all-zero labels."""
    k = np.arange(config.N, dtype=np.float64)
    if config.base_pattern == "Fixed":
        values = np.sin(2 * np.pi * k / config.sine_period)[:, None]
    elif config.base_pattern == "Mixed":
        values = _mixed_channel(k, rng, 0.0)[:, None]
    elif config.base_pattern == "MultiFixed":
        values = np.stack(
            [np.sin(2 * np.pi * k / config.sine_period + j * np.pi / 4) for j in range(config.M)], axis=1
        )
    else:
        values = np.stack([_mixed_channel(k, rng, j * np.pi / 4) for j in range(config.M)], axis=1)
    return SeriesInstance(values, np.zeros(config.N, dtype=np.int8), instance_id)


def gen_anomaly_pattern(pattern_len, rng):
    """Gaussian noise segment followed by a ramp rising from 0 to 1."""
    if pattern_len < 2:
        raise ValueError(f"pattern_len must be >= 2, got {pattern_len}")
    n_ramp = -(-pattern_len // 2)
    noise = rng.standard_normal(pattern_len - n_ramp)
    ramp = np.linspace(0.0, 1.0, n_ramp) if n_ramp > 1 else np.ones(1)
    return np.concatenate([noise, ramp])


def sample_events(config, rng):
    """Place ``n_events`` non-overlapping events separated by at least ``guard_gap`` steps."""
    span_max = config.pattern_len + config.brewing.upper() + config.observation.upper()
    need = config.n_events * (span_max + config.guard_gap)
    if need > config.N:
        raise ValueError(
            f"infeasible packing: n_events*(pattern+brewing+observation+guard)={need} exceeds N={config.N}"
        )
    for _ in range(MAX_ATTEMPTS):
        brew = config.brewing.sample(rng, config.n_events)
        obs = config.observation.sample(rng, config.n_events)
        spans = config.pattern_len + brew + obs
        starts = np.sort(rng.integers(0, config.N - spans.max() + 1, size=config.n_events))
        ends = starts + spans
        if np.all(starts[1:] >= ends[:-1] + config.guard_gap) and ends[-1] <= config.N:
            return [
                EventSpec(int(s), config.pattern_len, int(b), int(o))
                for s, b, o in zip(starts, brew, obs)
            ]
    raise ValueError(
        f"could not place {config.n_events} events with guard gap {config.guard_gap} in N={config.N} "
        f"after {MAX_ATTEMPTS} attempts"
    )


def inject_event(series, event, pattern, snr):
    """Add ``snr * pattern`` on channel 0 and label the observation period."""
    pattern = np.asarray(pattern, dtype=np.float64)
    if pattern.shape != (event.pattern_len,):
        raise ValueError(f"pattern length {pattern.shape} does not match event ({event.pattern_len})")
    if event.pattern_start < 0 or event.end > series.n_steps:
        raise ValueError(f"event {event} does not fit a series of length {series.n_steps}")
    values = series.values.copy()
    labels = series.labels.copy()
    values[event.pattern_start : event.pattern_start + event.pattern_len, 0] += snr * pattern
    labels[event.label_start : event.end] = 1
    return SeriesInstance(values, labels, series.instance_id, series.feature_names)


def generate_instance(config, index):
    rng = instance_rng(config.seed, index)
    series = gen_base_series(config, rng, instance_id=f"synthetic_{config.dataset_id}_{index:02d}")
    events = sample_events(config, rng)
    for event in events:
        series = inject_event(series, event, gen_anomaly_pattern(config.pattern_len, rng), config.snr)
    return series, events


def generate_dataset(config):
    """Generate ``config.n_instances`` series (10 by default), each from its own RNG stream."""
    return [generate_instance(config, i)[0] for i in range(config.n_instances)]
