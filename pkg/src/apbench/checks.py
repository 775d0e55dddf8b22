"""Self-verification suite run by ``apbench check``."""

import time
from dataclasses import dataclass

import numpy as np

from . import fcn
from .loss import loss_coefficient, transport_oracle, wasserstein_grad, wasserstein_loss
from .metrics import classify_window, dice_score, density_score, existence_score, lead_time_score
from .series import WindowSample


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _timed(name, fn, *args, **kwargs):
    start = time.perf_counter()
    passed, detail = fn(*args, **kwargs)
    return CheckResult(name, bool(passed), detail, time.perf_counter() - start)


def random_balanced_pair(rng, T):
    """Two nonnegative histograms of equal total mass, half of them with a binary target."""
    if rng.random() < 0.5:
        target = rng.integers(0, 2, T).astype(float)
        if target.sum() == 0:
            target[rng.integers(T)] = 1.0
        pred = rng.random(T)
        pred *= target.sum() / pred.sum()
    else:
        pred = rng.random(T) * (rng.random(T) < 0.7)
        target = rng.random(T)
        if pred.sum() == 0:
            pred[0] = 1.0
        target *= pred.sum() / target.sum()
    return pred, target


def loss_oracle_agreement(n_pairs=1000, max_T=10, seed=0, tol=1e-9):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        T = int(rng.integers(1, max_T + 1))
        pred, target = random_balanced_pair(rng, T)
        cum_abs = float(np.abs(wasserstein_loss(pred, target).per_step_cum_diff).sum())
        worst = max(worst, abs(cum_abs - transport_oracle(pred, target)))
    return worst <= tol, f"max |sum|C_i| - transport cost| = {worst:.2e} over {n_pairs} pairs"


def tiny_gradient_trials(n_trials=100, seed=0, tol=1e-4, eps=1e-5, grad_fn=None, head="linear"):
    """Run end-to-end finite-difference checks on random tiny networks.

    Returns ``(n_passed, n_counted, n_kinked, worst_error)``; kinked trials
    are excluded from the count.
    """
    rng = np.random.default_rng(seed)
    passed = counted = kinked = 0
    worst = 0.0
    for trial in range(n_trials):
        L, M, T, hidden = 3, 1, int(rng.integers(2, 5)), 4
        params = fcn.init_params(L, M, T, hidden, seed=int(rng.integers(2**31)), head=head)
        for _, b in params.layers:
            b[:] = rng.normal(0, 0.1, b.shape)
        sample = WindowSample(rng.normal(size=(L, M)), rng.integers(0, 2, T), f"trial{trial}", 0)
        res = fcn.finite_diff_check(params, sample, eps=eps, grad_fn=grad_fn)
        if res.kinked:
            kinked += 1
            continue
        counted += 1
        worst = max(worst, res.max_rel_error)
        passed += res.passed(tol)
    return passed, counted, kinked, worst


def gradient_agreement(n_trials=100, seed=0, tol=1e-4, min_rate=0.95, grad_fn=None):
    passed, counted, kinked, worst = tiny_gradient_trials(n_trials, seed, tol, grad_fn=grad_fn)
    rate = passed / counted if counted else 0.0
    return rate >= min_rate, (
        f"{passed}/{counted} non-kinked trials within rel. {tol:g} ({kinked} kinked skipped), worst {worst:.2e}"
    )


def loss_gradient_agreement(n_points=200, seed=0, tol=1e-4, h=1e-7, grad_fn=None):
    """Analytic loss gradient against central differences away from kinks.

    Gradient entries are integer multiples of the loss coefficient, so the
    coefficient floors the relative-error denominator (exact zeros occur).
    """
    grad_fn = grad_fn or wasserstein_grad
    rng = np.random.default_rng(seed)
    worst, used = 0.0, 0
    for _ in range(n_points):
        T = int(rng.integers(1, 11))
        pred, target = rng.random(T), rng.integers(0, 2, T).astype(float)
        if np.min(np.abs(np.cumsum(pred - target))) <= 1e-6:
            continue
        g = grad_fn(pred, target)
        for k in range(T):
            e = np.zeros(T)
            e[k] = h
            num = (wasserstein_loss(pred + e, target).value - wasserstein_loss(pred - e, target).value) / (2 * h)
            scale = max(abs(g[k]), abs(num), loss_coefficient(T))
            worst = max(worst, abs(g[k] - num) / scale)
        used += 1
    return worst < tol, f"worst rel. error {worst:.2e} over {used} points"


def metric_examples():
    """Worked examples as ``(name, computed, expected)`` triples."""
    rows = [
        ("loss T=3 shift", wasserstein_loss([0, 1, 0], [1, 0, 0]).value, 1 / 6),
        ("loss T=2 shift", wasserstein_loss([0, 1], [1, 0]).value, 1 / 3),
        ("existence TP=3 FP=1 FN=1", existence_score(3, 1, 1), 0.75),
        ("existence degenerate", existence_score(0, 0, 0), 1.0),
        ("density T=20 5.2 vs 5", density_score([0.26] * 20, [1] * 5 + [0] * 15), 0.99),
        ("density all missed", density_score([0] * 20, [1] * 20), 0.0),
        ("lead time T=20 first alarm 4 vs 6", lead_time_score([0] * 4 + [0.5] + [0] * 15, [0] * 6 + [1] * 14), 0.9),
        ("dice [0,1,1,0] vs [0,1,0,0]", dice_score([0, 1, 1, 0], [0, 1, 0, 0]), 2 / 3),
        ("dice empty vs nonempty", dice_score([0, 0, 0], [0, 1, 0]), 0.0),
    ]
    verdicts = [
        ("verdict sum 0.5 vs 3", classify_window([0.5, 0, 0], [1, 1, 1]).value, "TP"),
        ("verdict sum 0.05 vs 0", classify_window([0.05, 0, 0], [0, 0, 0]).value, "TN"),
        ("verdict sum 0.2 vs 0", classify_window([0.2, 0, 0], [0, 0, 0]).value, "FP"),
        ("lead time non-localizable", lead_time_score([0.04] * 20, [1] + [0] * 19), None),
    ]
    return rows, verdicts


def metric_conformance(tol=1e-12):
    rows, verdicts = metric_examples()
    bad = [name for name, got, want in rows if abs(got - want) > tol]
    bad += [name for name, got, want in verdicts if got != want]
    n = len(rows) + len(verdicts)
    return not bad, f"{n - len(bad)}/{n} worked examples reproduced" + (f"; failed: {bad}" if bad else "")


def metric_bounds(n=10000, seed=0):
    rng = np.random.default_rng(seed)
    lo, hi = np.inf, -np.inf
    for _ in range(n):
        T = int(rng.integers(1, 31))
        pred = rng.random(T) * (rng.random(T) < rng.random())
        target = (rng.random(T) < rng.random()).astype(float)
        s = float(rng.uniform(0, 0.99))
        vals = [density_score(pred, target), dice_score(pred, target, s)]
        if target.sum() >= s:
            lt = lead_time_score(pred, target, s)
            if lt is not None:
                vals.append(lt)
        tp, fp, fn = rng.integers(0, 50, 3)
        vals.append(existence_score(tp, fp, fn))
        lo, hi = min(lo, min(vals)), max(hi, max(vals))
    return lo >= 0 and hi <= 1, f"metric range [{lo:.4f}, {hi:.4f}] over {n} random inputs"


def run_all(grad_fn=None, loss_grad_fn=None):
    return [
        _timed("loss/transport oracle equivalence", loss_oracle_agreement),
        _timed("loss gradient vs finite differences", loss_gradient_agreement, grad_fn=loss_grad_fn),
        _timed("network gradient vs finite differences", gradient_agreement, grad_fn=grad_fn),
        _timed("metric worked examples", metric_conformance),
        _timed("metric bounds", metric_bounds),
    ]
