"""Cumulative-sum Wasserstein loss for predicted anomaly densities.

For a horizon of length T the loss compares running totals of predicted
and true anomaly mass::

    C_i  = sum_{j<=i} (pred_j - target_j)
    loss = coef * sum_i |C_i|

with ``coef = 2 / (T (T + 1))`` (``normalization="full"``) or ``1 / T``
(``normalization="mean"``, i.e. a plain MAE over the running totals).
"""

from dataclasses import dataclass

import numpy as np

from .validation import check_pair

NORMALIZATIONS = ("full", "mean")


@dataclass(frozen=True)
class LossValue:
    value: float
    per_step_cum_diff: np.ndarray


def loss_coefficient(T, normalization="full"):
    if normalization == "full":
        return 2.0 / (T * (T + 1))
    if normalization == "mean":
        return 1.0 / T
    raise ValueError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")


def wasserstein_loss(pred, target, normalization="full"):
    pred, target = check_pair(pred, target)
    cum = np.cumsum(pred - target)
    value = loss_coefficient(pred.size, normalization) * float(np.abs(cum).sum())
    return LossValue(value, cum)


def wasserstein_grad(pred, target, normalization="full"):
    """Subgradient of :func:`wasserstein_loss` with respect to ``pred``.

    ``d loss / d pred_k = coef * sum_{i>=k} sign(C_i)`` with ``sign(0) = 0``.
    """
    pred, target = check_pair(pred, target)
    signs = np.sign(np.cumsum(pred - target))
    return loss_coefficient(pred.size, normalization) * np.cumsum(signs[::-1])[::-1]


def batch_loss(P, Y, normalization="full"):
    """Mean loss over a batch of windows, rows of ``P`` and ``Y``."""
    P = np.asarray(P, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if P.shape != Y.shape or P.ndim != 2:
        raise ValueError(f"shape mismatch: pred {P.shape}, target {Y.shape}")
    coef = loss_coefficient(P.shape[1], normalization)
    return coef * float(np.abs(np.cumsum(P - Y, axis=1)).sum(axis=1).mean())


def batch_loss_per_window(P, Y, normalization="full"):
    P = np.asarray(P, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    coef = loss_coefficient(P.shape[1], normalization)
    return coef * np.abs(np.cumsum(P - Y, axis=1)).sum(axis=1)


def batch_grad(P, Y, normalization="full"):
    """Gradient of :func:`batch_loss` (the batch mean) with respect to ``P``."""
    P = np.asarray(P, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    n, T = P.shape
    signs = np.sign(np.cumsum(P - Y, axis=1))
    return (loss_coefficient(T, normalization) / n) * np.cumsum(signs[:, ::-1], axis=1)[:, ::-1]


def transport_oracle(pred, target, tol=1e-9):
    """Earth mover's cost between two equal-mass histograms on positions 0..T-1.

    Mass is matched greedily in position order (the optimal plan in 1-D),
    so this never touches cumulative sums.  Used only to verify the loss.
    """
    supply = [float(v) for v in pred]
    demand = [float(v) for v in target]
    if len(supply) != len(demand):
        raise ValueError("length mismatch")
    if any(v < 0 for v in supply + demand):
        raise ValueError("masses must be nonnegative")
    if abs(sum(supply) - sum(demand)) > tol:
        raise ValueError(f"unequal mass: {sum(supply)} vs {sum(demand)}")
    cost = 0.0
    i = j = 0
    n = len(supply)
    while i < n and j < n:
        if supply[i] <= 0.0:
            i += 1
            continue
        if demand[j] <= 0.0:
            j += 1
            continue
        moved = min(supply[i], demand[j])
        cost += moved * abs(i - j)
        supply[i] -= moved
        demand[j] -= moved
    return cost
