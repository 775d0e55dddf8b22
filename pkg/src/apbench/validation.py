"""Input validation helpers shared by the estimators and the metric functions."""

import numpy as np
from sklearn.utils.validation import check_array


class SizingError(ValueError):
    """Raised when window or horizon sizes do not fit a series."""


def as_vector(x, name="x"):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_pair(pred, target):
    """Validate a (prediction, target) pair of equal length and return float arrays."""
    pred = as_vector(pred, "pred")
    target = as_vector(target, "target")
    if pred.shape != target.shape:
        raise ValueError(f"length mismatch: pred has {pred.size}, target has {target.size}")
    return pred, target


def check_binary(labels, name="labels"):
    arr = np.asarray(labels)
    bad = ~np.isin(arr, (0, 1))
    if bad.any():
        idx = int(np.flatnonzero(bad.ravel())[0])
        raise ValueError(f"{name} must be 0/1, found {arr.ravel()[idx]!r} at index {idx}")
    return arr.astype(np.int8)


def check_probs(probs, name="probs"):
    arr = np.asarray(probs, dtype=np.float64)
    if np.any((arr < 0) | (arr > 1)) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr


def check_threshold(s):
    s = float(s)
    if not 0.0 <= s < 1.0:
        raise ValueError(f"threshold must be in [0, 1), got {s}")
    return s


def check_window_arrays(X, Y=None):
    """Validate stacked window inputs of shape (n, L, M) and targets of shape (n, T)."""
    X = check_array(X, allow_nd=True, dtype=np.float64, ensure_2d=False)
    if X.ndim == 2:
        X = X[:, :, None]
    if X.ndim != 3:
        raise ValueError(f"X must have shape (n_windows, L, M), got {X.shape}")
    if Y is None:
        return X
    Y = check_array(Y, dtype=np.float64)
    if Y.shape[0] != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} windows but Y has {Y.shape[0]}")
    return X, Y
