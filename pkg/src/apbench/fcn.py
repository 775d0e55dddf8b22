"""Fully-connected density forecaster written against numpy only.

The network maps a flattened (L, M) look-back window through ReLU hidden
layers to T outputs, one anomaly probability per horizon step.  Two output
heads exist:

``"linear"``
    Raw affine outputs during training; :func:`predict` clips them to
    [0, 1].  Overshooting below zero is penalised by the loss, which keeps
    gradients alive on the (majority) anomaly-free windows.
``"sigmoid"``
    Element-wise sigmoid, outputs strictly inside (0, 1).  Under the
    cumulative-sum loss it saturates towards the all-zero forecast early
    in training, so it is not the default.

Gradients are computed by hand; :func:`finite_diff_check` verifies them.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .loss import batch_grad, batch_loss

CHECKPOINT_FORMAT = "apbench-fcn"
CHECKPOINT_VERSION = 1
HEADS = ("linear", "sigmoid")


class StaleCacheError(RuntimeError):
    pass


@dataclass
class FcnParams:
    """Weights ``W`` of shape (fan_in, fan_out) and biases ``b`` of shape (fan_out,).

    ``version`` is bumped on every in-place update so that a forward cache
    taken before an update cannot be reused.
    """

    layers: list
    head: str = "linear"
    version: int = 0

    @property
    def dims(self):
        return [self.layers[0][0].shape[0]] + [W.shape[1] for W, _ in self.layers]

    def arrays(self):
        for W, b in self.layers:
            yield W
            yield b

    def copy(self):
        return FcnParams([(W.copy(), b.copy()) for W, b in self.layers], self.head, self.version)

    def check(self):
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}, got {self.head!r}")
        for k, (W, b) in enumerate(self.layers):
            if b.shape != (W.shape[1],):
                raise ValueError(f"layer {k}: bias shape {b.shape} does not match weight {W.shape}")
            if k and W.shape[0] != self.layers[k - 1][0].shape[1]:
                raise ValueError(f"layer {k}: fan-in {W.shape[0]} does not chain")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {k}: non-finite parameters")


def init_params(L, M, T, hidden=128, seed=0, n_hidden_layers=2, head="linear"):
    """He-uniform weights, zero biases."""
    if min(L, M, T, hidden, n_hidden_layers) < 1:
        raise ValueError("all dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    dims = [L * M] + [hidden] * n_hidden_layers + [T]
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / fan_in)
        layers.append((rng.uniform(-bound, bound, size=(fan_in, fan_out)), np.zeros(fan_out)))
    params = FcnParams(layers, head)
    params.check()
    return params


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class ForwardCache:
    inputs: list
    pre_acts: list
    outputs: np.ndarray
    version: int
    dims: list
    single: bool = False


def forward(params, X):
    """Return ``(outputs, cache)``; ``X`` is one (L, M) window or a batch (B, L, M).

    For the linear head the outputs are unclipped; use :func:`predict` for
    probabilities.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim <= 2
    A = X.reshape(1, -1) if single else X.reshape(X.shape[0], -1)
    if A.shape[1] != params.dims[0]:
        raise ValueError(f"input has {A.shape[1]} values per window, network expects {params.dims[0]}")
    inputs, pre_acts = [], []
    last = len(params.layers) - 1
    for k, (W, b) in enumerate(params.layers):
        inputs.append(A)
        Z = A @ W + b
        pre_acts.append(Z)
        if k < last:
            A = np.maximum(Z, 0.0)
        elif params.head == "sigmoid":
            A = sigmoid(Z)
        else:
            A = Z
    cache = ForwardCache(inputs, pre_acts, A, params.version, params.dims, single)
    return (A[0] if single else A), cache


def backward(params, cache, dprobs):
    """Gradients ``[(dW, db), ...]`` of a scalar loss given ``d loss / d probs``."""
    if cache.version != params.version or cache.dims != params.dims:
        raise StaleCacheError("forward cache does not belong to the current parameters")
    dA = np.asarray(dprobs, dtype=np.float64).reshape(cache.outputs.shape)
    grads = [None] * len(params.layers)
    dZ = dA * cache.outputs * (1.0 - cache.outputs) if params.head == "sigmoid" else dA
    for k in range(len(params.layers) - 1, -1, -1):
        W, _ = params.layers[k]
        grads[k] = (cache.inputs[k].T @ dZ, dZ.sum(axis=0))
        if k:
            dZ = (dZ @ W.T) * (cache.pre_acts[k - 1] > 0)
    return grads


def predict(params, X, batch_size=4096):
    """Anomaly probabilities in [0, 1] for one window or a batch."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim <= 2:
        out = forward(params, X)[0]
    else:
        chunks = [forward(params, X[i : i + batch_size])[0] for i in range(0, X.shape[0], batch_size)]
        out = np.concatenate(chunks) if chunks else np.empty((0, params.dims[-1]))
    return np.clip(out, 0.0, 1.0) if params.head == "linear" else out


@dataclass
class AdamState:
    lr: float = 5e-4
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, **kwargs):
        state = cls(**kwargs)
        state.m = [np.zeros_like(a) for a in params.arrays()]
        state.v = [np.zeros_like(a) for a in params.arrays()]
        return state


def adam_step(state, params, grads):
    """Bias-corrected Adam update, applied in place; returns ``(state, params)``."""
    if not state.m:
        state.m = [np.zeros_like(a) for a in params.arrays()]
        state.v = [np.zeros_like(a) for a in params.arrays()]
    b1, b2 = state.betas
    state.step += 1
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    flat = [g for pair in grads for g in pair]
    for p, g, m, v in zip(params.arrays(), flat, state.m, state.v):
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    params.version += 1
    return state, params


def loss_and_grads(params, X, Y, normalization="full"):
    P, cache = forward(params, X)
    P2 = P.reshape(1, -1) if cache.single else P
    Y2 = np.asarray(Y, dtype=np.float64).reshape(P2.shape)
    loss = batch_loss(P2, Y2, normalization)
    grads = backward(params, cache, batch_grad(P2, Y2, normalization))
    return loss, grads


@dataclass
class GradCheckResult:
    max_rel_error: float
    n_checked: int
    n_skipped: int
    kinked: bool

    def passed(self, tol=1e-4):
        return self.max_rel_error < tol


def finite_diff_check(params, sample, eps=1e-5, normalization="full", kink_tol=1e-6, grad_fn=None):
    """Compare analytic parameter gradients with central differences.

    ``sample`` is a :class:`~apbench.series.WindowSample` (or any object with
    ``input`` and ``target``).  Parameters whose analytic gradient is below
    1e-8 in magnitude are skipped and counted.  ``kinked`` flags samples
    whose cumulative differences sit within ``kink_tol`` of zero, where the
    loss is not differentiable.  ``grad_fn`` overrides the analytic
    gradient (used to prove the check catches a broken one).
    """
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError(f"eps must be in [1e-7, 1e-3], got {eps}")
    X, y = sample.input, np.asarray(sample.target, dtype=np.float64)
    grad_fn = grad_fn or loss_and_grads
    _, grads = grad_fn(params, X, y, normalization)
    pred = forward(params, X)[0]
    kinked = bool(np.any(np.abs(np.cumsum(pred - y)) <= kink_tol))

    def loss_at():
        return batch_loss(forward(params, X)[0].reshape(1, -1), y.reshape(1, -1), normalization)

    worst, checked, skipped = 0.0, 0, 0
    flat = [g for pair in grads for g in pair]
    for arr, g in zip(params.arrays(), flat):
        for idx in np.ndindex(arr.shape):
            analytic = g[idx]
            if abs(analytic) <= 1e-8:
                skipped += 1
                continue
            orig = arr[idx]
            arr[idx] = orig + eps
            params.version += 1
            up = loss_at()
            arr[idx] = orig - eps
            params.version += 1
            down = loss_at()
            arr[idx] = orig
            params.version += 1
            numeric = (up - down) / (2 * eps)
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric))
            worst = max(worst, rel)
            checked += 1
    return GradCheckResult(worst, checked, skipped, kinked)


def save_checkpoint(path, params, meta=None, extra_arrays=None):
    """Write parameters as flat text.

    Line 1 is a JSON header naming the format, version, layer dims, the
    list of ``[name, shape]`` arrays that follow and free-form ``meta``.
    Each subsequent line holds one array, row-major, as space-separated
    floats with 17 significant digits (exact round trip).
    """
    named = []
    for k, (W, b) in enumerate(params.layers):
        named += [(f"W{k}", W), (f"b{k}", b)]
    for name, arr in (extra_arrays or {}).items():
        named.append((name, np.asarray(arr, dtype=np.float64)))
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "dims": params.dims,
        "head": params.head,
        "arrays": [[name, list(arr.shape)] for name, arr in named],
        "meta": meta or {},
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for _, arr in named:
            fh.write(" ".join(format(float(x), ".17g") for x in arr.ravel()) + "\n")


def load_checkpoint(path):
    """Return ``(params, meta, extra_arrays)`` from :func:`save_checkpoint` output."""
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: not an {CHECKPOINT_FORMAT} checkpoint")
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')}")
        arrays = {}
        for name, shape in header["arrays"]:
            line = fh.readline().split()
            arr = np.array([float(x) for x in line], dtype=np.float64)
            if arr.size != int(np.prod(shape)):
                raise ValueError(f"{path}: array {name} has {arr.size} values, expected shape {shape}")
            arrays[name] = arr.reshape(shape)
    n_layers = len(header["dims"]) - 1
    params = FcnParams(
        [(arrays.pop(f"W{k}"), arrays.pop(f"b{k}")) for k in range(n_layers)], header.get("head", "linear")
    )
    params.check()
    return params, header["meta"], arrays
