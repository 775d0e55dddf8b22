"""Mini-batch training with early stopping on validation loss."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .fcn import AdamState, adam_step, loss_and_grads, predict
from .loss import batch_loss

logger = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch, batch, loss):
        super().__init__(f"non-finite training loss {loss} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass
class History:
    records: list = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = math.inf
    stopped_early: bool = False

    def __len__(self):
        return len(self.records)

    @property
    def train_loss(self):
        return [r["train_loss"] for r in self.records]

    @property
    def val_loss(self):
        return [r["val_loss"] for r in self.records]


def fit_network(
    params,
    X,
    Y,
    X_val,
    Y_val,
    *,
    lr=5e-4,
    max_epochs=100,
    patience=10,
    batch_size=64,
    tol=1e-6,
    normalization="full",
    seed=0,
):
    """Train ``params`` with Adam and return ``(best_params, history)``.

    Training stops once the validation loss has failed to improve by more
    than ``tol`` for ``patience`` consecutive epochs.  The returned
    parameters are a copy taken at the best validation epoch.
    """
    if len(X) == 0 or len(X_val) == 0:
        raise ValueError("training and validation sets must be non-empty")
    if patience > max_epochs:
        raise ValueError(f"patience ({patience}) exceeds max_epochs ({max_epochs})")
    rng = np.random.default_rng(seed)
    state = AdamState.for_params(params, lr=lr)
    history = History()
    best = params.copy()
    wait = 0
    n = len(X)
    for epoch in range(1, max_epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, batch_size)):
            idx = order[start : start + batch_size]
            loss, grads = loss_and_grads(params, X[idx], Y[idx], normalization)
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch, b, loss)
            total += loss * len(idx)
            adam_step(state, params, grads)
        val_loss = batch_loss(predict(params, X_val), Y_val, normalization)
        if not math.isfinite(val_loss):
            raise TrainingDivergedError(epoch, -1, val_loss)
        history.records.append({"epoch": epoch, "train_loss": total / n, "val_loss": val_loss})
        logger.info("epoch %d train %.6f val %.6f", epoch, total / n, val_loss)
        if val_loss < history.best_val_loss - tol:
            history.best_val_loss = val_loss
            history.best_epoch = epoch
            best = params.copy()
            wait = 0
        else:
            wait += 1
            if wait >= patience:
                history.stopped_early = True
                break
    return best, history
