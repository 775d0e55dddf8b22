"""scikit-learn compatible forecasters.

All estimators take stacked windows ``X`` of shape (n, L, M) and horizon
labels ``Y`` of shape (n, T) and predict per-step anomaly probabilities
of shape (n, T).
"""

import logging

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.preprocessing import StandardScaler
from sklearn.utils.validation import check_is_fitted

from . import fcn
from .training import fit_network
from .validation import check_window_arrays

logger = logging.getLogger(__name__)


class FCNForecaster(BaseEstimator):
    """ReLU MLP trained under the cumulative-sum Wasserstein loss.

    Parameters
    ----------
    hidden : int
        Width of every hidden layer.
    n_hidden_layers : int
        Number of hidden ReLU layers.
    head : {"linear", "sigmoid"}
        Output head, see :mod:`apbench.fcn`.  Predictions are in [0, 1] either way.
    lr : float
        Adam learning rate.
    max_epochs, patience : int
        Epoch budget and early-stopping patience (on validation loss).
    batch_size : int
    tol : float
        Minimum validation improvement that resets the patience counter.
    normalization : {"full", "mean"}
        Loss coefficient, ``2 / (T (T + 1))`` or ``1 / T``.
    standardize : bool
        Scale each feature to zero mean and unit variance using training windows.
    validation_fraction : float
        Share of the (chronologically last) training windows held out when
        ``fit`` is called without explicit validation data.
    random_state : int
        Seeds weight initialisation and batch shuffling.
    """

    def __init__(
        self,
        hidden=128,
        n_hidden_layers=2,
        head="linear",
        lr=5e-4,
        max_epochs=100,
        patience=10,
        batch_size=64,
        tol=1e-6,
        normalization="full",
        standardize=True,
        validation_fraction=0.125,
        random_state=0,
    ):
        self.hidden = hidden
        self.n_hidden_layers = n_hidden_layers
        self.head = head
        self.lr = lr
        self.max_epochs = max_epochs
        self.patience = patience
        self.batch_size = batch_size
        self.tol = tol
        self.normalization = normalization
        self.standardize = standardize
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def _scale(self, X):
        if self.scaler_ is None:
            return X
        n, L, M = X.shape
        return self.scaler_.transform(X.reshape(-1, M)).reshape(n, L, M)

    def fit(self, X, Y, X_val=None, Y_val=None):
        X, Y = check_window_arrays(X, Y)
        if X_val is None:
            n_val = max(1, int(round(len(X) * self.validation_fraction)))
            X, X_val, Y, Y_val = X[:-n_val], X[-n_val:], Y[:-n_val], Y[-n_val:]
        else:
            X_val, Y_val = check_window_arrays(X_val, Y_val)
        if self.lr == 0:
            logger.warning("lr=0: parameters will not change")
        _, L, M = X.shape
        T = Y.shape[1]
        self.input_shape_ = (L, M)
        self.n_outputs_ = T
        self.scaler_ = None
        if self.standardize:
            self.scaler_ = StandardScaler().fit(X.reshape(-1, M))
        init = fcn.init_params(L, M, T, self.hidden, self.random_state, self.n_hidden_layers, self.head)
        self.params_, self.history_ = fit_network(
            init,
            self._scale(X),
            Y,
            self._scale(X_val),
            Y_val,
            lr=self.lr,
            max_epochs=self.max_epochs,
            patience=self.patience,
            batch_size=self.batch_size,
            tol=self.tol,
            normalization=self.normalization,
            seed=self.random_state,
        )
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_window_arrays(X)
        if X.shape[1:] != self.input_shape_:
            raise ValueError(f"windows have shape {X.shape[1:]}, model expects {self.input_shape_}")
        return fcn.predict(self.params_, self._scale(X))

    def save(self, path, meta=None):
        check_is_fitted(self, "params_")
        extra = {}
        if self.scaler_ is not None:
            extra = {"scaler_mean": self.scaler_.mean_, "scaler_scale": self.scaler_.scale_}
        meta = dict(meta or {})
        meta["estimator"] = self.get_params()
        meta["input_shape"] = list(self.input_shape_)
        fcn.save_checkpoint(path, self.params_, meta, extra)

    @classmethod
    def load(cls, path):
        params, meta, extra = fcn.load_checkpoint(path)
        est = cls(**meta.get("estimator", {}))
        est.params_ = params
        est.checkpoint_meta_ = meta
        est.input_shape_ = tuple(meta["input_shape"])
        est.n_outputs_ = params.dims[-1]
        est.scaler_ = None
        if "scaler_mean" in extra:
            scaler = StandardScaler()
            scaler.mean_ = extra["scaler_mean"]
            scaler.scale_ = extra["scaler_scale"]
            scaler.var_ = scaler.scale_**2
            scaler.n_features_in_ = scaler.mean_.size
            est.scaler_ = scaler
        return est


class ConstantForecaster(BaseEstimator):
    """Predicts the same probability at every horizon step (``value=0`` gives the all-zeros model)."""

    def __init__(self, value=0.0):
        self.value = value

    def fit(self, X, Y):
        _, Y = check_window_arrays(X, Y)
        self.n_outputs_ = Y.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "n_outputs_")
        X = check_window_arrays(X)
        return np.full((X.shape[0], self.n_outputs_), float(self.value))


class PerfectForecaster(BaseEstimator):
    """Smoke-test oracle that returns each window's true labels.

    It cannot work from inputs alone, so it predicts from whole windows via
    ``predict_windows``; the harness prefers that method when present.
    """

    def fit(self, X=None, Y=None):
        return self

    def predict_windows(self, windows):
        return np.stack([np.asarray(w.target, dtype=np.float64) for w in windows])
