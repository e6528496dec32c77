"""Scikit-learn style classifier around the instrumented training loop."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import network as nn
from .strategies import EnpWindow, MixupSchedule
from .training import MetricOptions, Streams, build_model, run_training


def build_schedule(alpha, enp_alpha, enp_end_epoch, enp_acc_threshold):
    """Assemble the per-epoch mix policy from flat estimator/config fields.

    With no window fields, the baseline alpha applies throughout. When a
    window is given, ``enp_alpha=None`` pauses mixing inside it.
    """
    if enp_end_epoch is not None and enp_acc_threshold is not None:
        raise ValueError("give either a fixed window or an accuracy threshold, not both")
    if enp_end_epoch is not None:
        window = EnpWindow(mode="fixed_epochs", end_epoch=enp_end_epoch)
        return MixupSchedule(alpha, enp_alpha, window)
    if enp_acc_threshold is not None:
        window = EnpWindow(mode="accuracy_threshold", acc_threshold=enp_acc_threshold)
        return MixupSchedule(alpha, enp_alpha, window)
    return MixupSchedule(alpha, alpha, EnpWindow(mode="fixed_epochs", end_epoch=0))


class MixupMLPClassifier(BaseEstimator, ClassifierMixin):
    """Dense MLP trained by SGD with an optional early-window mixup policy.

    Parameters
    ----------
    hidden_layer_sizes : tuple of hidden widths; empty gives the linear model.
    activation : hidden-layer activation ("sigmoid", "relu", "identity").
    eta : SGD learning rate.
    epochs, batch_size : loop geometry.
    alpha : baseline Beta(alpha, alpha) mix strength; None trains unmixed.
    enp_alpha : mix strength inside the early window; None pauses mixing there.
    enp_end_epoch : fixed early-window length (half-open [0, end)).
    enp_acc_threshold : early window instead ends once validation accuracy
        first reaches this value (requires validation data in fit).
    per_pair_lambda : draw one mix ratio per pair instead of per batch.
    seed : master seed for all derived RNG streams.
    """

    def __init__(
        self,
        hidden_layer_sizes=(256,),
        activation="sigmoid",
        eta=0.5,
        epochs=20,
        batch_size=32,
        alpha=None,
        enp_alpha=None,
        enp_end_epoch=None,
        enp_acc_threshold=None,
        per_pair_lambda=False,
        seed=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.eta = eta
        self.epochs = epochs
        self.batch_size = batch_size
        self.alpha = alpha
        self.enp_alpha = enp_alpha
        self.enp_end_epoch = enp_end_epoch
        self.enp_acc_threshold = enp_acc_threshold
        self.per_pair_lambda = per_pair_lambda
        self.seed = seed

    def _dataset_from_arrays(self, X, y_idx, class_count):
        from .datasets import Dataset

        return Dataset(X, y_idx, np.arange(len(y_idx)), class_count=class_count)

    def fit(self, X, y, X_val=None, y_val=None, metric_options=None):
        X, y = check_X_y(X, y)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes")
        self.n_features_in_ = X.shape[1]
        class_count = len(self.classes_)

        train = self._dataset_from_arrays(X, y_idx, class_count)
        val = None
        if X_val is not None:
            X_val = check_array(X_val)
            yv = np.searchsorted(self.classes_, y_val)
            if np.any(self.classes_[np.clip(yv, 0, class_count - 1)] != np.asarray(y_val)):
                raise ValueError("validation labels contain unseen classes")
            val = self._dataset_from_arrays(X_val, yv, class_count)
        if self.enp_acc_threshold is not None and val is None:
            raise ValueError("accuracy-threshold windows need validation data")

        schedule = build_schedule(
            self.alpha, self.enp_alpha, self.enp_end_epoch, self.enp_acc_threshold
        )
        streams = Streams(self.seed)
        model = build_model(
            X.shape[1],
            tuple(self.hidden_layer_sizes),
            self.activation,
            class_count,
            streams["init"],
        )
        result = run_training(
            model,
            train,
            val,
            schedule,
            eta=self.eta,
            epochs=self.epochs,
            batch_size=self.batch_size,
            streams=streams,
            options=metric_options or MetricOptions(),
            per_pair_lambda=self.per_pair_lambda,
        )
        self.model_ = result.params
        self.history_ = result.rows
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError("feature count differs from fit")
        scores = nn.batch_scores(self.model_, X)
        return scores[:, 0] if len(self.classes_) == 2 else scores

    def predict_proba(self, X):
        scores = self.decision_function(X)
        if len(self.classes_) == 2:
            p1 = nn.sigmoid(scores)
            return np.column_stack([1.0 - p1, p1])
        shifted = scores - scores.max(axis=1, keepdims=True)
        p = np.exp(shifted)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X):
        scores = self.decision_function(X)
        if len(self.classes_) == 2:
            return self.classes_[(scores > 0.0).astype(int)]
        return self.classes_[np.argmax(scores, axis=1)]
