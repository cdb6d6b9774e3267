"""Scikit-learn style estimator wrapping the full training pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .config import HFEConfig
from .losses import LossFlags
from .metrics import class_based_metrics
from .model import TrainState, forward, new_train_state
from .train import train_loop
from .validation import check_binary_labels, check_features, check_ids


class HFEClassifier(BaseEstimator, TransformerMixin):
    """Multi-attribute binary classifier with hierarchical metric learning.

    Trains a shared-backbone, per-attribute-branch network with cross
    entropy plus quintuplet-mined metric losses (inter-class margin,
    intra-identity ordering, absolute boundary), with an optional cosine
    ramp of the metric weight. ``fit`` needs identity labels alongside the
    attribute labels; prediction is per-sample.

    Follows the scikit-learn estimator protocol (get_params / set_params /
    clone); ``transform`` returns the concatenated per-attribute embeddings
    so the model can sit inside a Pipeline.
    """

    def __init__(self, alpha1=0.3, alpha2=0.1, alpha3=5.0, w0=1.0,
                 total_iters=1000, embed_dim=8, hidden_dims=(32,),
                 ids_per_batch=4, samples_per_id=4, learning_rate=1e-3,
                 seed=0, use_inter=True, use_intra=True, use_abr=True,
                 use_dynamic_weight=True, use_pairwise_intra=False):
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.alpha3 = alpha3
        self.w0 = w0
        self.total_iters = total_iters
        self.embed_dim = embed_dim
        self.hidden_dims = hidden_dims
        self.ids_per_batch = ids_per_batch
        self.samples_per_id = samples_per_id
        self.learning_rate = learning_rate
        self.seed = seed
        self.use_inter = use_inter
        self.use_intra = use_intra
        self.use_abr = use_abr
        self.use_dynamic_weight = use_dynamic_weight
        self.use_pairwise_intra = use_pairwise_intra

    def _flags(self) -> LossFlags:
        return LossFlags(use_inter=self.use_inter, use_intra=self.use_intra,
                         use_abr=self.use_abr,
                         use_dynamic_weight=self.use_dynamic_weight,
                         use_pairwise_intra=self.use_pairwise_intra)

    def fit(self, X, y, ids):
        """Train for ``total_iters`` steps on (features, attributes, identities)."""
        X = check_features(X)
        y = check_binary_labels(y)
        ids = check_ids(ids, n=X.shape[0])
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        config = HFEConfig(
            num_attrs=y.shape[1], feature_dim=X.shape[1],
            alpha1=self.alpha1, alpha2=self.alpha2, alpha3=self.alpha3,
            w0=self.w0, total_iters=int(self.total_iters),
            embed_dim=int(self.embed_dim), hidden_dims=tuple(self.hidden_dims),
            ids_per_batch=int(self.ids_per_batch),
            samples_per_id=int(self.samples_per_id),
            learning_rate=self.learning_rate, seed=int(self.seed),
        )
        self.state_ = new_train_state(config)
        self.history_ = train_loop(self.state_, X, y, ids, self._flags())
        self.config_ = config
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self) -> TrainState:
        if not hasattr(self, "state_"):
            raise NotFittedError("this HFEClassifier instance is not fitted yet")
        return self.state_

    def predict_proba(self, X) -> np.ndarray:
        """Per-attribute positive-class probabilities, shape (n, M)."""
        state = self._check_fitted()
        X = check_features(X)
        _, probs = forward(state.model, X)
        return probs

    def predict(self, X) -> np.ndarray:
        """Binary attribute predictions at threshold 0.5."""
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def embeddings(self, X) -> list[np.ndarray]:
        """Per-attribute embedding matrices, M entries of shape (n, D)."""
        state = self._check_fitted()
        embs, _ = forward(state.model, check_features(X))
        return embs

    def transform(self, X) -> np.ndarray:
        """Concatenated per-attribute embeddings, shape (n, M * D)."""
        return np.hstack(self.embeddings(X))

    def score(self, X, y, ids=None) -> float:
        """Class-based average accuracy (mean per-attribute accuracy)."""
        _, avg = class_based_metrics(self.predict(X), check_binary_labels(y))
        return avg
