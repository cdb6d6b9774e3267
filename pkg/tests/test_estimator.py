"""Scikit-learn estimator protocol and end-to-end fitting."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from hfe import HFEClassifier, SynthSpec, generate_synthetic
from hfe.types import as_arrays


def easy_dataset(seed=0):
    spec = SynthSpec(num_ids=8, samples_per_id=6, feature_dim=8, hard_frac=0.0, seed=seed)
    return as_arrays(generate_synthetic(spec))


class TestEstimatorProtocol:
    def test_get_params_round_trip(self):
        clf = HFEClassifier(alpha1=0.4, total_iters=50, hidden_dims=(8,))
        params = clf.get_params()
        assert params["alpha1"] == 0.4 and params["total_iters"] == 50
        other = HFEClassifier().set_params(**params)
        assert other.get_params() == params

    def test_clone_preserves_params(self):
        clf = HFEClassifier(seed=9, use_abr=False)
        cloned = clone(clf)
        assert cloned.get_params() == clf.get_params()

    def test_unfitted_estimator_raises(self):
        with pytest.raises(NotFittedError):
            HFEClassifier().predict(np.zeros((2, 4)))

    def test_fit_validates_inputs(self):
        X, Y, ids = easy_dataset()
        clf = HFEClassifier(total_iters=5)
        with pytest.raises(ValueError):
            clf.fit(X, Y[:10], ids)
        with pytest.raises(ValueError):
            clf.fit(X, Y, ids[:10])
        with pytest.raises(ValueError):
            clf.fit(X, Y + 1, ids)


class TestEstimatorTraining:
    def test_fits_separable_data(self):
        X, Y, ids = easy_dataset()
        clf = HFEClassifier(total_iters=300, hidden_dims=(16,), embed_dim=4,
                            learning_rate=3e-3, seed=0)
        clf.fit(X, Y, ids)
        assert clf.score(X, Y) > 0.95
        assert len(clf.history_) == 300
        assert clf.n_features_in_ == 8

    def test_prediction_shapes_and_threshold(self):
        X, Y, ids = easy_dataset(seed=1)
        clf = HFEClassifier(total_iters=20, seed=1).fit(X, Y, ids)
        probs = clf.predict_proba(X)
        preds = clf.predict(X)
        assert probs.shape == preds.shape == Y.shape
        assert np.array_equal(preds, (probs >= 0.5).astype(int))

    def test_transform_concatenates_branch_embeddings(self):
        X, Y, ids = easy_dataset(seed=2)
        clf = HFEClassifier(total_iters=10, embed_dim=5, seed=2).fit(X, Y, ids)
        embs = clf.embeddings(X)
        assert len(embs) == Y.shape[1] and all(e.shape == (X.shape[0], 5) for e in embs)
        assert np.array_equal(clf.transform(X), np.hstack(embs))

    def test_same_seed_reproduces_model(self):
        X, Y, ids = easy_dataset(seed=3)
        a = HFEClassifier(total_iters=40, seed=5).fit(X, Y, ids)
        b = HFEClassifier(total_iters=40, seed=5).fit(X, Y, ids)
        assert np.array_equal(a.predict_proba(X), b.predict_proba(X))
        for ra, rb in zip(a.history_, b.history_):
            assert ra == rb

    def test_ablated_estimator_runs_pure_ce(self):
        X, Y, ids = easy_dataset(seed=4)
        clf = HFEClassifier(total_iters=15, seed=0, use_inter=False, use_intra=False,
                            use_abr=False)
        clf.fit(X, Y, ids)
        assert all(r.hfe == 0.0 and r.total == r.ce for r in clf.history_)
