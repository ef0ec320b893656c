"""Estimator facade tests: sklearn conventions, shapes, determinism."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fldcrf import FLDCRF
from fldcrf.synthetic import make_separable_sequences


def tiny_dataset(n=6, length=8, seed=0):
    return make_separable_sequences(n, length, seed=seed)


def two_category_dataset(n=4, length=6, seed=3):
    rng = np.random.default_rng(seed)
    X, y = [], []
    for _ in range(n):
        xs = rng.normal(size=(length, 2))
        labels = np.stack([
            np.where(xs[:, 0] > 0, "pos", "neg"),
            np.where(xs[:, 1] > 0, "up", "down"),
        ], axis=1).astype(object)
        X.append(xs)
        y.append(labels)
    return X, y


# ---------------------------------------------------------------------------
# sklearn conventions


def test_get_params_round_trip():
    est = FLDCRF(kind="fldcrf-s", n_layers=2, n_states=3, sigma2=5.0)
    params = est.get_params()
    assert params["kind"] == "fldcrf-s"
    assert params["n_layers"] == 2
    rebuilt = FLDCRF(**params)
    assert rebuilt.get_params() == params


def test_clone_preserves_configuration():
    est = FLDCRF(kind="crf", max_iter=17, random_state=9)
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()


def test_predict_before_fit_raises():
    with pytest.raises(NotFittedError):
        FLDCRF().predict([np.zeros((3, 1))])


# ---------------------------------------------------------------------------
# fitting and attributes


def test_fit_sets_attributes():
    X, y = tiny_dataset()
    est = FLDCRF(kind="ldcrf", n_states=2, max_iter=30).fit(X, y)
    assert est.classes_ == (("neg", "pos"),)
    assert est.n_features_in_ == X[0].shape[1]
    assert est.spec_.layer_sizes == (4,)
    assert est.params_.flat.shape == (est.params_.layout.size,)
    assert est.report_.iterations >= 1


def test_explicit_alphabet_sets_encoding_order():
    X, y = tiny_dataset()
    est = FLDCRF(kind="crf", label_alphabets=[["pos", "neg"]], max_iter=10).fit(X, y)
    assert est.classes_ == (("pos", "neg"),)


def test_alphabet_category_count_checked():
    X, y = tiny_dataset()
    with pytest.raises(ValueError, match="categories"):
        FLDCRF(kind="crf", label_alphabets=[["a"], ["b"]]).fit(X, y)


def test_length_mismatch_rejected():
    X, y = tiny_dataset()
    y[0] = y[0][:-1]
    with pytest.raises(ValueError, match="lengths differ"):
        FLDCRF().fit(X, y)


def test_empty_input_rejected():
    with pytest.raises(ValueError, match="non-empty"):
        FLDCRF().fit([], [])


def test_ragged_feature_width_rejected():
    X = [np.zeros((3, 2)), np.zeros((3, 3))]
    y = [np.array(["a"] * 3), np.array(["a"] * 3)]
    with pytest.raises(ValueError, match="features"):
        FLDCRF().fit(X, y)


# ---------------------------------------------------------------------------
# prediction shapes


def test_flat_labels_in_flat_predictions_out():
    X, y = tiny_dataset()
    est = FLDCRF(kind="crf", max_iter=30).fit(X, y)
    preds = est.predict(X)
    assert len(preds) == len(X)
    for pred, xs in zip(preds, X):
        assert pred.shape == (xs.shape[0],)
        assert set(pred) <= {"neg", "pos"}


def test_two_category_predictions_are_two_columns():
    X, y = two_category_dataset()
    est = FLDCRF(kind="fcrf", max_iter=25).fit(X, y)
    preds = est.predict(X)
    for pred, xs in zip(preds, X):
        assert pred.shape == (xs.shape[0], 2)
        assert set(pred[:, 0]) <= {"neg", "pos"}
        assert set(pred[:, 1]) <= {"down", "up"}


def test_ccrf_round_trips_category_labels():
    X, y = two_category_dataset()
    est = FLDCRF(kind="ccrf", max_iter=25).fit(X, y)
    assert est.classes_ == (("neg", "pos"), ("down", "up"))
    # internal spec works on the joined alphabet
    assert len(est.spec_.label_alphabet[0]) == 4
    preds = est.predict(X)
    for pred in preds:
        assert pred.shape[1] == 2
        assert set(pred[:, 0]) <= {"neg", "pos"}
        assert set(pred[:, 1]) <= {"down", "up"}


def test_predict_marginals_rows_normalise():
    X, y = two_category_dataset()
    est = FLDCRF(kind="fldcrf-m1", n_states=1, max_iter=20).fit(X, y)
    series = est.predict_marginals(X[:1])[0]
    assert series.kind == "filtered"
    assert [len(a) for a in series.alphabets] == [2, 2]
    for probs in series.probabilities:
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)


def test_marginal_argmax_agrees_with_predict():
    X, y = tiny_dataset()
    est = FLDCRF(kind="ldcrf", n_states=2, max_iter=30).fit(X, y)
    pred = est.predict(X[:1])[0]
    probs = est.predict_marginals(X[:1])[0].probabilities[0]
    alphabet = est.classes_[0]
    derived = [alphabet[k] for k in probs.argmax(axis=1)]
    assert list(pred) == derived


def test_predict_feature_width_checked():
    X, y = tiny_dataset()
    est = FLDCRF(kind="crf", max_iter=10).fit(X, y)
    with pytest.raises(ValueError, match="fitted"):
        est.predict([np.zeros((3, X[0].shape[1] + 1))])


# ---------------------------------------------------------------------------
# behaviour


def test_learns_separable_data():
    X, y = tiny_dataset(n=8, length=10)
    est = FLDCRF(kind="crf", max_iter=200).fit(X, y)
    assert est.score(X, y) >= 0.99


def test_fit_is_deterministic():
    X, y = tiny_dataset()
    a = FLDCRF(kind="ldcrf", n_states=2, max_iter=40, random_state=4).fit(X, y)
    b = FLDCRF(kind="ldcrf", n_states=2, max_iter=40, random_state=4).fit(X, y)
    np.testing.assert_array_equal(a.params_.flat, b.params_.flat)


def test_random_state_changes_initialisation():
    X, y = tiny_dataset()
    a = FLDCRF(kind="ldcrf", n_states=2, max_iter=5, random_state=0).fit(X, y)
    b = FLDCRF(kind="ldcrf", n_states=2, max_iter=5, random_state=1).fit(X, y)
    assert not np.array_equal(a.params_.flat, b.params_.flat)
