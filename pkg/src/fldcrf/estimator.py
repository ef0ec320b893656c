"""Scikit-learn style estimator facade.

`FLDCRF` wraps spec construction, training, and online prediction behind
the familiar ``fit`` / ``predict`` / ``score`` surface.  Sequences are
passed the way sequence taggers usually take them: ``X`` is a list of
(T, D) float arrays, ``y`` a list of per-sequence label arrays, either
(T,) for a single label category or (T, C) for several.

The estimator follows scikit-learn conventions: constructor arguments are
stored untouched (so `get_params`, `set_params`, and `clone` work), all
validation happens in ``fit``, and fitted state lives in trailing-underscore
attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .model import (ModelSpec, JointLabelAdapter, build_spec, encode_labels,
                    decode_labels)
from .params import ParameterVector
from .inference import SequenceModel, PosteriorSeries
from .training import TrainConfig, train

__all__ = ["FLDCRF"]


def _check_sequences(X, feature_dim: int | None = None) -> list[np.ndarray]:
    if not isinstance(X, (list, tuple)) or len(X) == 0:
        raise ValueError("X must be a non-empty list of (T, D) arrays")
    out = []
    for k, xs in enumerate(X):
        xs = np.asarray(xs, dtype=float)
        if xs.ndim != 2 or xs.shape[0] == 0:
            raise ValueError(f"X[{k}] must be a non-empty 2-d array, got shape {xs.shape}")
        if feature_dim is None:
            feature_dim = xs.shape[1]
        elif xs.shape[1] != feature_dim:
            raise ValueError(
                f"X[{k}] has {xs.shape[1]} features but earlier sequences "
                f"have {feature_dim}")
        out.append(xs)
    return out


def _check_labels(y, n_sequences: int):
    """Normalise y to per-sequence (T, C) object arrays; report if input was flat."""
    if not isinstance(y, (list, tuple)) or len(y) != n_sequences:
        raise ValueError("y must be a list with one label array per sequence")
    rows = []
    flat = None
    for k, labels in enumerate(y):
        arr = np.asarray(labels, dtype=object)
        if arr.ndim == 1:
            if flat is False:
                raise ValueError("mix of flat and multi-category label arrays")
            flat = True
            arr = arr[:, None]
        elif arr.ndim == 2:
            if flat is True:
                raise ValueError("mix of flat and multi-category label arrays")
            flat = False
        else:
            raise ValueError(f"y[{k}] must be 1-d or 2-d")
        rows.append(arr)
    n_cat = rows[0].shape[1]
    for k, arr in enumerate(rows):
        if arr.shape[1] != n_cat:
            raise ValueError(f"y[{k}] has {arr.shape[1]} label categories, expected {n_cat}")
    return rows, bool(flat)


class FLDCRF(BaseEstimator):
    """Factored latent-dynamic CRF sequence tagger with online prediction.

    Parameters
    ----------
    kind : str, default "ldcrf"
        Model family member: "crf", "ldcrf", "fldcrf-s", "fcrf", "ccrf",
        "fldcrf-m1", "fldcrf-m2", or "custom".
    n_layers : int, default 1
        Number of hidden layers ("fldcrf-s" only; other kinds fix it).
    n_states : int or sequence, default 2
        Hidden states per label; a sequence gives one count per layer
        ("fldcrf-s") or per category ("fldcrf-m1"/"fldcrf-m2").
    label_alphabets : sequence of sequences, optional
        Closed per-category alphabets, index order defining the label
        encoding.  By default the sorted unique labels seen in ``y``.
    feature_masks : sequence of sequences, optional
        Per-layer observation dimensions; defaults to all dimensions.
    influence_links, category_of_layer, states_per_label : optional
        Passed through to spec construction for kind "custom".
    sigma2 : float, default 10.0
        Gaussian penalty scale; ``math.inf`` disables the penalty.
    max_iter, objective_tol, gradient_tol : optimisation stops.
    init_scale : float, default 0.1
        Half-width of the uniform random weight initialisation.
    random_state : int, default 0
        Seed of the initialisation draw.

    Attributes
    ----------
    spec_ : ModelSpec          trained structure (joint-alphabet for "ccrf")
    params_ : ParameterVector  fitted weights
    report_ : TrainReport      optimisation outcome
    classes_ : tuple of tuples per-category alphabets as the user sees them
    n_features_in_ : int       observation dimension
    """

    def __init__(self, kind="ldcrf", n_layers=1, n_states=2, label_alphabets=None,
                 feature_masks=None, influence_links=None, category_of_layer=None,
                 states_per_label=None, sigma2=10.0, max_iter=1000,
                 objective_tol=1e-9, gradient_tol=1e-6, init_scale=0.1,
                 random_state=0, verbose=False):
        self.kind = kind
        self.n_layers = n_layers
        self.n_states = n_states
        self.label_alphabets = label_alphabets
        self.feature_masks = feature_masks
        self.influence_links = influence_links
        self.category_of_layer = category_of_layer
        self.states_per_label = states_per_label
        self.sigma2 = sigma2
        self.max_iter = max_iter
        self.objective_tol = objective_tol
        self.gradient_tol = gradient_tol
        self.init_scale = init_scale
        self.random_state = random_state
        self.verbose = verbose

    # -- fitting ----------------------------------------------------------

    def fit(self, X, y):
        X = _check_sequences(X)
        rows, flat = _check_labels(y, len(X))
        for xs, labels in zip(X, rows):
            if xs.shape[0] != labels.shape[0]:
                raise ValueError("sequence and label lengths differ")
        if self.label_alphabets is not None:
            alphabets = tuple(tuple(a) for a in self.label_alphabets)
            if len(alphabets) != rows[0].shape[1]:
                raise ValueError(
                    f"label_alphabets declares {len(alphabets)} categories but y "
                    f"has {rows[0].shape[1]}")
        else:
            n_cat = rows[0].shape[1]
            alphabets = tuple(
                tuple(sorted({str(arr[t, c]) for arr in rows for t in range(arr.shape[0])}))
                for c in range(n_cat))
        self._flat_labels_ = flat
        self.classes_ = alphabets
        self.n_features_in_ = X[0].shape[1]

        spec = build_spec(
            self.kind, [list(a) for a in alphabets], self.n_features_in_,
            n_layers=self.n_layers, n_states=self.n_states,
            feature_masks=self.feature_masks, influence_links=self.influence_links,
            category_of_layer=self.category_of_layer,
            states_per_label=self.states_per_label)
        if self.kind == "ccrf":
            self.adapter_ = JointLabelAdapter(alphabets)
            encoded = [encode_labels(spec, self.adapter_.join_tracks(arr)) for arr in rows]
        else:
            self.adapter_ = None
            encoded = [encode_labels(spec, arr) for arr in rows]

        config = TrainConfig(
            sigma2=self.sigma2, max_iterations=self.max_iter,
            objective_rel_tol=self.objective_tol,
            gradient_inf_norm_tol=self.gradient_tol,
            init_scale=self.init_scale, rng_seed=self.random_state,
            verbose=self.verbose)
        self.spec_ = spec
        self.params_, self.report_ = train(spec, list(zip(X, encoded)), config)
        return self

    def _model(self) -> SequenceModel:
        check_is_fitted(self, "params_")
        return SequenceModel(self.spec_, self.params_)

    def _check_predict_input(self, X) -> list[np.ndarray]:
        check_is_fitted(self, "params_")
        X = _check_sequences(X, feature_dim=None)
        for k, xs in enumerate(X):
            if xs.shape[1] != self.n_features_in_:
                raise ValueError(
                    f"X[{k}] has {xs.shape[1]} features but the model was fitted "
                    f"with {self.n_features_in_}")
        return X

    # -- prediction -------------------------------------------------------

    def predict(self, X) -> list[np.ndarray]:
        """Online label predictions, one array per sequence.

        The label at t uses observations up to t only.  Output shape
        mirrors the ``y`` passed to ``fit``: (T,) if it was flat, else
        (T, C).
        """
        X = self._check_predict_input(X)
        model = self._model()
        out = []
        for xs in X:
            tracks = model.predict_online(xs)
            decoded = decode_labels(self.spec_, np.stack(tracks, axis=1))
            if self.adapter_ is not None:
                decoded = self.adapter_.split_track(decoded[:, 0])
            if self._flat_labels_:
                out.append(decoded[:, 0])
            else:
                out.append(decoded)
        return out

    def predict_marginals(self, X) -> list[PosteriorSeries]:
        """Filtered per-category label marginals, one series per sequence."""
        X = self._check_predict_input(X)
        model = self._model()
        out = []
        for xs in X:
            series = model.filtered_label_marginals(xs)
            if self.adapter_ is not None:
                probs = tuple(self.adapter_.split_posteriors(series.probabilities[0]))
                series = PosteriorSeries(kind="filtered",
                                         alphabets=self.adapter_.category_alphabets,
                                         probabilities=probs)
            out.append(series)
        return out

    def score(self, X, y) -> float:
        """Token accuracy pooled over sequences and categories."""
        predictions = self.predict(X)
        rows, _ = _check_labels(y, len(predictions))
        correct = 0
        total = 0
        for pred, truth in zip(predictions, rows):
            pred2 = pred[:, None] if pred.ndim == 1 else pred
            if pred2.shape != truth.shape:
                raise ValueError("prediction and label shapes differ")
            correct += int(np.sum(pred2 == truth))
            total += truth.size
        return correct / total if total else 0.0
