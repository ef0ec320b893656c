"""Synthetic sequence generators used by tests and benchmarks.

Two tasks with known structure:

* `make_separable_sequences`: the label is the sign of one feature, with a
  margin, so any observation-linear tagger should reach near-perfect
  accuracy.  A sanity task.
* `make_latent_regime_sequences`: each label hides two emission regimes
  whose class-conditional means are not linearly separable from the other
  label's mixture, but become separable once a hidden state per regime is
  available.  A single-state-per-label model tops out well below a
  two-state model here, which is the point.
"""

from __future__ import annotations

import numpy as np

__all__ = ["make_separable_sequences", "make_latent_regime_sequences"]


def make_separable_sequences(n_sequences: int, length: int, seed: int = 0,
                             margin: float = 1.0, noise: float = 0.05,
                             stay_prob: float = 0.95):
    """Label runs with the sign of feature 0 carrying the label.

    Returns ``(X, y)``: a list of (T, 2) float arrays and a list of (T,)
    label-string arrays over the alphabet ("neg", "pos").
    """
    rng = np.random.default_rng(seed)
    X, y = [], []
    for _ in range(n_sequences):
        labels = np.empty(length, dtype=object)
        xs = np.empty((length, 2))
        state = rng.integers(2)
        for t in range(length):
            if t > 0 and rng.random() > stay_prob:
                state = 1 - state
            sign = 1.0 if state == 1 else -1.0
            xs[t, 0] = sign * margin + rng.normal(scale=noise)
            xs[t, 1] = rng.normal(scale=noise)
            labels[t] = "pos" if state == 1 else "neg"
        X.append(xs)
        y.append(labels)
    return X, y


# Class-conditional regime means: label "a" lives on the x axis, label "b"
# on the y axis, so neither label is linearly separable from the other's
# mixture, but each (label, regime) cluster is isolated.
_REGIME_MEANS = {
    "a": (np.array([2.0, 0.0]), np.array([-2.0, 0.0])),
    "b": (np.array([0.0, 2.0]), np.array([0.0, -2.0])),
}


def make_latent_regime_sequences(n_sequences: int, length: int, seed: int = 0,
                                 noise: float = 0.3, stay_prob: float = 0.97,
                                 regime_stay_prob: float = 0.8):
    """Two labels, each emitting from one of two hidden Gaussian regimes.

    Labels switch rarely; the active regime switches more often and
    persists, so regime identity carries across steps the way a hidden
    state can track but a single emission weight vector cannot.

    Returns ``(X, y)`` in the same format as `make_separable_sequences`,
    over the alphabet ("a", "b").
    """
    rng = np.random.default_rng(seed)
    X, y = [], []
    for _ in range(n_sequences):
        labels = np.empty(length, dtype=object)
        xs = np.empty((length, 2))
        label = "a" if rng.integers(2) == 0 else "b"
        regime = int(rng.integers(2))
        for t in range(length):
            if t > 0:
                if rng.random() > stay_prob:
                    label = "b" if label == "a" else "a"
                    regime = int(rng.integers(2))
                elif rng.random() > regime_stay_prob:
                    regime = 1 - regime
            mean = _REGIME_MEANS[label][regime]
            xs[t] = mean + rng.normal(scale=noise, size=2)
            labels[t] = label
        X.append(xs)
        y.append(labels)
    return X, y
