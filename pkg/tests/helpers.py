"""Shared test utilities: seeded random model instances and small oracles."""

from __future__ import annotations

import itertools

import numpy as np

from fldcrf import ModelSpec, ParameterVector, build_spec, parameter_layout

ALL_KINDS = ("crf", "ldcrf", "fldcrf-s", "fcrf", "ccrf",
             "fldcrf-m1", "fldcrf-m2", "custom")


def random_spec(rng: np.random.Generator, kind: str, feature_dim: int | None = None) -> ModelSpec:
    """A small random spec of the given kind; every layer has at most 4 states."""
    if feature_dim is None:
        feature_dim = int(rng.integers(1, 4))
    letters = ["a", "b", "c", "d"]

    def alphabet(n):
        return letters[:n]

    if kind == "crf":
        n_labels = int(rng.integers(2, 5))
        return build_spec("crf", alphabet(n_labels), feature_dim)
    if kind == "ldcrf":
        n_labels, n_states = [(2, 1), (2, 2), (3, 1), (4, 1)][int(rng.integers(4))]
        return build_spec("ldcrf", alphabet(n_labels), feature_dim, n_states=n_states)
    if kind == "fldcrf-s":
        per_layer = [int(rng.integers(1, 3)), int(rng.integers(1, 3))]
        return build_spec("fldcrf-s", alphabet(2), feature_dim,
                          n_layers=2, n_states=per_layer)
    if kind == "fcrf":
        sizes = [int(rng.integers(2, 5)), 2]
        return build_spec("fcrf", [alphabet(sizes[0]), ["x", "y"]], feature_dim)
    if kind == "ccrf":
        return build_spec("ccrf", [["a", "b"], ["x", "y"]], feature_dim)
    if kind in ("fldcrf-m1", "fldcrf-m2"):
        states = [int(rng.integers(1, 3)), int(rng.integers(1, 3))]
        return build_spec(kind, [alphabet(2), ["x", "y"]], feature_dim, n_states=states)
    if kind == "custom":
        # Uneven states per label and a lag-1 link between same-category layers.
        return build_spec("custom", [alphabet(2)], feature_dim,
                          category_of_layer=[0, 0],
                          states_per_label=[[1, 3], [2, 1]],
                          influence_links=[(0, 1, 0), (0, 1, 1)])
    raise ValueError(kind)


def random_instance(seed: int, kind: str | None = None, max_T: int = 5,
                    theta_scale: float = 2.0):
    """(spec, params, xs, labels) drawn from one seed.

    Weights are uniform in [-theta_scale, theta_scale]; inputs uniform in
    [-1.5, 1.5]; labels uniform over each category's alphabet.
    """
    rng = np.random.default_rng(seed)
    if kind is None:
        kind = ALL_KINDS[seed % len(ALL_KINDS)]
    spec = random_spec(rng, kind)
    size = parameter_layout(spec).size
    params = ParameterVector(spec, rng.uniform(-theta_scale, theta_scale, size=size))
    T = int(rng.integers(1, max_T + 1))
    xs = rng.uniform(-1.5, 1.5, size=(T, spec.feature_dim))
    labels = np.stack(
        [rng.integers(0, len(spec.label_alphabet[c]), size=T)
         for c in range(spec.n_categories)], axis=1)
    return spec, params, xs, labels


def enumerate_label_assignments(spec: ModelSpec, T: int):
    """Every (T, C) label-index assignment, in lexicographic order."""
    per_step = list(itertools.product(*[range(len(a)) for a in spec.label_alphabet]))
    for combo in itertools.product(per_step, repeat=T):
        yield np.array(combo, dtype=np.int64)


def central_difference_gradient(fun, x0: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function, one entry at a time."""
    grad = np.empty_like(x0)
    for k in range(x0.shape[0]):
        forward = x0.copy()
        forward[k] += step
        backward = x0.copy()
        backward[k] -= step
        grad[k] = (fun(forward) - fun(backward)) / (2.0 * step)
    return grad
