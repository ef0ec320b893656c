"""Brute-force reference implementations by direct enumeration.

These functions define correctness for the dynamic programs: they score
every joint hidden path of length T explicitly and aggregate with logsumexp.
No recursion, no message passing, no shared code with the scan in
`inference` beyond the scalar potential definitions, whose own correctness
is pinned separately by `independent_path_score` (a from-scratch scorer that
reads raw weight segments and never calls the potential functions).

Paths are enumerated lexicographically with the first time step most
significant.  Cost is M**T scores, so a budget guard refuses instances that
would enumerate more than `EnumerationBudget.max_paths` paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import ModelSpec, joint_lattice
from .params import ParameterVector
from .potentials import node_log_potential, edge_log_potential
from .inference import JointPosterior

__all__ = [
    "EnumerationBudget",
    "EnumerationBudgetExceeded",
    "brute_log_partition",
    "brute_log_numerator",
    "brute_posteriors",
    "independent_path_score",
]

DEFAULT_MAX_PATHS = 2_000_000


@dataclass(frozen=True)
class EnumerationBudget:
    """Hard cap on the number of enumerated paths."""

    max_paths: int = DEFAULT_MAX_PATHS

    def __post_init__(self):
        if self.max_paths < 1:
            raise ValueError("max_paths must be positive")


class EnumerationBudgetExceeded(RuntimeError):
    pass


def _check_budget(M: int, T: int, budget: EnumerationBudget | None) -> int:
    budget = budget or EnumerationBudget()
    n_paths = M ** T
    if n_paths > budget.max_paths:
        raise EnumerationBudgetExceeded(
            f"{M}**{T} = {n_paths} paths exceed the enumeration budget "
            f"of {budget.max_paths}")
    return n_paths


def _potential_tables(params: ParameterVector, xs):
    """Tabulate the scalar potentials over the lattice.

    Every entry is one scalar call, so the tables are exactly the
    definitions, merely memoised.
    """
    lattice = joint_lattice(params.spec)
    xs = np.asarray(xs, dtype=float)
    T = xs.shape[0]
    M = lattice.n_joint_states
    node = np.empty((T, M))
    for t in range(T):
        for m in range(M):
            node[t, m] = node_log_potential(params, xs[t], lattice.states[m])
    edge = np.empty((M, M))
    for mp in range(M):
        for m in range(M):
            edge[mp, m] = edge_log_potential(params, lattice.states[mp], lattice.states[m])
    return lattice, node, edge


def _all_path_scores(params: ParameterVector, xs, budget):
    """(P, T) joint-state indices of every path and their (P,) log scores."""
    lattice, node, edge = _potential_tables(params, xs)
    T = np.asarray(xs).shape[0]
    M = lattice.n_joint_states
    n_paths = _check_budget(M, T, budget)
    p = np.arange(n_paths)
    steps = np.empty((n_paths, T), dtype=np.int64)
    for t in range(T):
        # First step most significant: digit t has place value M**(T-1-t).
        steps[:, t] = (p // M ** (T - 1 - t)) % M
    scores = node[0, steps[:, 0]].copy()
    for t in range(1, T):
        scores += edge[steps[:, t - 1], steps[:, t]]
        scores += node[t, steps[:, t]]
    return lattice, steps, scores


def _label_mask(lattice, steps: np.ndarray, labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim == 1:
        labels = labels[:, None]
    allowed = np.ones(steps.shape[0], dtype=bool)
    for t in range(steps.shape[1]):
        slice_mask = lattice.constrained_mask(tuple(labels[t]))
        allowed &= slice_mask[steps[:, t]]
    return allowed


def brute_log_partition(spec: ModelSpec, params: ParameterVector, xs,
                        budget: EnumerationBudget | None = None) -> float:
    """log sum over all joint paths of exp(path score)."""
    _, _, scores = _all_path_scores(params, xs, budget)
    return float(logsumexp(scores))


def brute_log_numerator(spec: ModelSpec, params: ParameterVector, xs, labels,
                        budget: EnumerationBudget | None = None) -> float:
    """Same sum restricted to paths consistent with the clamped labels."""
    lattice, steps, scores = _all_path_scores(params, xs, budget)
    allowed = _label_mask(lattice, steps, labels)
    if not np.any(allowed):
        return float("-inf")
    return float(logsumexp(scores[allowed]))


def brute_posteriors(spec: ModelSpec, params: ParameterVector, xs, labels=None,
                     prefix: int | None = None,
                     budget: EnumerationBudget | None = None) -> JointPosterior:
    """Joint-state posteriors by enumeration.

    With ``labels`` the posterior clamps the label sequence; with ``prefix``
    only the first ``prefix`` observations (and labels) are used, which is
    the reference for filtered quantities.
    """
    xs = np.asarray(xs, dtype=float)
    if prefix is not None:
        xs = xs[:prefix]
        if labels is not None:
            labels = np.asarray(labels)[:prefix]
    T = xs.shape[0]
    lattice, steps, scores = _all_path_scores(params, xs, budget)
    if labels is not None:
        allowed = _label_mask(lattice, steps, labels)
        steps = steps[allowed]
        scores = scores[allowed]
    M = lattice.n_joint_states
    weights = np.exp(scores - logsumexp(scores))
    node = np.zeros((T, M))
    for t in range(T):
        np.add.at(node[t], steps[:, t], weights)
    pair = np.zeros((max(T - 1, 0), M, M))
    for t in range(1, T):
        flat = steps[:, t - 1] * M + steps[:, t]
        seg = np.bincount(flat, weights=weights, minlength=M * M)
        pair[t - 1] = seg.reshape(M, M)
    return JointPosterior(node=node, pair=pair)


def independent_path_score(spec: ModelSpec, params: ParameterVector, path, xs) -> float:
    """Path score recomputed from the raw weight segments alone.

    Deliberately re-derives everything: masks, bias extension, layout
    addressing.  Shares nothing with `potentials` so that a bug there cannot
    cancel against a matching bug here.
    """
    path = np.asarray(path, dtype=int)
    xs = np.asarray(xs, dtype=float)
    flat = params.flat
    sizes = spec.layer_sizes
    # Walk the layout by hand.
    offsets = {}
    pos = 0
    for i in range(spec.n_layers):
        width = len(spec.feature_masks[i]) + 1
        offsets[("state", i)] = (pos, width)
        pos += sizes[i] * width
    for i in range(spec.n_layers):
        offsets[("trans", i)] = pos
        pos += sizes[i] * sizes[i]
    for k, (i, j, _lag) in enumerate(spec.influence_links):
        offsets[("infl", k)] = pos
        pos += sizes[i] * sizes[j]
    assert pos == flat.shape[0]

    total = 0.0
    T = path.shape[0]
    for t in range(T):
        for i in range(spec.n_layers):
            base, width = offsets[("state", i)]
            row = base + path[t, i] * width
            for col, dim in enumerate(spec.feature_masks[i]):
                total += flat[row + col] * xs[t, dim]
            total += flat[row + width - 1]  # bias input is the constant 1
        for k, (i, j, lag) in enumerate(spec.influence_links):
            if lag == 0:
                total += flat[offsets[("infl", k)] + path[t, i] * sizes[j] + path[t, j]]
    for t in range(1, T):
        for i in range(spec.n_layers):
            total += flat[offsets[("trans", i)] + path[t - 1, i] * sizes[i] + path[t, i]]
        for k, (i, j, lag) in enumerate(spec.influence_links):
            if lag == 1:
                total += flat[offsets[("infl", k)] + path[t - 1, i] * sizes[j] + path[t, j]]
    return float(total)
