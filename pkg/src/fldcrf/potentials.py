"""Log-linear potentials over the joint lattice.

The score of a joint hidden path h_{1:T} given inputs x_{1:T} decomposes into
node terms (state weights dotted with the layer's masked, bias-extended
input, plus cotemporal influence weights) and edge terms between consecutive
slices (per-layer transition weights plus lag-1 influence weights).  Nothing
scores the boundary before t = 1: transition and lag-1 terms simply start at
the second slice, so the path score at T = 1 is a node term only.

`node_log_potential` and `edge_log_potential` are the scalar definitions.
`node_score_matrix` and `edge_score_matrix` are the vectorised tables the
dynamic programs consume; they must agree with the scalar forms, which the
exhaustive tests check by construction.
"""

from __future__ import annotations

import numpy as np

from .model import ModelSpec, JointLattice, joint_lattice
from .params import ParameterVector, parameter_layout

__all__ = [
    "augmented_input",
    "node_log_potential",
    "edge_log_potential",
    "path_score",
    "feature_counts",
    "node_score_matrix",
    "edge_score_matrix",
]


def augmented_input(spec: ModelSpec, layer: int, x_t) -> np.ndarray:
    """Masked input of one layer with the constant bias input appended."""
    x_t = np.asarray(x_t, dtype=float).reshape(-1)
    if x_t.shape[0] != spec.feature_dim:
        raise ValueError(f"expected input of dimension {spec.feature_dim}, got {x_t.shape[0]}")
    mask = np.asarray(spec.feature_masks[layer], dtype=int)
    return np.concatenate([x_t[mask], [1.0]])


def node_log_potential(params: ParameterVector, x_t, joint_state) -> float:
    """Score of one joint state at one time step.

    Sums, over layers, the state weights of the occupied state dotted with
    the layer's bias-extended input, plus the cotemporal influence weights of
    the occupied state pair for every lag-0 link.
    """
    spec = params.spec
    joint_state = tuple(int(h) for h in joint_state)
    if len(joint_state) != spec.n_layers:
        raise ValueError("joint_state must have one state per layer")
    total = 0.0
    for i, h in enumerate(joint_state):
        total += float(np.dot(params.state_weights(i)[h], augmented_input(spec, i, x_t)))
    for k, (i, j, lag) in enumerate(spec.influence_links):
        if lag == 0:
            total += float(params.influence_weights(k)[joint_state[i], joint_state[j]])
    return total


def edge_log_potential(params: ParameterVector, prev_state, cur_state) -> float:
    """Score of a consecutive joint-state pair.

    Sums per-layer transition weights [previous, current] and, for every
    lag-1 link (i, j, 1), the influence weight between layer i's previous
    state and layer j's current state.  Input-independent.
    """
    spec = params.spec
    prev_state = tuple(int(h) for h in prev_state)
    cur_state = tuple(int(h) for h in cur_state)
    if len(prev_state) != spec.n_layers or len(cur_state) != spec.n_layers:
        raise ValueError("joint states must have one state per layer")
    total = 0.0
    for i in range(spec.n_layers):
        total += float(params.transition_weights(i)[prev_state[i], cur_state[i]])
    for k, (i, j, lag) in enumerate(spec.influence_links):
        if lag == 1:
            total += float(params.influence_weights(k)[prev_state[i], cur_state[j]])
    return total


def path_score(params: ParameterVector, path, xs) -> float:
    """Total log score of one joint hidden path."""
    path = np.asarray(path, dtype=int)
    xs = np.asarray(xs, dtype=float)
    total = node_log_potential(params, xs[0], path[0])
    for t in range(1, path.shape[0]):
        total += edge_log_potential(params, path[t - 1], path[t])
        total += node_log_potential(params, xs[t], path[t])
    return total


def feature_counts(spec: ModelSpec, path, xs) -> np.ndarray:
    """Sufficient statistics of one joint path, flat-layout aligned.

    The defining identity, checked exhaustively in tests: for any weights,
    ``dot(flat_weights, feature_counts(path))`` equals `path_score`.
    """
    path = np.asarray(path, dtype=int)
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[0] != path.shape[0]:
        raise ValueError("xs must be (T, D) aligned with the path")
    lay = parameter_layout(spec)
    counts = np.zeros(lay.size)
    T = path.shape[0]
    for t in range(T):
        for i in range(spec.n_layers):
            block = counts[lay.state_slices[i]].reshape(lay.state_shapes[i])
            block[path[t, i]] += augmented_input(spec, i, xs[t])
        for k, (i, j, lag) in enumerate(spec.influence_links):
            if lag == 0:
                block = counts[lay.influence_slices[k]].reshape(lay.influence_shapes[k])
                block[path[t, i], path[t, j]] += 1.0
    for t in range(1, T):
        for i in range(spec.n_layers):
            block = counts[lay.transition_slices[i]].reshape(lay.transition_shapes[i])
            block[path[t - 1, i], path[t, i]] += 1.0
        for k, (i, j, lag) in enumerate(spec.influence_links):
            if lag == 1:
                block = counts[lay.influence_slices[k]].reshape(lay.influence_shapes[k])
                block[path[t - 1, i], path[t, j]] += 1.0
    return counts


def node_score_matrix(params: ParameterVector, xs, lattice: JointLattice | None = None) -> np.ndarray:
    """(T, M) node scores for every slice and joint state."""
    spec = params.spec
    if lattice is None:
        lattice = joint_lattice(spec)
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != spec.feature_dim:
        raise ValueError(f"xs must be (T, {spec.feature_dim})")
    T = xs.shape[0]
    out = np.zeros((T, lattice.n_joint_states))
    for i in range(spec.n_layers):
        mask = np.asarray(spec.feature_masks[i], dtype=int)
        aug = np.concatenate([xs[:, mask], np.ones((T, 1))], axis=1)
        per_state = aug @ params.state_weights(i).T          # (T, H_i)
        out += per_state[:, lattice.states[:, i]]
    cotemporal = np.zeros(lattice.n_joint_states)
    for k, (i, j, lag) in enumerate(spec.influence_links):
        if lag == 0:
            w = params.influence_weights(k)
            cotemporal += w[lattice.states[:, i], lattice.states[:, j]]
    return out + cotemporal[None, :]


def edge_score_matrix(params: ParameterVector, lattice: JointLattice | None = None) -> np.ndarray:
    """(M, M) edge scores indexed [previous joint state, current joint state]."""
    spec = params.spec
    if lattice is None:
        lattice = joint_lattice(spec)
    M = lattice.n_joint_states
    out = np.zeros((M, M))
    for i in range(spec.n_layers):
        w = params.transition_weights(i)
        out += w[np.ix_(lattice.states[:, i], lattice.states[:, i])]
    for k, (i, j, lag) in enumerate(spec.influence_links):
        if lag == 1:
            w = params.influence_weights(k)
            out += w[np.ix_(lattice.states[:, i], lattice.states[:, j])]
    return out
