"""Flat parameter vector and its segment layout.

All weights of a model live in one flat float64 vector so that generic
optimisers and finite differencing can treat the model as a black box.  The
layout is fixed by the spec:

1. state segments, one per layer in layer order; layer i contributes
   ``|H_i| * (len(mask_i) + 1)`` entries, state-major, with the masked input
   weights in ascending dimension order followed by a bias weight (the
   observation vector is implicitly extended with a constant 1);
2. transition segments, one per layer; ``|H_i| ** 2`` entries, row-major
   with the previous state as the row;
3. influence segments, one per declared link ``(i, j, lag)`` in declaration
   order; ``|H_i| * |H_j|`` entries, row-major with layer i's state as the
   row.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .model import ModelSpec

__all__ = ["ParameterLayout", "ParameterVector", "parameter_layout",
           "init_params", "permute_states_within_label"]


class ParameterLayout:
    """Offsets and shapes of every weight segment in the flat vector."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        offset = 0
        self.state_slices = []
        self.state_shapes = []
        for i in range(spec.n_layers):
            shape = (spec.layer_sizes[i], len(spec.feature_masks[i]) + 1)
            self.state_slices.append(slice(offset, offset + shape[0] * shape[1]))
            self.state_shapes.append(shape)
            offset += shape[0] * shape[1]
        self.transition_slices = []
        self.transition_shapes = []
        for i in range(spec.n_layers):
            shape = (spec.layer_sizes[i], spec.layer_sizes[i])
            self.transition_slices.append(slice(offset, offset + shape[0] * shape[1]))
            self.transition_shapes.append(shape)
            offset += shape[0] * shape[1]
        self.influence_slices = []
        self.influence_shapes = []
        for i, j, _lag in spec.influence_links:
            shape = (spec.layer_sizes[i], spec.layer_sizes[j])
            self.influence_slices.append(slice(offset, offset + shape[0] * shape[1]))
            self.influence_shapes.append(shape)
            offset += shape[0] * shape[1]
        self.size = offset


@lru_cache(maxsize=128)
def parameter_layout(spec: ModelSpec) -> ParameterLayout:
    return ParameterLayout(spec)


class ParameterVector:
    """Immutable view of a model's weights.

    Wraps the flat vector and exposes the per-segment matrices as read-only
    reshaped views.  Construct with `zeros`, `init_params`, or from an
    optimiser iterate via ``ParameterVector(spec, flat)``.
    """

    def __init__(self, spec: ModelSpec, flat):
        self.spec = spec
        self.layout = parameter_layout(spec)
        arr = np.array(flat, dtype=float, copy=True).reshape(-1)
        if arr.shape[0] != self.layout.size:
            raise ValueError(
                f"parameter vector must have length {self.layout.size}, got {arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("parameter vector contains non-finite entries")
        arr.setflags(write=False)
        self.flat = arr

    @classmethod
    def zeros(cls, spec: ModelSpec) -> "ParameterVector":
        return cls(spec, np.zeros(parameter_layout(spec).size))

    def __len__(self) -> int:
        return self.layout.size

    def state_weights(self, layer: int) -> np.ndarray:
        """(|H_layer|, len(mask) + 1) weights; last column is the bias."""
        lay = self.layout
        return self.flat[lay.state_slices[layer]].reshape(lay.state_shapes[layer])

    def transition_weights(self, layer: int) -> np.ndarray:
        """(|H|, |H|) weights indexed [previous state, current state]."""
        lay = self.layout
        return self.flat[lay.transition_slices[layer]].reshape(lay.transition_shapes[layer])

    def influence_weights(self, link_index: int) -> np.ndarray:
        """(|H_i|, |H_j|) weights of the link at the given declaration index."""
        lay = self.layout
        return self.flat[lay.influence_slices[link_index]].reshape(lay.influence_shapes[link_index])

    def replace(self, flat) -> "ParameterVector":
        return ParameterVector(self.spec, flat)


def init_params(spec: ModelSpec, init_scale: float = 0.1, rng_seed: int = 0) -> ParameterVector:
    """Seeded uniform draw from [-init_scale, init_scale].

    The default is a small random spread rather than zeros: with two or more
    hidden states per label, states within a block are exchangeable at the
    all-zero point, and a gradient method started there never breaks the
    symmetry.
    """
    if init_scale < 0:
        raise ValueError("init_scale must be non-negative")
    rng = np.random.default_rng(rng_seed)
    size = parameter_layout(spec).size
    return ParameterVector(spec, rng.uniform(-init_scale, init_scale, size=size))


def permute_states_within_label(params: ParameterVector, layer: int, label: int,
                                local_perm) -> ParameterVector:
    """Relabel the hidden states inside one label block of one layer.

    ``local_perm[a] = b`` sends local state a to local slot b.  The model
    family is invariant under such relabellings: every aggregate quantity
    (partition function, likelihood, label marginals) is unchanged when the
    weights are carried along with the states.
    """
    spec = params.spec
    block = spec.state_block(layer, label)
    local_perm = np.asarray(local_perm, dtype=int)
    if sorted(local_perm.tolist()) != list(range(len(block))):
        raise ValueError("local_perm must be a permutation of the label's states")
    size = spec.layer_sizes[layer]
    dest = np.arange(size)
    dest[list(block)] = block.start + local_perm
    # inverse[new] = old, so new_table[g] = old_table[inverse[g]].
    inverse = np.empty(size, dtype=int)
    inverse[dest] = np.arange(size)

    flat = params.flat.copy()
    lay = params.layout
    sw = params.state_weights(layer)[inverse]
    flat[lay.state_slices[layer]] = sw.reshape(-1)
    tw = params.transition_weights(layer)[np.ix_(inverse, inverse)]
    flat[lay.transition_slices[layer]] = tw.reshape(-1)
    for k, (i, j, _lag) in enumerate(spec.influence_links):
        w = params.influence_weights(k)
        if i == layer:
            w = w[inverse, :]
        if j == layer:
            w = w[:, inverse]
        flat[lay.influence_slices[k]] = w.reshape(-1)
    return ParameterVector(spec, flat)
