"""Model structure for factored latent-dynamic conditional random fields.

A model is a set of hidden-state chains ("layers") running in parallel over a
shared observation sequence.  Each layer is assigned to one label category and
owns a private pool of hidden states, partitioned into disjoint blocks, one
block per label of that category.  A layer's state at time t is restricted to
the block of the label emitted at t, which is how hidden dynamics stay tied to
the supervision.  Layers interact through "influence" links: cotemporal links
couple two layers at the same time step, lag-1 links couple a layer's previous
state to another layer's current state.

Familiar models are corner cases of this structure:

* one layer, one state per label, no links: a linear-chain CRF;
* one layer, several states per label: a latent-dynamic CRF (LDCRF);
* one layer per category, one state per label, cotemporal links: a factorial
  CRF;
* a single layer over the cross-product label alphabet: a coupled CRF.

`ModelSpec` is a frozen declarative description.  `JointLattice` materialises
the cross-product state space used by exact inference: joint states are
enumerated lexicographically with layer 0 varying fastest, so joint index m
decodes as h_0 = m % |H_0|, h_1 = (m // |H_0|) % |H_1|, and so on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

__all__ = [
    "ModelSpec",
    "JointLattice",
    "JointLabelAdapter",
    "build_spec",
    "joint_lattice",
    "encode_labels",
    "decode_labels",
    "MODEL_KINDS",
]

MODEL_KINDS = (
    "crf",
    "ldcrf",
    "fldcrf-s",
    "fcrf",
    "ccrf",
    "fldcrf-m1",
    "fldcrf-m2",
    "custom",
)


@dataclass(frozen=True)
class ModelSpec:
    """Declarative model structure.  Immutable and hashable.

    Parameters
    ----------
    label_alphabet : tuple of tuples of str
        One alphabet per label category, in a fixed declared order.  Label
        positions within an alphabet define the integer encoding used
        throughout the package.
    category_of_layer : tuple of int
        For each layer, the index of the category it predicts.  Every
        category must be covered by at least one layer.
    states_per_label : tuple of tuples of int
        ``states_per_label[i][l]`` is the number of hidden states layer i
        devotes to label l of its category.  Blocks tile ``0..size-1``
        contiguously in alphabet order, so layer i has
        ``sum(states_per_label[i])`` states.
    influence_links : tuple of (int, int, int)
        Directed links ``(i, j, lag)`` scoring the pair (state of layer i at
        t - lag, state of layer j at t).  ``lag`` is 0 or 1.  A cotemporal
        link is undirected: ``(i, j, 0)`` and ``(j, i, 0)`` are the same link
        and only one may be declared.
    feature_masks : tuple of tuples of int
        Per layer, the sorted observation dimensions its state weights see.
    feature_dim : int
        Dimension of the observation vectors x_t.
    """

    label_alphabet: tuple[tuple[str, ...], ...]
    category_of_layer: tuple[int, ...]
    states_per_label: tuple[tuple[int, ...], ...]
    influence_links: tuple[tuple[int, int, int], ...]
    feature_masks: tuple[tuple[int, ...], ...]
    feature_dim: int

    def __post_init__(self):
        # Coerce nested sequences to tuples so hand-built specs with lists
        # still hash and compare correctly.
        object.__setattr__(
            self, "label_alphabet",
            tuple(tuple(str(s) for s in alpha) for alpha in self.label_alphabet))
        object.__setattr__(self, "category_of_layer", tuple(int(c) for c in self.category_of_layer))
        object.__setattr__(
            self, "states_per_label",
            tuple(tuple(int(n) for n in row) for row in self.states_per_label))
        object.__setattr__(
            self, "influence_links",
            tuple((int(i), int(j), int(lag)) for i, j, lag in self.influence_links))
        object.__setattr__(
            self, "feature_masks",
            tuple(tuple(int(d) for d in mask) for mask in self.feature_masks))
        object.__setattr__(self, "feature_dim", int(self.feature_dim))
        self._validate()

    def _validate(self):
        if not self.label_alphabet:
            raise ValueError("at least one label category is required")
        for c, alpha in enumerate(self.label_alphabet):
            if not alpha:
                raise ValueError(f"label category {c} has an empty alphabet")
            if len(set(alpha)) != len(alpha):
                raise ValueError(f"label category {c} has duplicate labels")
        n_cat = len(self.label_alphabet)
        if not self.category_of_layer:
            raise ValueError("at least one layer is required")
        for i, c in enumerate(self.category_of_layer):
            if not 0 <= c < n_cat:
                raise ValueError(f"layer {i} references unknown category {c}")
        missing = set(range(n_cat)) - set(self.category_of_layer)
        if missing:
            raise ValueError(f"categories {sorted(missing)} have no layer")
        n_layers = len(self.category_of_layer)
        if len(self.states_per_label) != n_layers:
            raise ValueError("states_per_label must have one row per layer")
        for i, row in enumerate(self.states_per_label):
            n_labels = len(self.label_alphabet[self.category_of_layer[i]])
            if len(row) != n_labels:
                raise ValueError(
                    f"layer {i} needs {n_labels} state counts, got {len(row)}")
            if any(n < 1 for n in row):
                raise ValueError(f"layer {i} has a non-positive state count")
        if self.feature_dim < 0:
            raise ValueError("feature_dim must be non-negative")
        if len(self.feature_masks) != n_layers:
            raise ValueError("feature_masks must have one entry per layer")
        for i, mask in enumerate(self.feature_masks):
            if any(not 0 <= d < self.feature_dim for d in mask):
                raise ValueError(f"layer {i} mask references dimensions outside the input")
            if list(mask) != sorted(set(mask)):
                raise ValueError(f"layer {i} mask must be sorted and free of duplicates")
        seen = set()
        for i, j, lag in self.influence_links:
            if not (0 <= i < n_layers and 0 <= j < n_layers):
                raise ValueError(f"influence link ({i}, {j}, {lag}) references unknown layers")
            if lag not in (0, 1):
                raise ValueError(f"influence link ({i}, {j}, {lag}) has unsupported lag")
            if i == j and lag == 0:
                raise ValueError("a cotemporal link cannot connect a layer to itself")
            key = (min(i, j), max(i, j), 0) if lag == 0 else (i, j, 1)
            if key in seen:
                raise ValueError(f"influence link ({i}, {j}, {lag}) is declared twice")
            seen.add(key)

    # -- derived structure ------------------------------------------------

    @property
    def n_categories(self) -> int:
        return len(self.label_alphabet)

    @property
    def n_layers(self) -> int:
        return len(self.category_of_layer)

    @cached_property
    def layer_sizes(self) -> tuple[int, ...]:
        """Number of hidden states of each layer."""
        return tuple(sum(row) for row in self.states_per_label)

    @cached_property
    def state_offsets(self) -> tuple[tuple[int, ...], ...]:
        """Start index of each label's state block, per layer."""
        out = []
        for row in self.states_per_label:
            offs = [0]
            for n in row[:-1]:
                offs.append(offs[-1] + n)
            out.append(tuple(offs))
        return tuple(out)

    @cached_property
    def label_of_state(self) -> tuple[np.ndarray, ...]:
        """Per layer, an array mapping hidden state index to label index."""
        out = []
        for row in self.states_per_label:
            out.append(np.repeat(np.arange(len(row)), row))
        return tuple(out)

    @cached_property
    def canonical_layer(self) -> tuple[int, ...]:
        """Per category, the lowest-indexed layer assigned to it.

        Label marginals of a category are read off this layer.
        """
        first = {}
        for i, c in enumerate(self.category_of_layer):
            first.setdefault(c, i)
        return tuple(first[c] for c in range(self.n_categories))

    def state_block(self, layer: int, label: int) -> range:
        """Hidden states layer ``layer`` may occupy under label ``label``."""
        start = self.state_offsets[layer][label]
        return range(start, start + self.states_per_label[layer][label])

    def label_index(self, category: int, label: str) -> int:
        try:
            return self.label_alphabet[category].index(label)
        except ValueError:
            raise KeyError(
                f"label {label!r} is not in the alphabet of category {category}") from None


class JointLattice:
    """Cross-product state space of all layers at one time step.

    Joint states are enumerated lexicographically with layer 0 varying
    fastest.  ``states[m, i]`` is the state of layer i in joint state m.
    """

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        sizes = spec.layer_sizes
        self.n_joint_states = int(np.prod(sizes))
        m = np.arange(self.n_joint_states)
        radix = 1
        cols = []
        for size in sizes:
            cols.append((m // radix) % size)
            radix *= size
        self.states = np.stack(cols, axis=1)
        # Per layer, label of each joint state's component.
        self.labels_by_layer = np.stack(
            [spec.label_of_state[i][self.states[:, i]] for i in range(spec.n_layers)],
            axis=1)
        self._mask_cache: dict[tuple[int, ...], np.ndarray] = {}
        self._proj_cache: dict[int, np.ndarray] = {}
        self._onehot_cache: dict[int, np.ndarray] = {}

    def constrained_mask(self, label_tuple) -> np.ndarray:
        """Boolean mask of joint states consistent with one label per category.

        ``label_tuple`` holds one label index per category.  A joint state is
        allowed when every layer sits in the state block of its category's
        label.
        """
        key = tuple(int(v) for v in label_tuple)
        mask = self._mask_cache.get(key)
        if mask is None:
            spec = self.spec
            if len(key) != spec.n_categories:
                raise ValueError("need one label index per category")
            mask = np.ones(self.n_joint_states, dtype=bool)
            for i in range(spec.n_layers):
                want = key[spec.category_of_layer[i]]
                n_labels = len(spec.label_alphabet[spec.category_of_layer[i]])
                if not 0 <= want < n_labels:
                    raise ValueError(f"label index {want} outside alphabet of layer {i}")
                mask &= self.labels_by_layer[:, i] == want
            mask.setflags(write=False)
            self._mask_cache[key] = mask
        return mask

    def layer_onehot(self, layer: int) -> np.ndarray:
        """(M, H_layer) indicator matrix of the layer's component state."""
        out = self._onehot_cache.get(layer)
        if out is None:
            size = self.spec.layer_sizes[layer]
            out = np.zeros((self.n_joint_states, size))
            out[np.arange(self.n_joint_states), self.states[:, layer]] = 1.0
            out.setflags(write=False)
            self._onehot_cache[layer] = out
        return out

    def label_projection(self, category: int) -> np.ndarray:
        """(M, n_labels) matrix projecting joint-state mass to label mass.

        Projection reads the category's canonical layer, so the result is a
        proper distribution even when several layers share the category.
        """
        out = self._proj_cache.get(category)
        if out is None:
            layer = self.spec.canonical_layer[category]
            n_labels = len(self.spec.label_alphabet[category])
            out = np.zeros((self.n_joint_states, n_labels))
            out[np.arange(self.n_joint_states), self.labels_by_layer[:, layer]] = 1.0
            out.setflags(write=False)
            self._proj_cache[category] = out
        return out


@lru_cache(maxsize=128)
def joint_lattice(spec: ModelSpec) -> JointLattice:
    """Shared lattice per spec; safe to cache because both are immutable."""
    return JointLattice(spec)


# ---------------------------------------------------------------------------
# Named configurations


def _full_masks(n_layers: int, feature_dim: int):
    return tuple(tuple(range(feature_dim)) for _ in range(n_layers))


def _cotemporal_pairs(n_layers: int):
    return tuple((i, j, 0) for i, j in itertools.combinations(range(n_layers), 2))


def _as_layer_counts(n_states, n_layers: int, what: str) -> list[int]:
    if np.isscalar(n_states):
        return [int(n_states)] * n_layers
    counts = [int(v) for v in n_states]
    if len(counts) != n_layers:
        raise ValueError(f"{what}: expected {n_layers} state counts, got {len(counts)}")
    return counts


class JointLabelAdapter:
    """Maps between per-category label tracks and one cross-product track.

    A coupled model folds all categories into a single chain whose alphabet
    is the cartesian product of the per-category alphabets (first category
    slowest-varying, matching ``itertools.product``).  Joint labels are
    rendered ``"a|b"``; input labels therefore must not contain ``"|"``.
    """

    SEP = "|"

    def __init__(self, category_alphabets):
        self.category_alphabets = tuple(tuple(a) for a in category_alphabets)
        for alpha in self.category_alphabets:
            for lab in alpha:
                if self.SEP in lab:
                    raise ValueError(
                        f"label {lab!r} contains {self.SEP!r}, which is reserved "
                        "for joined labels")
        combos = list(itertools.product(*self.category_alphabets))
        self.joint_alphabet = tuple(self.SEP.join(c) for c in combos)
        self._combo_index = {c: k for k, c in enumerate(combos)}
        self._combos = combos

    def join_tracks(self, label_rows) -> np.ndarray:
        """(T, C) per-category labels -> (T,) joint labels."""
        rows = np.asarray(label_rows, dtype=object)
        if rows.ndim != 2 or rows.shape[1] != len(self.category_alphabets):
            raise ValueError("need one label per category and time step")
        out = np.empty(rows.shape[0], dtype=object)
        for t in range(rows.shape[0]):
            combo = tuple(rows[t])
            if combo not in self._combo_index:
                raise KeyError(f"label combination {combo!r} outside the declared alphabets")
            out[t] = self.joint_alphabet[self._combo_index[combo]]
        return out

    def split_track(self, joint_labels) -> np.ndarray:
        """(T,) joint labels -> (T, C) per-category labels."""
        out = np.empty((len(joint_labels), len(self.category_alphabets)), dtype=object)
        for t, lab in enumerate(joint_labels):
            parts = tuple(lab.split(self.SEP))
            if parts not in self._combo_index:
                raise KeyError(f"joint label {lab!r} outside the declared alphabets")
            out[t] = parts
        return out

    def split_posteriors(self, joint_probs: np.ndarray) -> list[np.ndarray]:
        """(T, prod) joint-label probabilities -> per-category (T, n_c)."""
        joint_probs = np.asarray(joint_probs, dtype=float)
        out = []
        for c, alpha in enumerate(self.category_alphabets):
            proj = np.zeros((len(self.joint_alphabet), len(alpha)))
            for k, combo in enumerate(self._combos):
                proj[k, alpha.index(combo[c])] = 1.0
            out.append(joint_probs @ proj)
        return out


def build_spec(kind: str,
               label_alphabets,
               feature_dim: int,
               *,
               n_layers: int = 1,
               n_states=1,
               feature_masks=None,
               influence_links=None,
               category_of_layer=None,
               states_per_label=None) -> ModelSpec:
    """Expand a named model kind into a full `ModelSpec`.

    Kinds
    -----
    crf
        One layer per the single category, one state per label, no links.
    ldcrf
        One layer, ``n_states`` hidden states per label.
    fldcrf-s
        ``n_layers`` layers over a single category, ``n_states`` states per
        label (scalar, or one count per layer), cotemporal links between all
        layer pairs.
    fcrf
        One layer per category, one state per label, cotemporal links
        between all pairs: a factorial CRF.
    ccrf
        Single layer over the cross-product alphabet of all categories, one
        state per joint label.  Pair with `JointLabelAdapter` to translate
        label tracks.
    fldcrf-m1
        One layer per category, ``n_states`` states per label (scalar, or
        one count per category), cotemporal links between all pairs.
    fldcrf-m2
        fldcrf-m1 plus both directed lag-1 links for every layer pair.
    custom
        Caller supplies ``category_of_layer`` and either ``n_states`` per
        layer or explicit ``states_per_label`` rows; links default to none.

    ``label_alphabets`` is a list with one alphabet per category (a single
    alphabet may be passed bare for single-category kinds).
    """
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    if label_alphabets and isinstance(label_alphabets[0], str):
        label_alphabets = [label_alphabets]
    alphabets = tuple(tuple(a) for a in label_alphabets)
    n_cat = len(alphabets)

    def single_category():
        if n_cat != 1:
            raise ValueError(f"kind {kind!r} takes exactly one label category, got {n_cat}")

    if kind == "crf":
        single_category()
        cat_of_layer = (0,)
        counts = [[1] * len(alphabets[0])]
        links = ()
    elif kind == "ldcrf":
        single_category()
        cat_of_layer = (0,)
        counts = [[int(n_states)] * len(alphabets[0])] if np.isscalar(n_states) \
            else [[int(v) for v in n_states]]
        links = ()
    elif kind == "fldcrf-s":
        single_category()
        if n_layers < 1:
            raise ValueError("fldcrf-s needs at least one layer")
        cat_of_layer = (0,) * n_layers
        per_layer = _as_layer_counts(n_states, n_layers, "fldcrf-s")
        counts = [[n] * len(alphabets[0]) for n in per_layer]
        links = _cotemporal_pairs(n_layers)
    elif kind == "fcrf":
        cat_of_layer = tuple(range(n_cat))
        counts = [[1] * len(alphabets[c]) for c in range(n_cat)]
        links = _cotemporal_pairs(n_cat)
    elif kind == "ccrf":
        adapter = JointLabelAdapter(alphabets)
        cat_of_layer = (0,)
        alphabets = (adapter.joint_alphabet,)
        counts = [[int(n_states) if np.isscalar(n_states) else 1] * len(adapter.joint_alphabet)]
        links = ()
    elif kind in ("fldcrf-m1", "fldcrf-m2"):
        if n_cat < 2:
            raise ValueError(f"kind {kind!r} needs at least two label categories")
        cat_of_layer = tuple(range(n_cat))
        per_layer = _as_layer_counts(n_states, n_cat, kind)
        counts = [[per_layer[c]] * len(alphabets[c]) for c in range(n_cat)]
        links = list(_cotemporal_pairs(n_cat))
        if kind == "fldcrf-m2":
            for i, j in itertools.combinations(range(n_cat), 2):
                links.append((i, j, 1))
                links.append((j, i, 1))
        links = tuple(links)
    else:  # custom
        if category_of_layer is None:
            raise ValueError("custom kind requires category_of_layer")
        cat_of_layer = tuple(int(c) for c in category_of_layer)
        if states_per_label is not None:
            counts = [list(row) for row in states_per_label]
        else:
            per_layer = _as_layer_counts(n_states, len(cat_of_layer), "custom")
            counts = [[per_layer[i]] * len(alphabets[cat_of_layer[i]])
                      for i in range(len(cat_of_layer))]
        links = tuple(influence_links) if influence_links is not None else ()

    if kind != "custom" and influence_links is not None:
        links = tuple(influence_links)
    if feature_masks is None:
        feature_masks = _full_masks(len(cat_of_layer), feature_dim)
    return ModelSpec(
        label_alphabet=alphabets,
        category_of_layer=cat_of_layer,
        states_per_label=counts,
        influence_links=links,
        feature_masks=feature_masks,
        feature_dim=feature_dim,
    )


def encode_labels(spec: ModelSpec, label_rows) -> np.ndarray:
    """(T, C) label strings -> (T, C) int indices into the alphabets.

    A single-category track may be passed as a flat sequence.
    """
    rows = np.asarray(label_rows, dtype=object)
    if rows.ndim == 1:
        rows = rows[:, None]
    if rows.ndim != 2 or rows.shape[1] != spec.n_categories:
        raise ValueError(
            f"expected labels shaped (T, {spec.n_categories}), got {rows.shape}")
    out = np.empty(rows.shape, dtype=np.int64)
    for c in range(spec.n_categories):
        lookup = {lab: k for k, lab in enumerate(spec.label_alphabet[c])}
        for t in range(rows.shape[0]):
            try:
                out[t, c] = lookup[rows[t, c]]
            except KeyError:
                raise KeyError(
                    f"label {rows[t, c]!r} at t={t} is not in the alphabet of "
                    f"category {c}") from None
    return out


def decode_labels(spec: ModelSpec, index_rows: np.ndarray) -> np.ndarray:
    """(T, C) int indices -> (T, C) label strings."""
    idx = np.asarray(index_rows)
    if idx.ndim == 1:
        idx = idx[:, None]
    out = np.empty(idx.shape, dtype=object)
    for c in range(spec.n_categories):
        alpha = spec.label_alphabet[c]
        for t in range(idx.shape[0]):
            out[t, c] = alpha[int(idx[t, c])]
    return out
