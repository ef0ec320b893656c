"""Exact inference on the joint lattice.

Everything here is a standard forward or forward-backward scan over the
cross-product state space, in log space with per-slice rescaling: after each
slice the message is shifted so its log-sum is zero and the shift is banked
in a running normaliser.  The summed normalisers give the log partition
function; the same scan over label-masked node scores gives the log
numerator, and their difference is the conditional log likelihood.

Label conditioning is implemented by masking: a joint state inconsistent
with the clamped labels gets node score -inf, which the log-space scans
propagate as exact zeros.

Filtered quantities (label marginals given x_{1:t} only, and the per-step
argmax labels) come from the forward messages alone, so they are causal: the
output at t is bit-identical whether the scan saw the full sequence or just
its first t steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelSpec, joint_lattice
from .params import ParameterVector, parameter_layout
from .potentials import node_score_matrix, edge_score_matrix

__all__ = [
    "ForwardTrellis",
    "PosteriorSeries",
    "JointPosterior",
    "SequenceModel",
    "log_partition",
    "log_numerator",
    "sequence_log_likelihood",
    "filtered_label_marginals",
    "smoothed_posteriors",
    "constrained_smoothed_posteriors",
    "predict_online",
]


def logsumexp(arr, axis=None, keepdims=False):
    """Max-shifted log-sum-exp that tolerates -inf entries (masked states).

    A column of all -inf yields -inf, never NaN.  Matches scipy's function
    on finite input but is markedly faster on the small arrays the per-slice
    recursions work with.
    """
    arr = np.asarray(arr, dtype=float)
    peak = np.max(arr, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(peak), peak, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(arr - safe), axis=axis, keepdims=True)) + peak
    if not keepdims:
        out = np.squeeze(out, axis=axis) if axis is not None else out.reshape(())
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class ForwardTrellis:
    """Rescaled forward messages.

    ``log_messages[t]`` is the forward message of slice t, shifted so that
    its log-sum is zero; ``log_normalizers[t]`` is the shift.  The log
    partition function is the sum of the shifts.
    """

    log_messages: np.ndarray    # (T, M)
    log_normalizers: np.ndarray  # (T,)

    @property
    def log_partition(self) -> float:
        return float(np.sum(self.log_normalizers))


@dataclass(frozen=True)
class PosteriorSeries:
    """Per-category label marginals over time.

    ``probabilities[c][t, l]`` is the probability of label l of category c
    at time t.  ``kind`` records the conditioning: "filtered" marginals
    condition on x_{1:t}, "smoothed" on the whole sequence.
    """

    kind: str
    alphabets: tuple[tuple[str, ...], ...]
    probabilities: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class JointPosterior:
    """Joint-state posteriors: node (T, M) and consecutive-pair (T-1, M, M)."""

    node: np.ndarray
    pair: np.ndarray


def _forward(node_scores: np.ndarray, edge: np.ndarray, rescale: bool = True) -> ForwardTrellis:
    T, M = node_scores.shape
    msgs = np.empty((T, M))
    norms = np.zeros(T)
    a = node_scores[0].copy()
    for t in range(T):
        if t > 0:
            a = node_scores[t] + logsumexp(a[:, None] + edge, axis=0)
        if rescale:
            c = logsumexp(a)
            a = a - c
            norms[t] = c
        msgs[t] = a
    if not rescale:
        # Raw messages; bank the whole mass in the last normaliser so that
        # log_partition reads the same either way.
        norms[-1] = logsumexp(msgs[-1])
    return ForwardTrellis(log_messages=msgs, log_normalizers=norms)


def _backward(node_scores: np.ndarray, edge: np.ndarray) -> np.ndarray:
    """(T, M) rescaled backward messages; each slice's log-sum is zero."""
    T, M = node_scores.shape
    msgs = np.empty((T, M))
    b = np.zeros(M)
    msgs[T - 1] = b - logsumexp(b)
    for t in range(T - 2, -1, -1):
        b = logsumexp(edge + (node_scores[t + 1] + msgs[t + 1])[None, :], axis=1)
        msgs[t] = b - logsumexp(b)
    return msgs


class SequenceModel:
    """A spec bound to weights, with the edge table built once.

    Use this class when scoring many sequences under the same weights; the
    module-level functions are one-shot conveniences that build a fresh
    instance per call.
    """

    def __init__(self, spec: ModelSpec, params: ParameterVector):
        if params.spec is not spec and params.spec != spec:
            raise ValueError("params were built for a different spec")
        self.spec = spec
        self.params = params
        self.lattice = joint_lattice(spec)
        self.edge = edge_score_matrix(params, self.lattice)

    # -- score tables -----------------------------------------------------

    def node_scores(self, xs) -> np.ndarray:
        return node_score_matrix(self.params, xs, self.lattice)

    def _masked_node_scores(self, xs, labels) -> np.ndarray:
        scores = self.node_scores(xs)
        labels = self._check_labels(labels, scores.shape[0])
        for t in range(scores.shape[0]):
            mask = self.lattice.constrained_mask(labels[t])
            scores[t, ~mask] = -np.inf
        return scores

    def _check_labels(self, labels, T: int) -> np.ndarray:
        labels = np.asarray(labels)
        if labels.ndim == 1:
            labels = labels[:, None]
        if labels.shape != (T, self.spec.n_categories):
            raise ValueError(
                f"labels must be shaped ({T}, {self.spec.n_categories}), got {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ValueError("labels must be integer indices; see encode_labels")
        for c in range(self.spec.n_categories):
            n = len(self.spec.label_alphabet[c])
            if labels[:, c].min(initial=0) < 0 or labels[:, c].max(initial=0) >= n:
                raise ValueError(f"label index outside the alphabet of category {c}")
        return labels

    # -- partition and likelihood -----------------------------------------

    def forward(self, xs, labels=None, rescale: bool = True) -> ForwardTrellis:
        node = self.node_scores(xs) if labels is None else self._masked_node_scores(xs, labels)
        return _forward(node, self.edge, rescale=rescale)

    def log_partition(self, xs) -> float:
        return self.forward(xs).log_partition

    def log_numerator(self, xs, labels) -> float:
        return self.forward(xs, labels).log_partition

    def sequence_log_likelihood(self, xs, labels) -> float:
        return self.log_numerator(xs, labels) - self.log_partition(xs)

    # -- filtered quantities ----------------------------------------------

    def filtered_joint_marginals(self, xs) -> np.ndarray:
        """(T, M) joint-state marginals given x_{1:t} at each t."""
        trellis = self.forward(xs)
        return np.exp(trellis.log_messages)

    def filtered_label_marginals(self, xs) -> PosteriorSeries:
        joint = self.filtered_joint_marginals(xs)
        probs = tuple(joint @ self.lattice.label_projection(c)
                      for c in range(self.spec.n_categories))
        return PosteriorSeries(kind="filtered", alphabets=self.spec.label_alphabet,
                               probabilities=probs)

    def predict_online(self, xs) -> list[np.ndarray]:
        """Per-category argmax of the filtered label marginals at each step.

        Ties resolve to the lowest label index (np.argmax convention).
        """
        series = self.filtered_label_marginals(xs)
        return [np.argmax(p, axis=1) for p in series.probabilities]

    # -- smoothed quantities ----------------------------------------------

    def _joint_posterior(self, node: np.ndarray) -> JointPosterior:
        T, M = node.shape
        fwd = _forward(node, self.edge)
        bwd = _backward(node, self.edge)
        scores = fwd.log_messages + bwd
        node_post = np.exp(scores - logsumexp(scores, axis=1, keepdims=True))
        pair = np.empty((max(T - 1, 0), M, M))
        for t in range(1, T):
            logq = (fwd.log_messages[t - 1][:, None] + self.edge
                    + (node[t] + bwd[t])[None, :])
            pair[t - 1] = np.exp(logq - logsumexp(logq))
        return JointPosterior(node=node_post, pair=pair)

    def smoothed_posteriors(self, xs) -> tuple[PosteriorSeries, JointPosterior]:
        joint = self._joint_posterior(self.node_scores(xs))
        probs = tuple(joint.node @ self.lattice.label_projection(c)
                      for c in range(self.spec.n_categories))
        series = PosteriorSeries(kind="smoothed", alphabets=self.spec.label_alphabet,
                                 probabilities=probs)
        return series, joint

    def constrained_smoothed_posteriors(self, xs, labels) -> JointPosterior:
        """Joint-state posteriors with the label sequence clamped."""
        return self._joint_posterior(self._masked_node_scores(xs, labels))

    # -- expected sufficient statistics -----------------------------------

    def posterior_statistics(self, xs, labels=None):
        """One forward-backward pass: (log partition, expected counts).

        With ``labels`` both quantities are label-clamped (the "partition"
        is then the numerator).  Streams over time so only (T, M) and
        (M, M) arrays are held, never (T, M, M).
        """
        spec = self.spec
        lattice = self.lattice
        xs = np.asarray(xs, dtype=float)
        node = self.node_scores(xs) if labels is None else self._masked_node_scores(xs, labels)
        T, M = node.shape
        fwd = _forward(node, self.edge)
        bwd = _backward(node, self.edge)
        scores = fwd.log_messages + bwd
        node_post = np.exp(scores - logsumexp(scores, axis=1, keepdims=True))
        pair_total = np.zeros((M, M))
        for t in range(1, T):
            logq = (fwd.log_messages[t - 1][:, None] + self.edge
                    + (node[t] + bwd[t])[None, :])
            pair_total += np.exp(logq - logsumexp(logq))

        lay = parameter_layout(spec)
        counts = np.zeros(lay.size)
        total_mass = node_post.sum(axis=0)
        for i in range(spec.n_layers):
            mask = np.asarray(spec.feature_masks[i], dtype=int)
            aug = np.concatenate([xs[:, mask], np.ones((T, 1))], axis=1)
            state_marg = node_post @ lattice.layer_onehot(i)      # (T, H_i)
            counts[lay.state_slices[i]] = (state_marg.T @ aug).reshape(-1)
        for i in range(spec.n_layers):
            onehot = lattice.layer_onehot(i)
            counts[lay.transition_slices[i]] = (onehot.T @ pair_total @ onehot).reshape(-1)
        for k, (i, j, lag) in enumerate(spec.influence_links):
            size_j = spec.layer_sizes[j]
            if lag == 0:
                combined = lattice.states[:, i] * size_j + lattice.states[:, j]
                seg = np.bincount(combined, weights=total_mass,
                                  minlength=spec.layer_sizes[i] * size_j)
                counts[lay.influence_slices[k]] = seg
            else:
                oi = lattice.layer_onehot(i)
                oj = lattice.layer_onehot(j)
                counts[lay.influence_slices[k]] = (oi.T @ pair_total @ oj).reshape(-1)
        return fwd.log_partition, counts

    def expected_feature_counts(self, xs, labels=None) -> np.ndarray:
        """Posterior-expected feature counts, flat-layout aligned.

        With ``labels`` the expectation is under the clamped posterior,
        otherwise under the unclamped one.
        """
        return self.posterior_statistics(xs, labels)[1]


# ---------------------------------------------------------------------------
# One-shot conveniences


def log_partition(spec: ModelSpec, params: ParameterVector, xs) -> float:
    return SequenceModel(spec, params).log_partition(xs)


def log_numerator(spec: ModelSpec, params: ParameterVector, xs, labels) -> float:
    return SequenceModel(spec, params).log_numerator(xs, labels)


def sequence_log_likelihood(spec: ModelSpec, params: ParameterVector, xs, labels) -> float:
    return SequenceModel(spec, params).sequence_log_likelihood(xs, labels)


def filtered_label_marginals(spec: ModelSpec, params: ParameterVector, xs) -> PosteriorSeries:
    return SequenceModel(spec, params).filtered_label_marginals(xs)


def smoothed_posteriors(spec: ModelSpec, params: ParameterVector, xs):
    return SequenceModel(spec, params).smoothed_posteriors(xs)


def constrained_smoothed_posteriors(spec: ModelSpec, params: ParameterVector, xs, labels):
    return SequenceModel(spec, params).constrained_smoothed_posteriors(xs, labels)


def predict_online(spec: ModelSpec, params: ParameterVector, xs) -> list[np.ndarray]:
    return SequenceModel(spec, params).predict_online(xs)
