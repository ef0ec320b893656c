"""Structure tests: spec building, lattice enumeration, parameter layout,
potentials, and feature counts."""

import numpy as np
import pytest

from fldcrf import (ModelSpec, ParameterVector, build_spec, joint_lattice,
                    parameter_layout, init_params, permute_states_within_label,
                    node_log_potential, edge_log_potential, path_score,
                    feature_counts, JointLabelAdapter, encode_labels,
                    decode_labels)

from helpers import random_instance


# -- build_spec -------------------------------------------------------------

def test_crf_parameter_count():
    # Two labels, one state each, D=2: 2 * (2 + 1) state weights + 4 transitions.
    spec = build_spec("crf", ["pos", "neg"], 2)
    assert parameter_layout(spec).size == 10


def test_ldcrf_structure():
    spec = build_spec("ldcrf", ["a", "b"], 3, n_states=3)
    assert spec.layer_sizes == (6,)
    assert spec.states_per_label == ((3, 3),)
    assert list(spec.state_block(0, 0)) == [0, 1, 2]
    assert list(spec.state_block(0, 1)) == [3, 4, 5]
    assert spec.influence_links == ()


def test_fldcrf_s_structure():
    spec = build_spec("fldcrf-s", ["a", "b"], 2, n_layers=3, n_states=2)
    assert spec.category_of_layer == (0, 0, 0)
    assert spec.layer_sizes == (4, 4, 4)
    assert spec.influence_links == ((0, 1, 0), (0, 2, 0), (1, 2, 0))


def test_fcrf_structure():
    spec = build_spec("fcrf", [["a", "b", "c"], ["x", "y"]], 2)
    assert spec.category_of_layer == (0, 1)
    assert spec.layer_sizes == (3, 2)
    assert spec.influence_links == ((0, 1, 0),)


def test_fldcrf_m2_links():
    # Two categories sized 4 and 2, states {2, 3}: cotemporal plus both
    # directed lag-1 links between the two layers.
    spec = build_spec("fldcrf-m2", [["w", "x", "y", "z"], ["p", "q"]], 3,
                      n_states=[2, 3])
    assert spec.influence_links == ((0, 1, 0), (0, 1, 1), (1, 0, 1))
    assert spec.layer_sizes == (8, 6)


def test_ccrf_product_alphabet():
    spec = build_spec("ccrf", [["a", "b"], ["x", "y"]], 2)
    assert spec.n_categories == 1
    assert spec.label_alphabet[0] == ("a|x", "a|y", "b|x", "b|y")
    assert spec.layer_sizes == (4,)


def test_build_spec_rejects_bad_input():
    with pytest.raises(ValueError):
        build_spec("nope", ["a", "b"], 2)
    with pytest.raises(ValueError):
        ModelSpec([["a", "b"]], [0], [[1, 1]], [(0, 0, 0)], [(0, 1)], 2)
    with pytest.raises(ValueError):
        ModelSpec([[]], [0], [[]], [], [()], 2)
    with pytest.raises(ValueError):
        ModelSpec([["a", "b"]], [0], [[0, 1]], [], [(0,)], 2)
    with pytest.raises(ValueError):  # duplicate cotemporal link, flipped
        ModelSpec([["a"], ["x"]], [0, 1], [[1], [1]],
                  [(0, 1, 0), (1, 0, 0)], [(0,), (0,)], 1)
    with pytest.raises(ValueError):  # mask outside input dimensions
        ModelSpec([["a", "b"]], [0], [[1, 1]], [], [(0, 2)], 2)
    with pytest.raises(ValueError):  # category without a layer
        ModelSpec([["a"], ["x"]], [0], [[1]], [], [(0,)], 1)


# -- lattice ----------------------------------------------------------------

def test_lattice_enumeration_order():
    # Layer 0 varies fastest: (h0, h1) pairs in odometer order.
    spec = build_spec("custom", [["a", "b"]], 1, category_of_layer=[0, 0],
                      states_per_label=[[1, 1], [2, 1]])
    lattice = joint_lattice(spec)
    assert lattice.n_joint_states == 6
    expected = [(0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (1, 2)]
    assert [tuple(s) for s in lattice.states] == expected


def test_lattice_constrained_mask():
    spec = build_spec("ldcrf", ["a", "b"], 1, n_states=2)
    lattice = joint_lattice(spec)
    mask_a = lattice.constrained_mask((0,))
    mask_b = lattice.constrained_mask((1,))
    assert mask_a.tolist() == [True, True, False, False]
    assert mask_b.tolist() == [False, False, True, True]
    # Blocks partition the state space: exactly one label owns each state.
    assert np.all(mask_a ^ mask_b)


def test_label_projection_reads_first_layer_of_category():
    spec = build_spec("fldcrf-s", ["a", "b"], 1, n_layers=2, n_states=1)
    lattice = joint_lattice(spec)
    proj = lattice.label_projection(0)
    # Joint states in order: (0,0), (1,0), (0,1), (1,1); the category's
    # marginal reads layer 0's component.
    assert proj.tolist() == [[1, 0], [0, 1], [1, 0], [0, 1]]


# -- parameter layout -------------------------------------------------------

def test_parameter_vector_views():
    spec = build_spec("crf", ["pos", "neg"], 2)
    flat = np.arange(10, dtype=float)
    params = ParameterVector(spec, flat)
    assert params.state_weights(0).tolist() == [[0, 1, 2], [3, 4, 5]]
    assert params.transition_weights(0).tolist() == [[6, 7], [8, 9]]
    with pytest.raises(ValueError):
        ParameterVector(spec, np.zeros(9))
    with pytest.raises(ValueError):
        ParameterVector(spec, np.full(10, np.nan))


def test_parameter_vector_is_immutable():
    spec = build_spec("crf", ["a", "b"], 1)
    params = ParameterVector.zeros(spec)
    with pytest.raises(ValueError):
        params.flat[0] = 1.0


def test_influence_segment_order_follows_declaration():
    spec = build_spec("fldcrf-m2", [["a", "b"], ["x", "y"]], 1, n_states=1)
    lay = parameter_layout(spec)
    # state: 2 layers * 2 states * (1 + 1); transition: 4 + 4; influence: 3 * 4.
    assert lay.size == 8 + 8 + 12
    total = lay.influence_slices[0].start
    assert total == 16
    for k, sl in enumerate(lay.influence_slices):
        assert sl.start == 16 + 4 * k


def test_init_params_seeded_and_bounded():
    spec = build_spec("ldcrf", ["a", "b"], 2, n_states=2)
    p1 = init_params(spec, 0.1, 7)
    p2 = init_params(spec, 0.1, 7)
    p3 = init_params(spec, 0.1, 8)
    assert np.array_equal(p1.flat, p2.flat)
    assert not np.array_equal(p1.flat, p3.flat)
    assert np.all(np.abs(p1.flat) <= 0.1)


# -- potentials -------------------------------------------------------------

def test_node_potential_single_state():
    # One layer, one state, D=1, weights [2.0, 0.5] (input weight, bias):
    # score of x=[3] is 2*3 + 0.5.
    spec = build_spec("custom", [["only"]], 1, category_of_layer=[0],
                      states_per_label=[[1]])
    params = ParameterVector(spec, np.array([2.0, 0.5, 0.0]))
    assert node_log_potential(params, [3.0], (0,)) == pytest.approx(6.5, abs=1e-12)


def test_edge_potential_indexing():
    # transition[previous, current]: row 1, column 0 holds 2.0.
    spec = build_spec("ldcrf", ["a"], 0, n_states=2)
    flat = np.array([0.0, 0.0,           # state biases (D=0, bias only)
                     0.0, 1.0, 2.0, 3.0])  # transitions row-major
    params = ParameterVector(spec, flat)
    assert edge_log_potential(params, (1,), (0,)) == pytest.approx(2.0, abs=1e-12)


def test_cotemporal_influence_enters_node_potential():
    spec = build_spec("fcrf", [["a", "b"], ["x", "y"]], 0)
    flat = np.zeros(parameter_layout(spec).size)
    lay = parameter_layout(spec)
    block = flat[lay.influence_slices[0]].reshape(2, 2)
    block[1, 0] = 5.0
    params = ParameterVector(spec, flat)
    assert node_log_potential(params, [], (1, 0)) == pytest.approx(5.0, abs=1e-12)
    assert node_log_potential(params, [], (0, 1)) == pytest.approx(0.0, abs=1e-12)


def test_lag1_influence_enters_edge_potential():
    spec = build_spec("custom", [["a"], ["x"]], 0, category_of_layer=[0, 1],
                      states_per_label=[[2], [2]], influence_links=[(0, 1, 1)])
    flat = np.zeros(parameter_layout(spec).size)
    lay = parameter_layout(spec)
    block = flat[lay.influence_slices[0]].reshape(2, 2)
    block[0, 1] = 3.0
    params = ParameterVector(spec, flat)
    # Previous state of layer 0 is 0, current state of layer 1 is 1.
    assert edge_log_potential(params, (0, 0), (0, 1)) == pytest.approx(3.0, abs=1e-12)
    assert edge_log_potential(params, (1, 0), (0, 1)) == pytest.approx(0.0, abs=1e-12)


def test_feature_counts_score_identity():
    # dot(weights, counts(path)) must equal the summed potentials, for any
    # weights and any path, across all kinds.
    for seed in range(40):
        spec, params, xs, _labels = random_instance(seed, max_T=4)
        rng = np.random.default_rng(seed + 1000)
        lattice = joint_lattice(spec)
        path = lattice.states[rng.integers(0, lattice.n_joint_states, size=xs.shape[0])]
        counts = feature_counts(spec, path, xs)
        lhs = float(np.dot(params.flat, counts))
        rhs = path_score(params, path, xs)
        assert lhs == pytest.approx(rhs, abs=1e-9, rel=1e-12)


def test_feature_counts_no_edge_terms_at_t1():
    spec = build_spec("ldcrf", ["a", "b"], 1, n_states=2)
    counts = feature_counts(spec, [[0]], [[0.5]])
    lay = parameter_layout(spec)
    assert np.all(counts[lay.transition_slices[0]] == 0.0)
    state = counts[lay.state_slices[0]].reshape(4, 2)
    assert state[0].tolist() == [0.5, 1.0]
    assert np.all(state[1:] == 0.0)


# -- permutation utility ----------------------------------------------------

def test_permutation_round_trip():
    spec = build_spec("ldcrf", ["a", "b"], 2, n_states=3)
    params = init_params(spec, 0.5, 3)
    perm = [2, 0, 1]
    inverse = [1, 2, 0]
    once = permute_states_within_label(params, 0, 1, perm)
    assert not np.array_equal(once.flat, params.flat)
    back = permute_states_within_label(once, 0, 1, inverse)
    assert np.array_equal(back.flat, params.flat)


def test_permutation_rejects_non_permutation():
    spec = build_spec("ldcrf", ["a", "b"], 1, n_states=2)
    with pytest.raises(ValueError):
        permute_states_within_label(init_params(spec), 0, 0, [0, 0])


# -- label codec ------------------------------------------------------------

def test_encode_decode_labels():
    spec = build_spec("fcrf", [["a", "b"], ["x", "y"]], 1)
    rows = np.array([["a", "y"], ["b", "x"]], dtype=object)
    idx = encode_labels(spec, rows)
    assert idx.tolist() == [[0, 1], [1, 0]]
    assert np.array_equal(decode_labels(spec, idx), rows)
    with pytest.raises(KeyError):
        encode_labels(spec, np.array([["a", "z"]], dtype=object))


def test_joint_label_adapter_round_trip():
    adapter = JointLabelAdapter([["a", "b"], ["x", "y"]])
    rows = np.array([["a", "x"], ["b", "y"], ["a", "y"]], dtype=object)
    joined = adapter.join_tracks(rows)
    assert joined.tolist() == ["a|x", "b|y", "a|y"]
    assert np.array_equal(adapter.split_track(joined), rows)
    probs = np.array([[0.1, 0.2, 0.3, 0.4]])
    split = adapter.split_posteriors(probs)
    assert split[0][0].tolist() == pytest.approx([0.3, 0.7])
    assert split[1][0].tolist() == pytest.approx([0.4, 0.6])
    with pytest.raises(ValueError):
        JointLabelAdapter([["a|b"], ["x"]])
