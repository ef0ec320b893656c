"""Metric unit tests: frozen hand values plus scikit-learn as an outside check."""

import numpy as np
import pytest
from sklearn.metrics import f1_score

from fldcrf.metrics import (
    ConfusionCounts,
    count_confusions,
    f1_binary,
    hl_f1,
    micro_f1,
    overall_micro_f1,
    token_accuracy,
)


# ---------------------------------------------------------------------------
# binary F1


def test_f1_equals_precision_when_rates_match():
    # TP=3, FP=1, FN=1: P = R = 0.75, and 2PR/(P+R) = P
    assert f1_binary(ConfusionCounts(tp=3, fp=1, fn=1)) == pytest.approx(0.75)


def test_f1_hand_value():
    assert f1_binary(ConfusionCounts(tp=2, fp=1, fn=1)) == pytest.approx(2.0 / 3.0)


def test_f1_zero_tp_is_zero():
    assert f1_binary(ConfusionCounts(tp=0, fp=5, fn=0)) == 0.0
    assert f1_binary(ConfusionCounts(tp=0, fp=0, fn=0)) == 0.0


def test_f1_matches_sklearn_on_random_binary_runs():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(4, 40))
        y_true = rng.integers(0, 2, size=n)
        y_pred = rng.integers(0, 2, size=n)
        counts = count_confusions(y_true.tolist(), y_pred.tolist(), classes=[0, 1])
        want = f1_score(y_true, y_pred, pos_label=1, zero_division=0.0)
        assert f1_binary(counts[1]) == pytest.approx(want, abs=1e-12)


# ---------------------------------------------------------------------------
# micro F1


def test_micro_f1_equals_accuracy_for_single_label_predictions():
    y_true = list("aabbccab")
    y_pred = list("abbbccaa")
    counts = count_confusions(y_true, y_pred)
    assert micro_f1(counts) == pytest.approx(token_accuracy(y_true, y_pred))


def test_micro_f1_ten_tokens_seven_correct():
    y_true = ["a"] * 5 + ["b"] * 5
    y_pred = ["a"] * 5 + ["a", "a", "a", "b", "b"]
    counts = count_confusions(y_true, y_pred)
    assert micro_f1(counts) == pytest.approx(0.7)


def test_micro_f1_all_correct():
    counts = count_confusions(["a", "b", "c"], ["a", "b", "c"])
    assert micro_f1(counts) == 1.0


def test_micro_f1_matches_sklearn_multiclass():
    rng = np.random.default_rng(23)
    for _ in range(10):
        n = int(rng.integers(5, 50))
        y_true = rng.integers(0, 4, size=n)
        y_pred = rng.integers(0, 4, size=n)
        counts = count_confusions(y_true.tolist(), y_pred.tolist(), classes=[0, 1, 2, 3])
        want = f1_score(y_true, y_pred, average="micro", zero_division=0.0)
        assert micro_f1(counts) == pytest.approx(want, abs=1e-12)


# ---------------------------------------------------------------------------
# rare-class two-class F1


def test_hl_perfect_run_scores_one():
    counts = {"early": ConfusionCounts(tp=4), "relax": ConfusionCounts(tp=40)}
    assert hl_f1(counts, early="early", relax="relax") == 1.0


def test_hl_ignores_relax_only_errors():
    # errors confined to the dominant class leave the formula untouched
    counts = {"early": ConfusionCounts(tp=4),
              "relax": ConfusionCounts(tp=40, fp=6, fn=0)}
    assert hl_f1(counts, early="early", relax="relax") == 1.0


def test_hl_hand_value():
    counts = {"early": ConfusionCounts(tp=3, fp=2, fn=2),
              "relax": ConfusionCounts(tp=5)}
    assert hl_f1(counts, early="early", relax="relax") == pytest.approx(0.8)


def test_hl_requires_both_classes():
    with pytest.raises(KeyError):
        hl_f1({"early": ConfusionCounts()}, early="early", relax="relax")


# ---------------------------------------------------------------------------
# pooled categories


def test_overall_micro_perfect():
    a = count_confusions(["x", "y"], ["x", "y"])
    b = count_confusions(["u"], ["u"])
    assert overall_micro_f1([a, b]) == 1.0


def test_overall_micro_averages_equal_sized_categories():
    # 10 tokens each: category A 80% right, category B 60% right
    a = count_confusions(["p"] * 10, ["p"] * 8 + ["q"] * 2)
    b = count_confusions(["u"] * 10, ["u"] * 6 + ["v"] * 4)
    assert overall_micro_f1([a, b]) == pytest.approx(0.7)


def test_overall_micro_matches_recomputation_from_raw_lists():
    rng = np.random.default_rng(37)
    for _ in range(10):
        n = int(rng.integers(5, 30))
        cat_a_true = rng.integers(0, 3, size=n).tolist()
        cat_a_pred = rng.integers(0, 3, size=n).tolist()
        cat_b_true = rng.integers(0, 2, size=n).tolist()
        cat_b_pred = rng.integers(0, 2, size=n).tolist()
        pooled = overall_micro_f1([
            count_confusions(cat_a_true, cat_a_pred, classes=[0, 1, 2]),
            count_confusions(cat_b_true, cat_b_pred, classes=[0, 1]),
        ])
        # single label per token in both categories: pooled micro F1 is the
        # accuracy over the concatenated token streams
        correct = sum(a == b for a, b in zip(cat_a_true, cat_a_pred))
        correct += sum(a == b for a, b in zip(cat_b_true, cat_b_pred))
        assert pooled == pytest.approx(correct / (2 * n), abs=1e-12)


# ---------------------------------------------------------------------------
# plumbing


def test_count_confusions_totals_are_consistent():
    y_true = list("aabbcc")
    y_pred = list("abcbca")
    counts = count_confusions(y_true, y_pred)
    total_tp = sum(c.tp for c in counts.values())
    total_fn = sum(c.fn for c in counts.values())
    total_fp = sum(c.fp for c in counts.values())
    assert total_tp + total_fn == len(y_true)
    assert total_fp == total_fn


def test_count_confusions_rejects_length_mismatch():
    with pytest.raises(ValueError, match="length mismatch"):
        count_confusions(["a"], ["a", "b"])


def test_counts_reject_negative_values():
    with pytest.raises(ValueError):
        ConfusionCounts(tp=-1)


def test_metric_bounds():
    rng = np.random.default_rng(51)
    for _ in range(20):
        counts = ConfusionCounts(tp=int(rng.integers(0, 5)),
                                 fp=int(rng.integers(0, 5)),
                                 fn=int(rng.integers(0, 5)))
        assert 0.0 <= f1_binary(counts) <= 1.0


def test_token_accuracy_empty_is_zero():
    assert token_accuracy([], []) == 0.0
