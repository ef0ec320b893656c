"""Sequence-tagging metrics.

Counts are exact integers and every rate uses the convention that an empty
denominator yields 0.0 rather than an error, so degenerate folds score
rather than crash.

Two F1 flavours beyond the standard ones:

* `micro_f1` pools true/false positives and negatives over all classes of a
  category.  When the tagger emits exactly one label per token, every error
  is one false positive and one false negative at once, so pooled precision,
  recall, and F1 all collapse to token accuracy.
* `hl_f1` is for a two-class setting where one class ("relax") is so
  dominant that its successes would swamp the pooled counts.  Modified
  precision keeps true positives of both classes but only false positives
  of the rare ("early") class; modified recall likewise only counts false
  negatives of the rare class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConfusionCounts",
    "count_confusions",
    "f1_binary",
    "micro_f1",
    "hl_f1",
    "overall_micro_f1",
    "token_accuracy",
]


@dataclass(frozen=True)
class ConfusionCounts:
    """Per-class tally of a tagging run."""

    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def count_confusions(y_true, y_pred, classes=None) -> dict[str, ConfusionCounts]:
    """Per-class counts from aligned label sequences.

    ``classes`` fixes the keys of the result; by default the sorted union of
    observed labels is used.
    """
    y_true = list(y_true)
    y_pred = list(y_pred)
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted")
    if classes is None:
        classes = sorted(set(y_true) | set(y_pred))
    out = {}
    for cls in classes:
        tp = sum(1 for a, b in zip(y_true, y_pred) if a == cls and b == cls)
        fp = sum(1 for a, b in zip(y_true, y_pred) if a != cls and b == cls)
        fn = sum(1 for a, b in zip(y_true, y_pred) if a == cls and b != cls)
        out[cls] = ConfusionCounts(tp, fp, fn)
    return out


def _f1_from_rates(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def f1_binary(counts: ConfusionCounts) -> float:
    """F1 of one positive class from its own counts."""
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    return _f1_from_rates(precision, recall)


def micro_f1(counts_by_class: dict[str, ConfusionCounts]) -> float:
    """F1 of the pooled counts of all classes."""
    pooled = sum(counts_by_class.values(), ConfusionCounts())
    return f1_binary(pooled)


def hl_f1(counts_by_class: dict[str, ConfusionCounts], early: str, relax: str) -> float:
    """Rare-class-weighted F1 for a two-class category.

    Precision = (TP_early + TP_relax) / (TP_early + TP_relax + FP_early);
    recall replaces FP_early with FN_early.  Mistakes on the dominant relax
    class are thereby ignored except through the rare class's counts.
    """
    if early not in counts_by_class or relax not in counts_by_class:
        raise KeyError(f"need counts for classes {early!r} and {relax!r}")
    tp = counts_by_class[early].tp + counts_by_class[relax].tp
    fp = counts_by_class[early].fp
    fn = counts_by_class[early].fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return _f1_from_rates(precision, recall)


def overall_micro_f1(counts_per_category) -> float:
    """Micro F1 pooled across categories (e.g. for model selection)."""
    pooled = ConfusionCounts()
    for counts_by_class in counts_per_category:
        pooled = sum(counts_by_class.values(), pooled)
    return f1_binary(pooled)


def token_accuracy(y_true, y_pred) -> float:
    """Fraction of positions labelled correctly; 0.0 on empty input."""
    y_true = list(y_true)
    y_pred = list(y_pred)
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted")
    if not y_true:
        return 0.0
    return sum(1 for a, b in zip(y_true, y_pred) if a == b) / len(y_true)
