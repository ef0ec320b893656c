"""CSV sequence loading, preprocessing, and cross-validation planning.

File format: a header row, then one row per time step.  Required columns
are a sequence id, a time index, ``D`` numeric feature columns, and one
column per label category.  Decimal separator is ``.``, encoding is UTF-8,
and an empty feature cell means the value is missing.  Rows of one sequence
must appear contiguously in time order.

Preprocessing is two explicit steps, always in this order:

1. `impute_missing`: forward-fill each feature dimension with the last
   observed value; positions before the first observation become 0.0.
2. `normalize_minmax`: affine map of each dimension to [0, 1], with the
   minimum and maximum fitted on a designated subset of sequences (the
   training part of a fold).  Constant dimensions map to 0.0.  Values of
   other sequences may leave [0, 1]; they are not clipped.

Functions return new objects; loaded data is never mutated in place.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "DataError",
    "SchemaError",
    "SequenceSchema",
    "LabeledSequence",
    "NormalizationRecord",
    "Fold",
    "OuterFold",
    "FoldPlan",
    "load_sequences",
    "write_sequences",
    "impute_missing",
    "normalize_minmax",
    "apply_normalization",
    "plan_nested_cv",
    "split_sequence_frames",
]


class DataError(ValueError):
    """Malformed input file or inconsistent sequence data."""


class SchemaError(DataError):
    """The declared schema names columns the file does not have.

    Kept separate from plain `DataError` because the command line treats a
    schema mismatch as a usage error (exit 2) rather than a runtime
    failure (exit 1).
    """


@dataclass(frozen=True)
class SequenceSchema:
    """Column names of a sequence CSV file."""

    feature_columns: tuple[str, ...]
    label_columns: tuple[str, ...]
    id_column: str = "seq_id"
    time_column: str = "t"
    label_alphabets: dict[str, tuple[str, ...]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
        object.__setattr__(self, "label_columns", tuple(self.label_columns))
        if self.label_alphabets is not None:
            object.__setattr__(
                self, "label_alphabets",
                {k: tuple(v) for k, v in self.label_alphabets.items()})
        names = [self.id_column, self.time_column, *self.feature_columns, *self.label_columns]
        if len(set(names)) != len(names):
            raise DataError("schema column names must be unique")

    def to_dict(self) -> dict:
        out = {
            "id_column": self.id_column,
            "time_column": self.time_column,
            "feature_columns": list(self.feature_columns),
            "label_columns": list(self.label_columns),
        }
        if self.label_alphabets is not None:
            out["label_alphabets"] = {k: list(v) for k, v in self.label_alphabets.items()}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SequenceSchema":
        return cls(
            feature_columns=tuple(d["feature_columns"]),
            label_columns=tuple(d["label_columns"]),
            id_column=d.get("id_column", "seq_id"),
            time_column=d.get("time_column", "t"),
            label_alphabets={k: tuple(v) for k, v in d["label_alphabets"].items()}
            if d.get("label_alphabets") else None,
        )


@dataclass(frozen=True)
class LabeledSequence:
    """One sequence: float features (NaN marks missing) and label strings.

    ``labels`` is (T, C) object-dtype in schema label-column order, or None
    for unlabeled prediction input.
    """

    seq_id: str
    features: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim != 2:
            raise DataError(f"sequence {self.seq_id!r}: features must be 2-d")
        object.__setattr__(self, "features", feats)
        if self.labels is not None:
            labs = np.asarray(self.labels, dtype=object)
            if labs.ndim == 1:
                labs = labs[:, None]
            if labs.shape[0] != feats.shape[0]:
                raise DataError(
                    f"sequence {self.seq_id!r}: {feats.shape[0]} feature rows but "
                    f"{labs.shape[0]} label rows")
            object.__setattr__(self, "labels", labs)

    def __len__(self) -> int:
        return self.features.shape[0]


def load_sequences(path, schema: SequenceSchema) -> list[LabeledSequence]:
    """Read a CSV file into sequences, preserving file order of ids.

    Raises `DataError` on a missing column, a ragged row, a malformed
    number, a non-contiguous sequence id, or (when the schema closes the
    alphabets) an unknown label.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        col = {name: k for k, name in enumerate(header)}
        needed = [schema.id_column, schema.time_column,
                  *schema.feature_columns, *schema.label_columns]
        for name in needed:
            if name not in col:
                raise SchemaError(f"{path}: missing required column {name!r}")
        order: list[str] = []
        feats: dict[str, list[list[float]]] = {}
        labs: dict[str, list[list[str]]] = {}
        last_id = None
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{line_no}: expected {len(header)} cells, got {len(row)}")
            seq_id = row[col[schema.id_column]]
            if seq_id not in feats:
                order.append(seq_id)
                feats[seq_id] = []
                labs[seq_id] = []
            elif seq_id != last_id:
                raise DataError(
                    f"{path}:{line_no}: rows of sequence {seq_id!r} are not contiguous")
            last_id = seq_id
            frow = []
            for name in schema.feature_columns:
                cell = row[col[name]].strip()
                if cell == "":
                    frow.append(float("nan"))
                else:
                    try:
                        frow.append(float(cell))
                    except ValueError:
                        raise DataError(
                            f"{path}:{line_no}: column {name!r} has a malformed "
                            f"number {cell!r}") from None
            feats[seq_id].append(frow)
            lrow = []
            for name in schema.label_columns:
                cell = row[col[name]]
                alphabets = schema.label_alphabets or {}
                if name in alphabets and cell not in alphabets[name]:
                    raise DataError(
                        f"{path}:{line_no}: label {cell!r} is not in the declared "
                        f"alphabet of column {name!r}")
                lrow.append(cell)
            labs[seq_id].append(lrow)
    out = []
    for seq_id in order:
        features = np.array(feats[seq_id], dtype=float).reshape(
            len(feats[seq_id]), len(schema.feature_columns))
        labels = (np.array(labs[seq_id], dtype=object)
                  if schema.label_columns else None)
        out.append(LabeledSequence(seq_id=seq_id, features=features, labels=labels))
    return out


def _format_cell(value: float) -> str:
    if np.isnan(value):
        return ""
    return repr(float(value))


def write_sequences(path, dataset, schema: SequenceSchema,
                    extra_columns: dict[str, dict[str, np.ndarray]] | None = None) -> None:
    """Write sequences back to CSV; the inverse of `load_sequences`.

    ``extra_columns`` maps column name -> seq_id -> (T,) values and is how
    prediction output appends predicted-label columns to the input rows.
    """
    extra_columns = extra_columns or {}
    header = [schema.id_column, schema.time_column,
              *schema.feature_columns, *schema.label_columns, *extra_columns]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for seq in dataset:
            for t in range(len(seq)):
                row = [seq.seq_id, str(t)]
                row.extend(_format_cell(v) for v in seq.features[t])
                if schema.label_columns:
                    if seq.labels is None:
                        raise DataError(
                            f"sequence {seq.seq_id!r} has no labels but the schema "
                            "declares label columns")
                    row.extend(str(v) for v in seq.labels[t])
                for name, per_seq in extra_columns.items():
                    row.append(str(per_seq[seq.seq_id][t]))
                writer.writerow(row)


def impute_missing(dataset) -> list[LabeledSequence]:
    """Forward-fill missing feature values; leading gaps become 0.0."""
    out = []
    for seq in dataset:
        feats = seq.features.copy()
        T = feats.shape[0]
        for d in range(feats.shape[1]):
            col = feats[:, d]
            valid = ~np.isnan(col)
            # Index of the most recent observed position, or -1 before any.
            idx = np.where(valid, np.arange(T), -1)
            idx = np.maximum.accumulate(idx)
            filled = np.where(idx >= 0, col[np.maximum(idx, 0)], 0.0)
            feats[:, d] = filled
        out.append(replace(seq, features=feats))
    return out


@dataclass(frozen=True)
class NormalizationRecord:
    """Fitted per-dimension minima and maxima of a min-max rescaling."""

    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.minimum, dtype=float)
        hi = np.asarray(self.maximum, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DataError("minimum and maximum must be matching 1-d arrays")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise DataError("normalization bounds must be finite")
        if np.any(hi < lo):
            raise DataError("maximum must not be below minimum")
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)

    def transform(self, features: np.ndarray) -> np.ndarray:
        span = self.maximum - self.minimum
        safe = np.where(span == 0.0, 1.0, span)
        scaled = (features - self.minimum) / safe
        return np.where(span == 0.0, 0.0, scaled)

    def to_dict(self) -> dict:
        return {"minimum": [format(v, ".17g") for v in self.minimum],
                "maximum": [format(v, ".17g") for v in self.maximum]}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationRecord":
        return cls(minimum=np.array([float(v) for v in d["minimum"]]),
                   maximum=np.array([float(v) for v in d["maximum"]]))


def normalize_minmax(dataset, fit_ids=None):
    """Fit min-max bounds on a subset of sequences, transform all of them.

    ``fit_ids`` defaults to every sequence.  Returns ``(new_dataset,
    record)``.  Sequences outside the fit set may map outside [0, 1]; no
    clipping is applied, because at prediction time the fit set is the
    training data and unseen values legitimately exceed its range.
    """
    if fit_ids is None:
        fit_ids = [seq.seq_id for seq in dataset]
    fit_ids = set(fit_ids)
    rows = [seq.features for seq in dataset if seq.seq_id in fit_ids]
    if not rows:
        raise DataError("no sequences match fit_ids")
    stacked = np.concatenate(rows, axis=0)
    if np.isnan(stacked).any():
        raise DataError("features contain missing values; impute before normalizing")
    record = NormalizationRecord(minimum=stacked.min(axis=0), maximum=stacked.max(axis=0))
    return apply_normalization(dataset, record), record


def apply_normalization(dataset, record: NormalizationRecord) -> list[LabeledSequence]:
    return [replace(seq, features=record.transform(seq.features)) for seq in dataset]


# ---------------------------------------------------------------------------
# Cross-validation planning


@dataclass(frozen=True)
class Fold:
    """One inner split: train on some ids, validate on the held-out ids."""

    train_ids: tuple[str, ...]
    validation_ids: tuple[str, ...]


@dataclass(frozen=True)
class OuterFold:
    """One outer split: a held-out test group and its inner folds."""

    test_group: str
    test_ids: tuple[str, ...]
    inner: tuple[Fold, ...]


@dataclass(frozen=True)
class FoldPlan:
    outer: tuple[OuterFold, ...]


def plan_nested_cv(groups) -> FoldPlan:
    """Leave-one-group-out outer folds, each with leave-one-group-out inner folds.

    ``groups`` maps group name -> sequence ids (insertion order is the fold
    order).  With G groups the plan has G outer folds of G - 1 inner folds
    each.  Needs at least two groups.
    """
    items = list(groups.items())
    if len(items) < 2:
        raise DataError("nested cross-validation needs at least two groups")
    for name, ids in items:
        if not ids:
            raise DataError(f"group {name!r} has no sequences")
    all_ids = [i for _, ids in items for i in ids]
    if len(set(all_ids)) != len(all_ids):
        raise DataError("a sequence id appears in more than one group")
    outer = []
    for k, (test_name, test_ids) in enumerate(items):
        rest = [(n, ids) for n, ids in items if n != test_name]
        inner = []
        for val_name, val_ids in rest:
            train_ids = tuple(i for n, ids in rest if n != val_name for i in ids)
            inner.append(Fold(train_ids=train_ids, validation_ids=tuple(val_ids)))
        outer.append(OuterFold(test_group=test_name, test_ids=tuple(test_ids),
                               inner=tuple(inner)))
    return FoldPlan(outer=tuple(outer))


def split_sequence_frames(seq: LabeledSequence, train_fraction: float):
    """Split one sequence by time into a leading train part and the rest.

    Supports the single-split protocol where a model is tuned on the first
    part of one sequence and validated on its remainder.  The cut index is
    ``floor(T * train_fraction)``.
    """
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must be strictly between 0 and 1")
    cut = int(len(seq) * train_fraction)
    if cut == 0 or cut == len(seq):
        raise DataError(f"sequence {seq.seq_id!r} is too short to split at {train_fraction}")
    head = LabeledSequence(seq_id=seq.seq_id + "[head]",
                           features=seq.features[:cut],
                           labels=None if seq.labels is None else seq.labels[:cut])
    tail = LabeledSequence(seq_id=seq.seq_id + "[tail]",
                           features=seq.features[cut:],
                           labels=None if seq.labels is None else seq.labels[cut:])
    return head, tail
