"""Experiment driver: configs, fitting pipelines, nested CV, benchmarks.

A JSON config file describes one experiment end to end: where the data
lives and what its columns mean, which model kind and hyperparameter grid
to consider, how to train, which metric to report per label category, and
how to split (leave-one-group-out nested CV, or a single split that tunes
on the head of one sequence and validates on its tail).

The nested CV loop is leakage-strict: per inner fold, min-max bounds are
fitted on that fold's training sequences only; the selected setting is
retrained on all non-test sequences before touching the test group.  An
optional ``access_log`` callback receives every (fold, role, ids) data
access so tests can assert the test group is never seen early.

Everything here is deterministic given the config: training is seeded,
fold order is the declared group order, and grid ties resolve to the
earliest grid position.  Timing columns are measured wall clock and are the
only nondeterministic fields in a results table.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from .data import (DataError, SequenceSchema, LabeledSequence, NormalizationRecord,
                   FoldPlan, load_sequences, impute_missing, normalize_minmax,
                   apply_normalization, plan_nested_cv, split_sequence_frames)
from .metrics import (ConfusionCounts, count_confusions, f1_binary, micro_f1,
                      hl_f1, overall_micro_f1)
from .model import ModelSpec, JointLabelAdapter, build_spec, encode_labels, decode_labels
from .params import ParameterVector
from .inference import SequenceModel
from .training import TrainConfig, train
from .serialize import ModelDocument

__all__ = [
    "ConfigError",
    "MetricSpec",
    "GridSetting",
    "ExperimentConfig",
    "FittedModel",
    "ResultRow",
    "ResultsTable",
    "parse_grid_setting",
    "fit_model",
    "evaluate_predictions",
    "run_cv",
    "run_single_split",
    "run_bench",
]


class ConfigError(ValueError):
    """The experiment config file is malformed or inconsistent."""


@dataclass(frozen=True)
class MetricSpec:
    """Which score to report for one label category."""

    name: str                      # "f1" | "micro_f1" | "hl_f1"
    positive: str | None = None    # class scored by "f1"
    early: str | None = None       # rare class of "hl_f1"
    relax: str | None = None       # dominant class of "hl_f1"

    def __post_init__(self):
        if self.name not in ("f1", "micro_f1", "hl_f1"):
            raise ConfigError(f"unknown metric {self.name!r}")
        if self.name == "f1" and not self.positive:
            raise ConfigError('metric "f1" needs a "positive" class')
        if self.name == "hl_f1" and not (self.early and self.relax):
            raise ConfigError('metric "hl_f1" needs "early" and "relax" classes')

    def compute(self, counts_by_class: dict[str, ConfusionCounts]) -> float:
        if self.name == "f1":
            if self.positive not in counts_by_class:
                raise ConfigError(f"positive class {self.positive!r} not in the alphabet")
            return f1_binary(counts_by_class[self.positive])
        if self.name == "hl_f1":
            return hl_f1(counts_by_class, early=self.early, relax=self.relax)
        return micro_f1(counts_by_class)


@dataclass(frozen=True)
class GridSetting:
    """One hyperparameter point: layer count and states per label.

    ``n_states`` is an int (same count everywhere) or a tuple with one
    count per category for the multi-label kinds.
    """

    label: str
    n_layers: int
    n_states: int | tuple[int, ...]


def parse_grid_setting(entry) -> GridSetting:
    """Parse "Nh/Ns" (layers/states) or "{a,b}" (states per category).

    Dict entries with explicit ``n_layers`` / ``n_states`` keys are also
    accepted.
    """
    if isinstance(entry, dict):
        n_states = entry.get("n_states", 1)
        if isinstance(n_states, (list, tuple)):
            n_states = tuple(int(v) for v in n_states)
            label = "{" + ",".join(str(v) for v in n_states) + "}"
            return GridSetting(label=label, n_layers=int(entry.get("n_layers", 1)),
                               n_states=n_states)
        label = f"{int(entry.get('n_layers', 1))}/{int(n_states)}"
        return GridSetting(label=label, n_layers=int(entry.get("n_layers", 1)),
                           n_states=int(n_states))
    text = str(entry).strip()
    if text.startswith("{") and text.endswith("}"):
        parts = [p.strip() for p in text[1:-1].split(",") if p.strip()]
        if not parts:
            raise ConfigError(f"grid entry {entry!r} lists no state counts")
        try:
            counts = tuple(int(p) for p in parts)
        except ValueError:
            raise ConfigError(f"grid entry {entry!r} has a non-integer count") from None
        label = "{" + ",".join(str(v) for v in counts) + "}"
        return GridSetting(label=label, n_layers=len(counts), n_states=counts)
    if "/" in text:
        left, _, right = text.partition("/")
        try:
            n_layers, n_states = int(left), int(right)
        except ValueError:
            raise ConfigError(f"grid entry {entry!r} is not of the form N/N") from None
        if n_layers < 1 or n_states < 1:
            raise ConfigError(f"grid entry {entry!r} must use positive counts")
        return GridSetting(label=f"{n_layers}/{n_states}", n_layers=n_layers,
                           n_states=n_states)
    try:
        n_states = int(text)
    except ValueError:
        raise ConfigError(
            f"grid entry {entry!r} is not a recognised notation "
            "(expected N/N, {a,b}, or an integer)") from None
    return GridSetting(label=f"1/{n_states}", n_layers=1, n_states=n_states)


@dataclass(frozen=True)
class SplitSpec:
    """Single-split protocol: tune on the head of one sequence."""

    train_seq: str
    test_seqs: tuple[str, ...]
    train_fraction: float = 0.7


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment description; see `from_file` for the JSON layout."""

    data_path: str
    schema: SequenceSchema
    kind: str
    grid: tuple[GridSetting, ...]
    train: TrainConfig
    metrics: dict[str, MetricSpec]
    selection: str                      # "overall" or a label column name
    groups: dict[str, tuple[str, ...]] | None = None
    split: SplitSpec | None = None
    retrain_selected: bool = True
    output_dir: str = "."

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from None
        return cls.from_dict(raw, config_path=path)

    @classmethod
    def from_dict(cls, raw: dict, config_path: str = "<config>") -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError(f"{config_path}: top level must be an object")
        try:
            data = raw["data"]
            model = raw["model"]
        except KeyError as exc:
            raise ConfigError(f"{config_path}: missing section {exc.args[0]!r}") from None
        for key in ("path", "feature_columns", "label_columns"):
            if key not in data:
                raise ConfigError(f"{config_path}: data section needs {key!r}")
        schema = SequenceSchema(
            feature_columns=tuple(data["feature_columns"]),
            label_columns=tuple(data["label_columns"]),
            id_column=data.get("id_column", "seq_id"),
            time_column=data.get("time_column", "t"),
            label_alphabets={k: tuple(v) for k, v in data["label_alphabets"].items()}
            if data.get("label_alphabets") else None,
        )
        kind = model.get("kind")
        if kind is None:
            raise ConfigError(f"{config_path}: model section needs 'kind'")
        if "grid" in model:
            grid = tuple(parse_grid_setting(e) for e in model["grid"])
            if not grid:
                raise ConfigError(f"{config_path}: model grid is empty")
        else:
            grid = (parse_grid_setting({"n_layers": model.get("n_layers", 1),
                                        "n_states": model.get("n_states", 1)}),)
        train_raw = raw.get("train", {})
        allowed = {"sigma2", "max_iterations", "objective_rel_tol",
                   "gradient_inf_norm_tol", "init_scale", "rng_seed", "verbose"}
        unknown = set(train_raw) - allowed
        if unknown:
            raise ConfigError(f"{config_path}: unknown train keys {sorted(unknown)}")
        try:
            train_config = TrainConfig(**train_raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{config_path}: bad train section: {exc}") from None

        evaluation = raw.get("evaluation", {})
        metric_raw = evaluation.get("metrics", {})
        metrics = {}
        for column in schema.label_columns:
            entry = metric_raw.get(column)
            if entry is None:
                metrics[column] = MetricSpec(name="micro_f1")
            else:
                try:
                    metrics[column] = MetricSpec(**entry)
                except TypeError as exc:
                    raise ConfigError(
                        f"{config_path}: bad metric for {column!r}: {exc}") from None
        unknown = set(metric_raw) - set(schema.label_columns)
        if unknown:
            raise ConfigError(
                f"{config_path}: metrics reference unknown label columns {sorted(unknown)}")
        selection = evaluation.get("selection", "overall")
        if selection != "overall" and selection not in schema.label_columns:
            raise ConfigError(
                f"{config_path}: selection metric {selection!r} is neither 'overall' "
                "nor a label column")

        groups = None
        if "cv" in raw:
            cv = raw["cv"]
            if "groups" not in cv or not cv["groups"]:
                raise ConfigError(f"{config_path}: cv section needs non-empty 'groups'")
            groups = {str(k): tuple(str(i) for i in v) for k, v in cv["groups"].items()}
        split = None
        if "split" in raw:
            sp = raw["split"]
            for key in ("train_seq", "test_seqs"):
                if key not in sp:
                    raise ConfigError(f"{config_path}: split section needs {key!r}")
            split = SplitSpec(train_seq=str(sp["train_seq"]),
                              test_seqs=tuple(str(s) for s in sp["test_seqs"]),
                              train_fraction=float(sp.get("train_fraction", 0.7)))
        return cls(
            data_path=str(data["path"]),
            schema=schema,
            kind=kind,
            grid=grid,
            train=train_config,
            metrics=metrics,
            selection=selection,
            groups=groups,
            split=split,
            retrain_selected=bool(raw.get("cv", {}).get("retrain_selected", True)),
            output_dir=str(raw.get("output_dir", ".")),
        )


# ---------------------------------------------------------------------------
# Fitting and scoring pipelines


@dataclass
class FittedModel:
    """A trained model plus everything needed to apply it to raw sequences."""

    spec: ModelSpec
    params: ParameterVector
    schema: SequenceSchema
    normalization: NormalizationRecord | None = None
    adapter: JointLabelAdapter | None = None

    def _engine(self) -> SequenceModel:
        return SequenceModel(self.spec, self.params)

    def prepare(self, dataset) -> list[LabeledSequence]:
        """Apply the stored preprocessing to raw sequences."""
        dataset = impute_missing(dataset)
        if self.normalization is not None:
            dataset = apply_normalization(dataset, self.normalization)
        return dataset

    def predict_labels(self, prepared) -> dict[str, np.ndarray]:
        """seq_id -> (T, C) predicted label strings, original categories."""
        engine = self._engine()
        out = {}
        for seq in prepared:
            tracks = engine.predict_online(seq.features)
            decoded = decode_labels(self.spec, np.stack(tracks, axis=1))
            if self.adapter is not None:
                decoded = self.adapter.split_track(decoded[:, 0])
            out[seq.seq_id] = decoded
        return out

    def label_marginals(self, prepared) -> dict[str, list[np.ndarray]]:
        """seq_id -> per-category (T, n_labels) filtered marginals."""
        engine = self._engine()
        out = {}
        for seq in prepared:
            series = engine.filtered_label_marginals(seq.features)
            probs = list(series.probabilities)
            if self.adapter is not None:
                probs = self.adapter.split_posteriors(probs[0])
            out[seq.seq_id] = probs
        return out

    @property
    def category_alphabets(self) -> tuple[tuple[str, ...], ...]:
        if self.adapter is not None:
            return self.adapter.category_alphabets
        return self.spec.label_alphabet

    def to_document(self) -> ModelDocument:
        return ModelDocument(spec=self.spec, params=self.params,
                             normalization=self.normalization, schema=self.schema)

    @classmethod
    def from_document(cls, document: ModelDocument) -> "FittedModel":
        schema = document.schema
        adapter = None
        if (schema is not None and len(schema.label_columns) > 1
                and document.spec.n_categories == 1):
            if not schema.label_alphabets:
                raise ConfigError(
                    "document has a joint-label model but no per-category alphabets")
            adapter = JointLabelAdapter(
                [schema.label_alphabets[c] for c in schema.label_columns])
        return cls(spec=document.spec, params=document.params, schema=schema,
                   normalization=document.normalization, adapter=adapter)


def resolve_alphabets(dataset, schema: SequenceSchema) -> SequenceSchema:
    """Close the label alphabets if the schema left them open.

    Derived alphabets are the sorted unique labels over the whole dataset;
    label support is task metadata, so deriving it once up front keeps every
    fold working with the same encoding.
    """
    if schema.label_alphabets is not None:
        missing = [c for c in schema.label_columns if c not in schema.label_alphabets]
        if missing:
            raise ConfigError(f"label_alphabets missing columns {missing}")
        return schema
    alphabets = {}
    for c, column in enumerate(schema.label_columns):
        seen = set()
        for seq in dataset:
            if seq.labels is None:
                raise DataError(f"sequence {seq.seq_id!r} has no labels")
            seen.update(str(v) for v in seq.labels[:, c])
        alphabets[column] = tuple(sorted(seen))
    return replace(schema, label_alphabets=alphabets)


def fit_model(train_seqs, schema: SequenceSchema, kind: str, setting: GridSetting,
              train_config: TrainConfig) -> FittedModel:
    """Train one model on already-preprocessed sequences."""
    if schema.label_alphabets is None:
        raise ConfigError("schema must have closed label alphabets before fitting")
    alphabets = [list(schema.label_alphabets[c]) for c in schema.label_columns]
    feature_dim = len(schema.feature_columns)
    spec = build_spec(kind, alphabets, feature_dim,
                      n_layers=setting.n_layers, n_states=setting.n_states)
    adapter = JointLabelAdapter(alphabets) if kind == "ccrf" else None
    dataset = []
    for seq in train_seqs:
        if seq.labels is None:
            raise DataError(f"sequence {seq.seq_id!r} has no labels")
        labels = seq.labels
        if adapter is not None:
            labels = adapter.join_tracks(labels)
        dataset.append((seq.features, encode_labels(spec, labels)))
    params, _report = train(spec, dataset, train_config)
    return FittedModel(spec=spec, params=params, schema=schema, adapter=adapter)


def evaluate_predictions(truth: dict[str, np.ndarray], predicted: dict[str, np.ndarray],
                         schema: SequenceSchema, metrics: dict[str, MetricSpec]):
    """Per-category metric values plus the pooled overall micro F1.

    ``truth`` and ``predicted`` map seq_id -> (T, C) label strings.  Raises
    `DataError` when ids or lengths differ.
    """
    if set(truth) != set(predicted):
        raise DataError(
            f"prediction ids {sorted(predicted)} do not match truth ids {sorted(truth)}")
    values: dict[str, float] = {}
    counts_per_category = []
    for c, column in enumerate(schema.label_columns):
        y_true: list[str] = []
        y_pred: list[str] = []
        for seq_id in sorted(truth):
            t_rows, p_rows = truth[seq_id], predicted[seq_id]
            if t_rows.shape != p_rows.shape:
                raise DataError(
                    f"sequence {seq_id!r}: truth shape {t_rows.shape} does not match "
                    f"prediction shape {p_rows.shape}")
            y_true.extend(str(v) for v in t_rows[:, c])
            y_pred.extend(str(v) for v in p_rows[:, c])
        classes = (schema.label_alphabets or {}).get(column)
        counts = count_confusions(y_true, y_pred, classes=classes)
        counts_per_category.append(counts)
        values[column] = metrics[column].compute(counts)
    values["overall"] = overall_micro_f1(counts_per_category)
    return values


# ---------------------------------------------------------------------------
# Results table


@dataclass(frozen=True)
class ResultRow:
    fold: str
    setting: str
    metric: str
    value: float
    train_seconds: float = 0.0
    infer_seconds_per_frame: float = 0.0


@dataclass
class ResultsTable:
    rows: list[ResultRow] = field(default_factory=list)

    def add(self, fold, setting, metric, value, train_seconds=0.0,
            infer_seconds_per_frame=0.0):
        value = float(value)
        if not np.isfinite(value):
            raise ValueError(f"metric {metric!r} produced a non-finite value")
        self.rows.append(ResultRow(fold=str(fold), setting=str(setting),
                                   metric=str(metric), value=value,
                                   train_seconds=float(train_seconds),
                                   infer_seconds_per_frame=float(infer_seconds_per_frame)))

    def values(self) -> list[tuple[str, str, str, float]]:
        """Deterministic part of the table (timing columns dropped)."""
        return [(r.fold, r.setting, r.metric, r.value) for r in self.rows]

    def lookup(self, fold: str, setting: str, metric: str) -> float:
        for r in self.rows:
            if (r.fold, r.setting, r.metric) == (fold, setting, metric):
                return r.value
        raise KeyError((fold, setting, metric))

    def to_csv(self, path) -> None:
        import csv as _csv
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["fold", "setting", "metric", "value",
                             "train_seconds", "infer_seconds_per_frame"])
            for r in self.rows:
                writer.writerow([r.fold, r.setting, r.metric, format(r.value, ".17g"),
                                 format(r.train_seconds, ".6f"),
                                 format(r.infer_seconds_per_frame, ".9f")])


# ---------------------------------------------------------------------------
# Cross-validation drivers


def _index_dataset(dataset) -> dict[str, LabeledSequence]:
    return {seq.seq_id: seq for seq in dataset}


def _log(access_log, fold, role, ids):
    if access_log is not None:
        access_log({"fold": fold, "role": role, "ids": tuple(ids)})


def _truth_of(seqs) -> dict[str, np.ndarray]:
    return {seq.seq_id: seq.labels for seq in seqs}


def _fit_and_score(train_seqs, eval_seqs, schema, kind, setting, train_config, metrics):
    """Train on one split, score on the held-out part.  Returns
    (values, fitted, train_seconds, infer_seconds_per_frame)."""
    imputed = impute_missing(list(train_seqs) + list(eval_seqs))
    train_ids = [s.seq_id for s in train_seqs]
    normalized, record = normalize_minmax(imputed, fit_ids=train_ids)
    by_id = _index_dataset(normalized)
    train_part = [by_id[s.seq_id] for s in train_seqs]
    eval_part = [by_id[s.seq_id] for s in eval_seqs]
    t0 = time.perf_counter()
    fitted = fit_model(train_part, schema, kind, setting, train_config)
    train_seconds = time.perf_counter() - t0
    fitted.normalization = record
    t0 = time.perf_counter()
    predicted = fitted.predict_labels(eval_part)
    infer_seconds = time.perf_counter() - t0
    frames = sum(len(s) for s in eval_part)
    values = evaluate_predictions(_truth_of(eval_part), predicted, schema, metrics)
    return values, fitted, train_seconds, infer_seconds / max(frames, 1)


def _selection_value(values: dict[str, float], selection: str) -> float:
    return values["overall"] if selection == "overall" else values[selection]


def run_cv(config: ExperimentConfig, dataset=None, jobs: int = 1,
           access_log=None) -> tuple[ResultsTable, dict]:
    """Nested leave-one-group-out cross-validation over the config's grid.

    Returns the results table and a selection summary (per outer fold: the
    chosen setting and its test metrics).
    """
    if config.groups is None:
        raise ConfigError("config has no cv.groups section")
    if dataset is None:
        dataset = load_sequences(config.data_path, config.schema)
    schema = resolve_alphabets(dataset, config.schema)
    by_id = _index_dataset(dataset)
    for name, ids in config.groups.items():
        for seq_id in ids:
            if seq_id not in by_id:
                raise ConfigError(f"cv group {name!r} references unknown sequence {seq_id!r}")
    plan = plan_nested_cv(config.groups)
    table = ResultsTable()
    summary = {"folds": [], "selection": config.selection}

    for fold_idx, outer in enumerate(plan.outer):
        fold_name = f"fold{fold_idx}:{outer.test_group}"
        test_seqs = [by_id[i] for i in outer.test_ids]
        non_test_ids = [i for f in outer.inner for i in f.validation_ids]
        # Inner folds partition the non-test ids; collect them in plan order.
        seen = set()
        non_test_ids = [i for i in non_test_ids if not (i in seen or seen.add(i))]

        tasks = []
        for setting in config.grid:
            for inner in outer.inner:
                # A two-group plan has one inner fold with nothing to train
                # on; it cannot score a setting and is skipped.
                if not inner.train_ids:
                    continue
                tasks.append((setting, inner))
                _log(access_log, fold_name, "inner-train",
                     inner.train_ids)
                _log(access_log, fold_name, "inner-validate", inner.validation_ids)

        def run_task(setting, inner):
            try:
                values, fitted, tr_s, inf_s = _fit_and_score(
                    [by_id[i] for i in inner.train_ids],
                    [by_id[i] for i in inner.validation_ids],
                    schema, config.kind, setting, config.train, config.metrics)
                return values, fitted, tr_s, inf_s, None
            except Exception as exc:  # recorded, not silently dropped
                return None, None, 0.0, 0.0, f"{type(exc).__name__}: {exc}"

        results = Parallel(n_jobs=jobs, prefer="threads")(
            delayed(run_task)(setting, inner) for setting, inner in tasks)

        per_setting: dict[str, list] = {s.label: [] for s in config.grid}
        inner_models: dict[str, list] = {s.label: [] for s in config.grid}
        failures: dict[str, list[str]] = {s.label: [] for s in config.grid}
        for (setting, _inner), (values, fitted, tr_s, inf_s, error) in zip(tasks, results):
            if error is not None:
                failures[setting.label].append(error)
            else:
                per_setting[setting.label].append((values, tr_s, inf_s))
                inner_models[setting.label].append((values, fitted))

        mean_selection: dict[str, float] = {}
        for setting in config.grid:
            rows = per_setting[setting.label]
            if failures[setting.label]:
                table.add(fold_name, setting.label, "failed", float(len(failures[setting.label])))
                continue
            if not rows:
                continue
            sel = [float(_selection_value(v, config.selection)) for v, _, _ in rows]
            mean_selection[setting.label] = float(np.mean(sel))
            mean_train = float(np.mean([t for _, t, _ in rows]))
            mean_infer = float(np.mean([i for _, _, i in rows]))
            for column in [*schema.label_columns, "overall"]:
                table.add(fold_name, setting.label, f"validation_mean:{column}",
                          float(np.mean([v[column] for v, _, _ in rows])),
                          mean_train, mean_infer)
        if mean_selection:
            scores = np.array([mean_selection.get(s.label, -np.inf) for s in config.grid])
            best_index = int(np.argmax(scores))   # argmax takes the earliest on ties
            finite = scores[np.isfinite(scores)]
            best = config.grid[best_index]
            table.add(fold_name, best.label, "selected_index", float(best_index))
            table.add(fold_name, "-", "validation_best", float(np.max(finite)))
            table.add(fold_name, "-", "validation_worst", float(np.min(finite)))
            table.add(fold_name, "-", "validation_std", float(np.std(finite)))
        elif any(failures.values()):
            raise RuntimeError(f"{fold_name}: every grid setting failed")
        else:
            # No scoreable inner fold (the two-group case): selection is
            # forced to the earliest grid position.
            best_index = 0
            best = config.grid[best_index]
            table.add(fold_name, best.label, "selected_index", float(best_index))

        if config.retrain_selected:
            _log(access_log, fold_name, "final-train", non_test_ids)
            _log(access_log, fold_name, "test", outer.test_ids)
            values, fitted, tr_s, inf_s = _fit_and_score(
                [by_id[i] for i in non_test_ids], test_seqs,
                schema, config.kind, best, config.train, config.metrics)
        else:
            # Reuse the inner-fold model of the selected setting that
            # validated best (earliest fold on ties).
            candidates = inner_models[best.label]
            if not candidates:
                raise ConfigError(
                    "retraining was disabled but this plan trained no inner-fold "
                    "model to reuse; two-group plans need retraining")
            sel_values = [float(_selection_value(v, config.selection)) for v, _ in candidates]
            fitted = candidates[int(np.argmax(sel_values))][1]
            _log(access_log, fold_name, "test", outer.test_ids)
            prepared = fitted.prepare(test_seqs)
            t0 = time.perf_counter()
            predicted = fitted.predict_labels(prepared)
            inf_elapsed = time.perf_counter() - t0
            frames = sum(len(s) for s in prepared)
            values = evaluate_predictions(_truth_of(prepared), predicted, schema,
                                          config.metrics)
            tr_s, inf_s = 0.0, inf_elapsed / max(frames, 1)
        for column in [*schema.label_columns, "overall"]:
            table.add(fold_name, best.label, f"test:{column}", values[column], tr_s, inf_s)
        summary["folds"].append({
            "fold": fold_name,
            "selected_setting": best.label,
            "selected_index": best_index,
            "test": {k: values[k] for k in [*schema.label_columns, "overall"]},
        })

    for column in [*schema.label_columns, "overall"]:
        fold_values = [f["test"][column] for f in summary["folds"]]
        table.add("mean", "-", f"test:{column}", float(np.mean(fold_values)))
    return table, summary


def run_single_split(config: ExperimentConfig, dataset=None,
                     access_log=None) -> tuple[ResultsTable, dict]:
    """Tune on the head of one sequence, validate on its tail, test on others."""
    if config.split is None:
        raise ConfigError("config has no split section")
    if dataset is None:
        dataset = load_sequences(config.data_path, config.schema)
    schema = resolve_alphabets(dataset, config.schema)
    by_id = _index_dataset(dataset)
    sp = config.split
    if sp.train_seq not in by_id:
        raise ConfigError(f"split.train_seq {sp.train_seq!r} is not in the data")
    for seq_id in sp.test_seqs:
        if seq_id not in by_id:
            raise ConfigError(f"split.test_seqs references unknown sequence {seq_id!r}")
    head, tail = split_sequence_frames(by_id[sp.train_seq], sp.train_fraction)
    table = ResultsTable()
    fold_name = "single"

    best = None
    best_value = -np.inf
    for index, setting in enumerate(config.grid):
        _log(access_log, fold_name, "inner-train", [head.seq_id])
        _log(access_log, fold_name, "inner-validate", [tail.seq_id])
        try:
            values, _fitted, tr_s, inf_s = _fit_and_score(
                [head], [tail], schema, config.kind, setting, config.train,
                config.metrics)
        except Exception as exc:
            table.add(fold_name, setting.label, "failed", 1.0)
            continue
        for column in [*schema.label_columns, "overall"]:
            table.add(fold_name, setting.label, f"validation_mean:{column}",
                      values[column], tr_s, inf_s)
        value = float(_selection_value(values, config.selection))
        if value > best_value:
            best, best_value = (index, setting), value
    if best is None:
        raise RuntimeError("every grid setting failed")
    best_index, best_setting = best
    table.add(fold_name, best_setting.label, "selected_index", float(best_index))

    test_seqs = [by_id[i] for i in sp.test_seqs]
    if config.retrain_selected:
        train_seqs = [by_id[sp.train_seq]]
    else:
        train_seqs = [head]
    _log(access_log, fold_name, "final-train", [s.seq_id for s in train_seqs])
    _log(access_log, fold_name, "test", sp.test_seqs)
    values, fitted, tr_s, inf_s = _fit_and_score(
        train_seqs, test_seqs, schema, config.kind, best_setting, config.train,
        config.metrics)
    for column in [*schema.label_columns, "overall"]:
        table.add(fold_name, best_setting.label, f"test:{column}", values[column],
                  tr_s, inf_s)
    summary = {
        "folds": [{
            "fold": fold_name,
            "selected_setting": best_setting.label,
            "selected_index": best_index,
            "test": {k: values[k] for k in [*schema.label_columns, "overall"]},
        }],
        "selection": config.selection,
    }
    return table, summary


def run_bench(config: ExperimentConfig, dataset=None) -> ResultsTable:
    """Train every grid setting on the full data; report time and fit quality."""
    if dataset is None:
        dataset = load_sequences(config.data_path, config.schema)
    schema = resolve_alphabets(dataset, config.schema)
    table = ResultsTable()
    for setting in config.grid:
        try:
            values, _fitted, tr_s, inf_s = _fit_and_score(
                dataset, dataset, schema, config.kind, setting, config.train,
                config.metrics)
        except Exception:
            table.add("bench", setting.label, "failed", 1.0)
            continue
        for column in [*schema.label_columns, "overall"]:
            table.add("bench", setting.label, f"fit:{column}", values[column],
                      tr_s, inf_s)
        table.add("bench", setting.label, "train_seconds_total", tr_s, tr_s, inf_s)
    return table
