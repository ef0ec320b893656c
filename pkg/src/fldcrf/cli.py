"""Command-line interface.

Subcommands::

    fldcrf train     --config cfg.json [--output model.json] [--seed N]
    fldcrf predict   --model model.json --input in.csv --output out.csv
                     [--posteriors post.csv]
    fldcrf evaluate  --config cfg.json --predictions pred.csv --truth truth.csv
                     [--output report.csv]
    fldcrf cv        --config cfg.json [--jobs N] [--seed N]
                     [--single-split PCT] [--no-retrain] [--output-dir DIR]
    fldcrf bench     --config cfg.json [--output results.csv]

Exit status: 0 on success, 1 on a runtime failure (bad data, failed
training, misaligned files), 2 on bad usage (unknown flags, malformed
config).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys

import numpy as np

from .data import (DataError, SchemaError, SequenceSchema, load_sequences,
                   write_sequences, impute_missing, normalize_minmax)
from .harness import (ConfigError, ExperimentConfig, FittedModel, fit_model,
                      evaluate_predictions, run_cv, run_single_split, run_bench)
from .serialize import FormatError, save_model, load_model
from .training import NonFiniteObjectiveError

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fldcrf",
        description="Train, apply, and evaluate factored latent-dynamic CRFs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model and save it")
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--output", default=None, help="model file (default <output_dir>/model.json)")
    p.add_argument("--seed", type=int, default=None, help="override the training seed")
    p.add_argument("--verbose", action="store_true", help="per-iteration training log")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="apply a saved model to a CSV file")
    p.add_argument("--model", required=True, help="saved model document")
    p.add_argument("--input", required=True, help="input CSV")
    p.add_argument("--output", required=True, help="output CSV with predicted labels")
    p.add_argument("--posteriors", default=None,
                   help="also write per-label filtered marginals to this CSV")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--predictions", required=True, help="CSV written by 'predict'")
    p.add_argument("--truth", required=True, help="CSV with true labels")
    p.add_argument("--output", default=None, help="write the report as CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cv", help="nested or single-split cross-validation")
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--jobs", type=int, default=1, help="parallel training jobs")
    p.add_argument("--seed", type=int, default=None, help="override the training seed")
    p.add_argument("--single-split", type=float, default=None, metavar="PCT",
                   help="tune on the leading PCT%% of split.train_seq instead of nested CV")
    p.add_argument("--no-retrain", action="store_true",
                   help="reuse the best inner-fold model instead of retraining "
                        "the selected setting on all non-test data")
    p.add_argument("--output-dir", default=None, help="override config output_dir")
    p.add_argument("--verbose", action="store_true", help="per-iteration training log")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("bench", help="time training and inference over the grid")
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--output", default=None, help="write the table as CSV")
    p.set_defaults(func=cmd_bench)
    return parser


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config)
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(
            config, train=dataclasses.replace(config.train, rng_seed=args.seed))
    if getattr(args, "verbose", False):
        config = dataclasses.replace(
            config, train=dataclasses.replace(config.train, verbose=True))
    return config


def cmd_train(args) -> int:
    config = _load_config(args)
    from .harness import resolve_alphabets
    dataset = load_sequences(config.data_path, config.schema)
    if not dataset:
        raise DataError(f"{config.data_path}: no sequences to train on")
    schema = resolve_alphabets(dataset, config.schema)
    imputed = impute_missing(dataset)
    normalized, record = normalize_minmax(imputed)
    fitted = fit_model(normalized, schema, config.kind, config.grid[0], config.train)
    fitted.normalization = record
    out_path = args.output
    if out_path is None:
        os.makedirs(config.output_dir, exist_ok=True)
        out_path = os.path.join(config.output_dir, "model.json")
    save_model(out_path, fitted.to_document())
    print(f"trained {config.kind} ({config.grid[0].label}) on "
          f"{len(dataset)} sequences -> {out_path}")
    return 0


def _predict_schema(document_schema: SequenceSchema, input_path) -> SequenceSchema:
    """Input may or may not carry the label columns; read what is there."""
    with open(input_path, newline="", encoding="utf-8") as fh:
        try:
            header = next(csv.reader(fh))
        except StopIteration:
            raise DataError(f"{input_path}: empty file, expected a header row") from None
    have_labels = all(c in header for c in document_schema.label_columns)
    if have_labels:
        return document_schema
    return dataclasses.replace(document_schema, label_columns=(), label_alphabets=None)


def cmd_predict(args) -> int:
    document = load_model(args.model)
    if document.schema is None:
        raise FormatError(f"{args.model}: document has no data schema; cannot "
                          "interpret CSV input")
    fitted = FittedModel.from_document(document)
    in_schema = _predict_schema(document.schema, args.input)
    dataset = load_sequences(args.input, in_schema)
    prepared = fitted.prepare(dataset)
    predicted = fitted.predict_labels(prepared)
    extra = {}
    for c, column in enumerate(document.schema.label_columns):
        extra[f"pred_{column}"] = {sid: rows[:, c] for sid, rows in predicted.items()}
    write_sequences(args.output, dataset, in_schema, extra_columns=extra)
    if args.posteriors is not None:
        _write_posteriors(args.posteriors, fitted, prepared, document.schema)
    print(f"predicted {len(dataset)} sequences -> {args.output}")
    return 0


def _write_posteriors(path, fitted: FittedModel, prepared, schema: SequenceSchema) -> None:
    alphabets = fitted.category_alphabets
    header = [schema.id_column, schema.time_column]
    for column, alphabet in zip(schema.label_columns, alphabets):
        header.extend(f"p_{column}_{label}" for label in alphabet)
    marginals = fitted.label_marginals(prepared)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for seq in prepared:
            probs = marginals[seq.seq_id]
            for t in range(len(seq)):
                row = [seq.seq_id, str(t)]
                for c in range(len(schema.label_columns)):
                    row.extend(format(v, ".17g") for v in probs[c][t])
                writer.writerow(row)


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    truth_schema = config.schema
    truth = load_sequences(args.truth, truth_schema)
    if not truth:
        raise DataError(f"{args.truth}: no sequences")
    from .harness import resolve_alphabets
    schema = resolve_alphabets(truth, truth_schema)
    pred_columns = tuple(f"pred_{c}" for c in schema.label_columns)
    pred_schema = SequenceSchema(feature_columns=(), label_columns=pred_columns,
                                 id_column=schema.id_column,
                                 time_column=schema.time_column)
    predictions = load_sequences(args.predictions, pred_schema)
    truth_map = {s.seq_id: s.labels for s in truth}
    pred_map = {s.seq_id: s.labels for s in predictions}
    values = evaluate_predictions(truth_map, pred_map, schema, config.metrics)
    rows = [(column, config.metrics[column].name, values[column])
            for column in schema.label_columns]
    rows.append(("overall", "micro_f1", values["overall"]))
    for column, metric, value in rows:
        print(f"{column},{metric},{value:.6f}")
    if args.output:
        with open(args.output, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["category", "metric", "value"])
            for column, metric, value in rows:
                writer.writerow([column, metric, format(value, ".17g")])
    return 0


def cmd_cv(args) -> int:
    config = _load_config(args)
    if args.no_retrain:
        config = dataclasses.replace(config, retrain_selected=False)
    if args.single_split is not None:
        if config.split is None:
            raise ConfigError("--single-split requires a split section in the config")
        if not 0 < args.single_split < 100:
            raise ConfigError("--single-split takes a percentage strictly between 0 and 100")
        config = dataclasses.replace(
            config, split=dataclasses.replace(config.split,
                                              train_fraction=args.single_split / 100.0))
        table, summary = run_single_split(config)
    else:
        table, summary = run_cv(config, jobs=args.jobs)
    out_dir = args.output_dir or config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    table.to_csv(os.path.join(out_dir, "results.csv"))
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for fold in summary["folds"]:
        metrics = " ".join(f"{k}={v:.4f}" for k, v in fold["test"].items())
        print(f"{fold['fold']}: selected {fold['selected_setting']} {metrics}")
    print(f"results -> {os.path.join(out_dir, 'results.csv')}")
    return 0


def cmd_bench(args) -> int:
    config = _load_config(args)
    table = run_bench(config)
    if args.output:
        table.to_csv(args.output)
    for row in table.rows:
        print(f"{row.setting},{row.metric},{row.value:.6f},"
              f"{row.train_seconds:.3f}s,{row.infer_seconds_per_frame * 1e3:.4f}ms/frame")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, FormatError, NonFiniteObjectiveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # anything else is still a failure, not a crash
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
