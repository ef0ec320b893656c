"""Factored latent-dynamic conditional random fields.

Sequence tagging with parallel hidden-state chains, exact training, and
causal (filtered) prediction.  Start with the `FLDCRF` estimator for the
scikit-learn style interface, or `build_spec` / `train` /
`SequenceModel` for the engine-level one.
"""

from .model import (ModelSpec, JointLattice, JointLabelAdapter, build_spec,
                    joint_lattice, encode_labels, decode_labels, MODEL_KINDS)
from .params import (ParameterLayout, ParameterVector, parameter_layout,
                     init_params, permute_states_within_label)
from .potentials import (augmented_input, node_log_potential, edge_log_potential,
                         path_score, feature_counts)
from .inference import (ForwardTrellis, PosteriorSeries, JointPosterior,
                        SequenceModel, log_partition, log_numerator,
                        sequence_log_likelihood, filtered_label_marginals,
                        smoothed_posteriors, constrained_smoothed_posteriors,
                        predict_online)
from .exhaustive import (EnumerationBudget, EnumerationBudgetExceeded,
                         brute_log_partition, brute_log_numerator,
                         brute_posteriors, independent_path_score)
from .training import (TrainConfig, TrainReport, Objective,
                       NonFiniteObjectiveError, nll_and_gradient, train)
from .estimator import FLDCRF
from .metrics import (ConfusionCounts, count_confusions, f1_binary, micro_f1,
                      hl_f1, overall_micro_f1, token_accuracy)
from .data import (DataError, SchemaError, SequenceSchema, LabeledSequence,
                   NormalizationRecord, Fold, OuterFold, FoldPlan,
                   load_sequences, write_sequences, impute_missing,
                   normalize_minmax, apply_normalization, plan_nested_cv,
                   split_sequence_frames)
from .serialize import ModelDocument, FormatError, save_model, load_model
from .harness import (ConfigError, MetricSpec, GridSetting, ExperimentConfig,
                      FittedModel, ResultRow, ResultsTable, parse_grid_setting,
                      fit_model, evaluate_predictions, run_cv,
                      run_single_split, run_bench)

__version__ = "0.1.0"
