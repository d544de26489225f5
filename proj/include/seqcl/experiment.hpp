#pragma once

#include "seqcl/data.hpp"
#include "seqcl/metrics.hpp"
#include "seqcl/trainer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace seqcl {

inline constexpr const char* kToolName = "seqcl";
inline constexpr const char* kToolVersion = "1.0.0";

enum class Task { Binary, Multilabel };

const char* loss_kind_name(LossKind kind);
LossKind parse_loss_kind(const std::string& name);
const char* task_name(Task task);
Task parse_task(const std::string& name);

/// Everything one experiment run needs; fully serializable into the manifest.
struct ExperimentConfig {
  Task task = Task::Binary;
  Index num_classes = 1;

  LossConfig loss;

  Index hidden_dim = 16;
  Index num_layers = 1;
  double dropout = 0.3;

  Index batch_size = 256;
  Index max_epochs = 100;
  double lr = 0.001;
  double weight_decay = 0.0;
  double grad_clip = 0.0;

  std::uint64_t seed = 0;
  /// Seed for data generation/splitting; defaults to a value derived from
  /// `seed`. Pin it to vary only the training randomness across runs.
  std::optional<std::uint64_t> data_seed;

  // Data source: CSV paths, or a synthetic spec (its seed field is ignored
  // and replaced by the effective data seed).
  std::optional<std::string> series_path;
  std::optional<std::string> labels_path;
  std::optional<std::string> static_path;
  std::optional<SyntheticSpec> synthetic;
  SplitFractions fractions;

  Index bootstrap_k = 100;
  std::string out_dir;
};

/// Semantic validation beyond flag parsing (e.g. lambda requires a
/// regularizer-bearing loss kind). Throws ValidationError.
void validate_experiment(const ExperimentConfig& cfg);

std::uint64_t effective_data_seed(const ExperimentConfig& cfg);

/// Flat key=value view of the config, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_items(
    const ExperimentConfig& cfg);

/// FNV-1a over the canonical key=value listing, as 16 hex digits.
std::string config_hash_hex(const ExperimentConfig& cfg);

/// Writes <out_dir>/manifest.json recording tool version, command, seed,
/// config, and config hash. Deterministic bytes for a given config.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const ExperimentConfig& cfg);

/// Builds train/val/test from the configured source. Binary tasks stratify
/// the split on class 0.
Splits load_splits(const ExperimentConfig& cfg);

// ---- commands -------------------------------------------------------------

struct GenDataResult {
  std::string series_path;
  std::string labels_path;
  std::vector<double> realized_pos_ratio;
};

/// `gen-data`: writes series.csv and labels.csv plus a manifest.
GenDataResult run_gen_data(const ExperimentConfig& cfg);

struct TrainRunResult {
  TrainResult train;
  MetricsReport test_report;
  std::uint64_t test_hash = 0;
  std::string checkpoint_path;
  std::string epochs_csv_path;
  std::string metrics_csv_path;
};

/// `train`: full pipeline; writes checkpoint.bin, epochs.csv, metrics.csv,
/// and a manifest into cfg.out_dir.
TrainRunResult run_train(const ExperimentConfig& cfg);

struct GridRunResult {
  GridSearchResult search;
  std::string cells_csv_path;
  std::string best_csv_path;
};

/// `grid`: one train run per (lambda, batch) cell on a shared split; writes
/// cells.csv and the best-cell summary best.csv.
GridRunResult run_grid(const ExperimentConfig& base,
                       const std::vector<double>& lambda_grid,
                       const std::vector<Index>& batch_grid);

struct SweepRow {
  double ratio = 0.0;
  LossKind loss = LossKind::Bce;
  int seed_rep = 0;
  double lambda = 0.0;
  double auroc = 0.0;
  double auprc = 0.0;
  double accuracy = 0.0;
  double min_se_pplus = 0.0;
  std::uint64_t test_hash = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::string sweep_csv_path;
};

/** `imbalance-sweep`: on one fixed split, downsample training positives to
 *  each target ratio, train every requested loss over n_seeds training
 *  seeds, and evaluate all of them on the untouched test set (its hash is
 *  recorded on every row).
 *
 *  For the regularized losses, each (ratio, loss, seed) cell trains once per
 *  lambda in lambda_grid and keeps the best validation-metric run (smaller
 *  lambda on ties), so every cell reports its best configuration the way the
 *  downsampling study selects hyper-parameters. An empty grid means "use
 *  base.loss.lambda". Plain bce always runs with lambda 0.
 */
SweepResult run_imbalance_sweep(const ExperimentConfig& base,
                                const std::vector<double>& ratios,
                                const std::vector<LossKind>& losses,
                                int n_seeds,
                                const std::vector<double>& lambda_grid = {});

/// `id,label,z1..zH` rows for every sample (training = false), then one
/// `__anchor_pos_<c>` and one `__anchor_neg_<c>` row per class.
std::string embeddings_csv(const EncoderParams& params, const Dataset& data);

struct ExportResult {
  std::string embeddings_csv_path;
};

ExportResult run_export_embeddings(const std::string& checkpoint_path,
                                   const ExperimentConfig& cfg);

struct EvalResult {
  MetricsReport report;
  std::string metrics_csv_path;
};

/// `eval`: scores a dataset with a saved checkpoint under the given loss
/// kind and writes metrics.csv.
EvalResult run_eval(const std::string& checkpoint_path,
                    const ExperimentConfig& cfg);

// ---- analysis helpers -----------------------------------------------------

/// Test metrics for one scored binary class, with bootstrap stds.
MetricsReport binary_metrics_report(const ScoredLabels& sl, Index bootstrap_k,
                                    std::uint64_t bootstrap_seed);

/// Ratio of the distance between class centroids to the mean within-class
/// distance; larger means better-separated embeddings.
double class_separation_ratio(const RealMatrix& Z,
                              const std::vector<int>& labels);

}  // namespace seqcl
