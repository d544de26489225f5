#include "seqcl/experiment.hpp"

#include "seqcl/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

namespace seqcl {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Stream tags for seeds derived from the experiment seed.
constexpr std::uint64_t kSeedData = 10;
constexpr std::uint64_t kSeedSplit = 11;
constexpr std::uint64_t kSeedBootstrap = 12;
constexpr std::uint64_t kSeedSweepTrain = 13;
constexpr std::uint64_t kSeedSweepDownsample = 14;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string hex_u64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw RuntimeFailure("cannot open " + path + " for writing");
  }
  out << content;
  if (!out) {
    throw RuntimeFailure("write failed for " + path);
  }
}

std::string ensure_out_dir(const ExperimentConfig& cfg) {
  if (cfg.out_dir.empty()) {
    throw ValidationError("no output directory given");
  }
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) {
    throw RuntimeFailure("cannot create output directory " + cfg.out_dir +
                         ": " + ec.message());
  }
  return cfg.out_dir;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

TrainConfig trainer_config(const ExperimentConfig& cfg) {
  TrainConfig tc;
  tc.loss = cfg.loss;
  tc.batch_size = cfg.batch_size;
  tc.max_epochs = cfg.max_epochs;
  tc.seed = cfg.seed;
  tc.selection = cfg.task == Task::Binary ? SelectionMetric::Auroc
                                          : SelectionMetric::MicroAuroc;
  tc.lr = cfg.lr;
  tc.weight_decay = cfg.weight_decay;
  tc.grad_clip = cfg.grad_clip;
  return tc;
}

EncoderConfig encoder_config(const ExperimentConfig& cfg, const Dataset& data) {
  EncoderConfig ec;
  ec.input_dim = data.feature_dim;
  ec.hidden_dim = cfg.hidden_dim;
  ec.num_layers = cfg.num_layers;
  ec.dropout_rate = cfg.dropout;
  ec.static_dim = data.static_dim;
  return ec;
}

Dataset load_full_dataset(const ExperimentConfig& cfg) {
  if (cfg.synthetic.has_value()) {
    SyntheticSpec spec = *cfg.synthetic;
    spec.seed = effective_data_seed(cfg);
    return generate_synthetic(spec);
  }
  return load_csv(*cfg.series_path, *cfg.labels_path, cfg.static_path);
}

std::vector<ScoredLabels> per_class_scored(const RealMatrix& scores,
                                           const RealMatrix& labels) {
  std::vector<ScoredLabels> per_class;
  for (Index c = 0; c < scores.cols(); ++c) {
    ScoredLabels sl;
    sl.scores = scores.col(c);
    sl.labels.resize(static_cast<std::size_t>(scores.rows()));
    for (Index i = 0; i < scores.rows(); ++i) {
      sl.labels[static_cast<std::size_t>(i)] = labels(i, c) == 1.0 ? 1 : 0;
    }
    per_class.push_back(std::move(sl));
  }
  return per_class;
}

MetricsReport test_metrics(const ExperimentConfig& cfg,
                           const EncoderParams& params, const Dataset& test) {
  const RealMatrix scores = score_dataset(cfg.loss.kind, params, test);
  std::vector<Index> all(static_cast<std::size_t>(test.size()));
  for (Index i = 0; i < test.size(); ++i) {
    all[static_cast<std::size_t>(i)] = i;
  }
  const RealMatrix labels = label_matrix(test, all);
  if (cfg.task == Task::Binary) {
    const std::vector<ScoredLabels> per_class = per_class_scored(scores, labels);
    return binary_metrics_report(per_class[0], cfg.bootstrap_k,
                                 derive_seed(cfg.seed, {kSeedBootstrap}));
  }
  MetricsReport report;
  const MultilabelAuroc ml = multilabel_aurocs(per_class_scored(scores, labels));
  report.add("micro_auroc", ml.micro);
  report.add("macro_auroc", ml.macro);
  report.add("weighted_auroc", ml.weighted);
  return report;
}

std::string metrics_columns(Task task) {
  return task == Task::Binary
             ? "test_auroc,test_auprc,test_accuracy,test_min_se_pplus"
             : "test_micro_auroc,test_macro_auroc,test_weighted_auroc";
}

std::string metrics_row(const MetricsReport& report, Task task) {
  if (task == Task::Binary) {
    return fmt(report.get("auroc")) + "," + fmt(report.get("auprc")) + "," +
           fmt(report.get("accuracy")) + "," + fmt(report.get("min_se_pplus"));
  }
  return fmt(report.get("micro_auroc")) + "," + fmt(report.get("macro_auroc")) +
         "," + fmt(report.get("weighted_auroc"));
}

}  // namespace

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::Bce:
      return "bce";
    case LossKind::BceScr:
      return "bce+scr";
    case LossKind::CbceScr:
      return "cbce+scr";
    case LossKind::CsceScr:
      return "csce+scr";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "bce") return LossKind::Bce;
  if (name == "bce+scr") return LossKind::BceScr;
  if (name == "cbce+scr") return LossKind::CbceScr;
  if (name == "csce+scr") return LossKind::CsceScr;
  throw ValidationError("unknown loss '" + name +
                        "' (expected bce, bce+scr, cbce+scr, or csce+scr)");
}

const char* task_name(Task task) {
  return task == Task::Binary ? "binary" : "multilabel";
}

Task parse_task(const std::string& name) {
  if (name == "binary") return Task::Binary;
  if (name == "multilabel") return Task::Multilabel;
  throw ValidationError("unknown task '" + name +
                        "' (expected binary or multilabel)");
}

std::uint64_t effective_data_seed(const ExperimentConfig& cfg) {
  return cfg.data_seed.value_or(derive_seed(cfg.seed, {kSeedData}));
}

void validate_experiment(const ExperimentConfig& cfg) {
  if (cfg.num_classes < 1) {
    throw ValidationError("classes must be >= 1");
  }
  if (cfg.task == Task::Binary && cfg.num_classes != 1) {
    throw ValidationError("binary task requires exactly one class");
  }
  if (cfg.loss.lambda < 0.0) {
    throw ValidationError("lambda must be non-negative");
  }
  if (cfg.loss.lambda != 0.0 && cfg.loss.kind == LossKind::Bce) {
    throw ValidationError(
        "lambda has no effect with --loss bce; use bce+scr (or another +scr "
        "loss) to enable the regularizer");
  }
  if (!(cfg.loss.tau > 0.0)) {
    throw ValidationError("tau must be positive");
  }
  if (cfg.hidden_dim < 1 || cfg.num_layers < 1) {
    throw ValidationError("hidden-dim and layers must be >= 1");
  }
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) {
    throw ValidationError("dropout must be in [0, 1)");
  }
  if (cfg.batch_size < 2) {
    throw ValidationError("batch-size must be >= 2");
  }
  if (cfg.max_epochs < 1) {
    throw ValidationError("epochs must be >= 1");
  }
  if (!(cfg.lr > 0.0)) {
    throw ValidationError("lr must be positive");
  }
  if (cfg.bootstrap_k < 2) {
    throw ValidationError("bootstrap resamples must be >= 2");
  }
  const bool has_csv = cfg.series_path.has_value() || cfg.labels_path.has_value();
  if (cfg.synthetic.has_value() == has_csv) {
    throw ValidationError(
        "exactly one data source required: synthetic flags or --series/--labels");
  }
  if (has_csv && (!cfg.series_path.has_value() || !cfg.labels_path.has_value())) {
    throw ValidationError("--series and --labels must be given together");
  }
  if (cfg.synthetic.has_value() &&
      cfg.synthetic->num_classes != cfg.num_classes) {
    throw ValidationError("synthetic classes must match --classes");
  }
}

std::vector<std::pair<std::string, std::string>> config_items(
    const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> items;
  items.emplace_back("task", task_name(cfg.task));
  items.emplace_back("classes", std::to_string(cfg.num_classes));
  items.emplace_back("loss", loss_kind_name(cfg.loss.kind));
  items.emplace_back("lambda", fmt_exact(cfg.loss.lambda));
  items.emplace_back("tau", fmt_exact(cfg.loss.tau));
  items.emplace_back("hidden_dim", std::to_string(cfg.hidden_dim));
  items.emplace_back("layers", std::to_string(cfg.num_layers));
  items.emplace_back("dropout", fmt_exact(cfg.dropout));
  items.emplace_back("batch_size", std::to_string(cfg.batch_size));
  items.emplace_back("epochs", std::to_string(cfg.max_epochs));
  items.emplace_back("lr", fmt_exact(cfg.lr));
  items.emplace_back("weight_decay", fmt_exact(cfg.weight_decay));
  items.emplace_back("grad_clip", fmt_exact(cfg.grad_clip));
  items.emplace_back("seed", std::to_string(cfg.seed));
  items.emplace_back("data_seed", std::to_string(effective_data_seed(cfg)));
  if (cfg.synthetic.has_value()) {
    const SyntheticSpec& s = *cfg.synthetic;
    items.emplace_back("source", "synthetic");
    items.emplace_back("n", std::to_string(s.n_samples));
    items.emplace_back("dim", std::to_string(s.feature_dim));
    items.emplace_back("t_min", std::to_string(s.t_min));
    items.emplace_back("t_max", std::to_string(s.t_max));
    std::string ratios;
    for (std::size_t i = 0; i < s.pos_ratio.size(); ++i) {
      ratios += (i ? "," : "") + fmt_exact(s.pos_ratio[i]);
    }
    items.emplace_back("pos_ratio", ratios);
    items.emplace_back("separation", fmt_exact(s.separation));
  } else {
    items.emplace_back("source", "csv");
    items.emplace_back("series", cfg.series_path.value_or(""));
    items.emplace_back("labels", cfg.labels_path.value_or(""));
    items.emplace_back("static", cfg.static_path.value_or(""));
  }
  items.emplace_back("train_frac", fmt_exact(cfg.fractions.train));
  items.emplace_back("val_frac", fmt_exact(cfg.fractions.val));
  items.emplace_back("test_frac", fmt_exact(cfg.fractions.test));
  items.emplace_back("bootstrap_k", std::to_string(cfg.bootstrap_k));
  return items;
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [key, value] : config_items(cfg)) {
    for (const std::string* part : {&key, &value}) {
      for (char ch : *part) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ull;
      }
      h ^= '\n';
      h *= 0x100000001b3ull;
    }
  }
  return hex_u64(h);
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const ExperimentConfig& cfg) {
  json config;
  for (const auto& [key, value] : config_items(cfg)) {
    config[key] = value;
  }
  json manifest;
  manifest["tool"] = kToolName;
  manifest["version"] = kToolVersion;
  manifest["command"] = command;
  manifest["seed"] = cfg.seed;
  manifest["config"] = config;
  manifest["config_hash"] = config_hash_hex(cfg);
  write_text_file(join_path(out_dir, "manifest.json"), manifest.dump(2) + "\n");
}

Splits load_splits(const ExperimentConfig& cfg) {
  const Dataset full = load_full_dataset(cfg);
  if (full.num_classes != cfg.num_classes) {
    throw ValidationError("dataset has " + std::to_string(full.num_classes) +
                          " classes, config says " +
                          std::to_string(cfg.num_classes));
  }
  const std::optional<Index> stratify =
      cfg.task == Task::Binary ? std::optional<Index>(0) : std::nullopt;
  return split(full, cfg.fractions, stratify,
               derive_seed(effective_data_seed(cfg), {kSeedSplit}));
}

GenDataResult run_gen_data(const ExperimentConfig& cfg) {
  if (!cfg.synthetic.has_value()) {
    throw ValidationError("gen-data requires synthetic spec flags");
  }
  SyntheticSpec spec = *cfg.synthetic;
  spec.seed = effective_data_seed(cfg);
  const Dataset data = generate_synthetic(spec);  // validates before any write

  const std::string dir = ensure_out_dir(cfg);
  GenDataResult result;
  result.series_path = join_path(dir, "series.csv");
  result.labels_path = join_path(dir, "labels.csv");
  save_csv(data, result.series_path, result.labels_path);
  for (Index c = 0; c < data.num_classes; ++c) {
    result.realized_pos_ratio.push_back(positive_ratio(data, c));
  }

  write_manifest(dir, "gen-data", cfg);
  // Append realized ratios to the manifest for quick inspection.
  const std::string manifest_path = join_path(dir, "manifest.json");
  std::ifstream in(manifest_path);
  json manifest = json::parse(in);
  manifest["realized_pos_ratio"] = result.realized_pos_ratio;
  write_text_file(manifest_path, manifest.dump(2) + "\n");
  return result;
}

TrainRunResult run_train(const ExperimentConfig& cfg) {
  validate_experiment(cfg);
  const Splits splits = load_splits(cfg);
  const EncoderConfig enc_cfg = encoder_config(cfg, splits.train);
  const TrainConfig tc = trainer_config(cfg);

  TrainRunResult out;
  out.train = train(tc, enc_cfg, splits.train, splits.val);

  const std::string dir = ensure_out_dir(cfg);
  std::string epochs = "epoch,train_loss,val_loss,val_metric\n";
  for (const EpochReport& e : out.train.epochs) {
    epochs += std::to_string(e.epoch) + "," + fmt(e.train_loss) + "," +
              fmt(e.val_loss) + "," + fmt(e.val_metric) + "\n";
  }
  out.epochs_csv_path = join_path(dir, "epochs.csv");
  write_text_file(out.epochs_csv_path, epochs);

  out.checkpoint_path = join_path(dir, "checkpoint.bin");
  save_checkpoint(out.checkpoint_path, out.train.best_params);

  out.test_report = test_metrics(cfg, out.train.best_params, splits.test);
  out.test_hash = dataset_hash(splits.test);
  out.metrics_csv_path = join_path(dir, "metrics.csv");
  write_text_file(out.metrics_csv_path, out.test_report.to_csv());

  write_manifest(dir, "train", cfg);
  return out;
}

GridRunResult run_grid(const ExperimentConfig& base,
                       const std::vector<double>& lambda_grid,
                       const std::vector<Index>& batch_grid) {
  validate_experiment(base);
  if (lambda_grid.empty() || batch_grid.empty()) {
    throw ValidationError("grid: lambda and batch grids must be non-empty");
  }
  if (base.loss.kind == LossKind::Bce &&
      std::any_of(lambda_grid.begin(), lambda_grid.end(),
                  [](double l) { return l != 0.0; })) {
    throw ValidationError("grid: nonzero lambda grid requires a +scr loss");
  }
  const Splits splits = load_splits(base);
  const EncoderConfig enc_cfg = encoder_config(base, splits.train);

  GridRunResult out;
  out.search = grid_search(trainer_config(base), enc_cfg, lambda_grid,
                           batch_grid, splits.train, splits.val);

  const std::string dir = ensure_out_dir(base);
  const std::string header = "lambda,batch_size,seed,best_epoch,val_metric," +
                             metrics_columns(base.task) + "\n";
  std::string cells_csv = header;
  std::vector<std::string> rows;
  for (const GridCell& cell : out.search.cells) {
    ExperimentConfig cell_cfg = base;
    cell_cfg.loss.lambda = cell.lambda;
    const MetricsReport report =
        test_metrics(cell_cfg, cell.result.best_params, splits.test);
    const std::string row = fmt(cell.lambda) + "," +
                            std::to_string(cell.batch_size) + "," +
                            std::to_string(cell.seed) + "," +
                            std::to_string(cell.result.best_epoch) + "," +
                            fmt(cell.result.best_val_metric) + "," +
                            metrics_row(report, base.task) + "\n";
    cells_csv += row;
    rows.push_back(row);
  }
  out.cells_csv_path = join_path(dir, "cells.csv");
  write_text_file(out.cells_csv_path, cells_csv);

  out.best_csv_path = join_path(dir, "best.csv");
  write_text_file(out.best_csv_path, header + rows[out.search.best_index]);

  write_manifest(dir, "grid", base);
  return out;
}

SweepResult run_imbalance_sweep(const ExperimentConfig& base,
                                const std::vector<double>& ratios,
                                const std::vector<LossKind>& losses,
                                int n_seeds,
                                const std::vector<double>& lambda_grid) {
  validate_experiment(base);
  if (base.task != Task::Binary) {
    throw ValidationError("imbalance-sweep: binary task only");
  }
  if (ratios.empty() || losses.empty() || n_seeds < 1) {
    throw ValidationError("imbalance-sweep: need ratios, losses, and seeds >= 1");
  }
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    if (!(ratios[i] < ratios[i - 1])) {
      throw ValidationError("imbalance-sweep: ratios must be strictly decreasing");
    }
  }
  for (double lambda : lambda_grid) {
    if (lambda < 0.0) {
      throw ValidationError("imbalance-sweep: lambda grid must be non-negative");
    }
  }

  const Splits splits = load_splits(base);
  const double base_ratio = positive_ratio(splits.train, 0);
  if (ratios.front() >= base_ratio) {
    throw ValidationError("imbalance-sweep: ratios must be below the base " +
                          fmt(base_ratio));
  }
  const EncoderConfig enc_cfg = encoder_config(base, splits.train);
  const std::uint64_t test_hash = dataset_hash(splits.test);

  std::vector<Index> all_test(static_cast<std::size_t>(splits.test.size()));
  for (Index i = 0; i < splits.test.size(); ++i) {
    all_test[static_cast<std::size_t>(i)] = i;
  }
  const RealMatrix test_labels = label_matrix(splits.test, all_test);

  SweepResult out;
  for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
    // One fixed downsampled cohort per imbalance level, as in the reference
    // protocol; the seeds vary the training runs on that cohort.
    const Dataset down = downsample_positives(
        splits.train, 0, ratios[ri],
        derive_seed(base.seed,
                    {kSeedSweepDownsample, static_cast<std::uint64_t>(ri)}));
    for (int rep = 0; rep < n_seeds; ++rep) {
      for (std::size_t li = 0; li < losses.size(); ++li) {
        TrainConfig tc = trainer_config(base);
        tc.loss.kind = losses[li];
        tc.seed = derive_seed(
            base.seed, {kSeedSweepTrain, static_cast<std::uint64_t>(ri),
                        static_cast<std::uint64_t>(rep),
                        static_cast<std::uint64_t>(li)});

        std::vector<double> cell_lambdas;
        if (losses[li] == LossKind::Bce) {
          cell_lambdas = {0.0};
        } else if (lambda_grid.empty()) {
          cell_lambdas = {base.loss.lambda};
        } else {
          cell_lambdas = lambda_grid;
        }

        // Best validation metric across the cell's lambda options, ties
        // toward the smaller lambda.
        TrainResult best;
        double best_lambda = 0.0;
        bool have_best = false;
        for (double lambda : cell_lambdas) {
          tc.loss.lambda = lambda;
          TrainResult result = train(tc, enc_cfg, down, splits.val);
          if (!have_best ||
              result.best_val_metric > best.best_val_metric ||
              (result.best_val_metric == best.best_val_metric &&
               lambda < best_lambda)) {
            best = std::move(result);
            best_lambda = lambda;
            have_best = true;
          }
        }

        const RealMatrix scores =
            score_dataset(tc.loss.kind, best.best_params, splits.test);
        const std::vector<ScoredLabels> per_class =
            per_class_scored(scores, test_labels);

        SweepRow row;
        row.ratio = ratios[ri];
        row.loss = losses[li];
        row.seed_rep = rep;
        row.lambda = best_lambda;
        row.auroc = auroc(per_class[0]);
        row.auprc = auprc(per_class[0]);
        row.accuracy = accuracy(per_class[0]);
        row.min_se_pplus = min_se_pplus(per_class[0]);
        row.test_hash = test_hash;
        out.rows.push_back(row);
      }
    }
  }

  const std::string dir = ensure_out_dir(base);
  std::string csv =
      "ratio,loss,seed,lambda,auroc,auprc,accuracy,min_se_pplus,test_hash\n";
  for (const SweepRow& row : out.rows) {
    csv += fmt(row.ratio) + std::string(",") + loss_kind_name(row.loss) + "," +
           std::to_string(row.seed_rep) + "," + fmt(row.lambda) + "," +
           fmt(row.auroc) + "," + fmt(row.auprc) + "," + fmt(row.accuracy) +
           "," + fmt(row.min_se_pplus) + "," + hex_u64(row.test_hash) + "\n";
  }
  out.sweep_csv_path = join_path(dir, "sweep.csv");
  write_text_file(out.sweep_csv_path, csv);

  write_manifest(dir, "imbalance-sweep", base);
  return out;
}

std::string embeddings_csv(const EncoderParams& params, const Dataset& data) {
  if (params.cfg.input_dim != data.feature_dim) {
    throw ValidationError("embeddings: checkpoint expects D=" +
                          std::to_string(params.cfg.input_dim) +
                          ", dataset has D=" +
                          std::to_string(data.feature_dim));
  }
  if (params.cfg.static_dim != data.static_dim) {
    throw ValidationError("embeddings: checkpoint expects D_S=" +
                          std::to_string(params.cfg.static_dim) +
                          ", dataset has D_S=" +
                          std::to_string(data.static_dim));
  }
  const RealMatrix z = encode_dataset(params, data);
  const Index h = z.cols();

  std::string csv = "id,label";
  for (Index j = 0; j < h; ++j) {
    csv += ",z" + std::to_string(j + 1);
  }
  csv += "\n";
  auto append_row = [&](const std::string& id, const std::string& label,
                        const auto& vec) {
    csv += id + "," + label;
    for (Index j = 0; j < h; ++j) {
      csv += "," + fmt_exact(vec[j]);
    }
    csv += "\n";
  };
  for (Index i = 0; i < data.size(); ++i) {
    const SequenceSample& s = data.samples[static_cast<std::size_t>(i)];
    std::string label;
    for (Index c = 0; c < s.labels.size(); ++c) {
      label += s.labels[c] == 1.0 ? '1' : '0';
    }
    append_row(s.id, label, z.row(i));
  }
  for (Index c = 0; c < params.num_classes; ++c) {
    append_row("__anchor_pos_" + std::to_string(c + 1), "anchor",
               params.anchors.U.row(c));
    append_row("__anchor_neg_" + std::to_string(c + 1), "anchor",
               params.anchors.V.row(c));
  }
  return csv;
}

ExportResult run_export_embeddings(const std::string& checkpoint_path,
                                   const ExperimentConfig& cfg) {
  const EncoderParams params = load_checkpoint(checkpoint_path);
  const Dataset data = load_full_dataset(cfg);
  const std::string dir = ensure_out_dir(cfg);
  ExportResult out;
  out.embeddings_csv_path = join_path(dir, "embeddings.csv");
  write_text_file(out.embeddings_csv_path, embeddings_csv(params, data));
  write_manifest(dir, "export-embeddings", cfg);
  return out;
}

EvalResult run_eval(const std::string& checkpoint_path,
                    const ExperimentConfig& cfg) {
  const EncoderParams params = load_checkpoint(checkpoint_path);
  const Dataset data = load_full_dataset(cfg);
  if (params.num_classes != data.num_classes) {
    throw ValidationError("eval: checkpoint has " +
                          std::to_string(params.num_classes) +
                          " classes, dataset has " +
                          std::to_string(data.num_classes));
  }
  if (params.cfg.input_dim != data.feature_dim) {
    throw ValidationError("eval: checkpoint expects D=" +
                          std::to_string(params.cfg.input_dim) +
                          ", dataset has D=" + std::to_string(data.feature_dim));
  }

  EvalResult out;
  out.report = test_metrics(cfg, params, data);
  const std::string dir = ensure_out_dir(cfg);
  out.metrics_csv_path = join_path(dir, "metrics.csv");
  write_text_file(out.metrics_csv_path, out.report.to_csv());
  write_manifest(dir, "eval", cfg);
  return out;
}

MetricsReport binary_metrics_report(const ScoredLabels& sl, Index bootstrap_k,
                                    std::uint64_t bootstrap_seed) {
  MetricsReport report;
  const int k = static_cast<int>(bootstrap_k);
  report.add("auroc", auroc(sl),
             bootstrap_std(sl, MetricKind::Auroc, k, bootstrap_seed));
  report.add("auprc", auprc(sl),
             bootstrap_std(sl, MetricKind::Auprc, k, bootstrap_seed));
  report.add("accuracy", accuracy(sl),
             bootstrap_std(sl, MetricKind::Accuracy, k, bootstrap_seed));
  report.add("min_se_pplus", min_se_pplus(sl),
             bootstrap_std(sl, MetricKind::MinSePplus, k, bootstrap_seed));
  return report;
}

double class_separation_ratio(const RealMatrix& Z,
                              const std::vector<int>& labels) {
  if (Z.rows() != static_cast<Index>(labels.size())) {
    throw ValidationError("class_separation_ratio: shape mismatch");
  }
  RealVector centroid0 = RealVector::Zero(Z.cols());
  RealVector centroid1 = RealVector::Zero(Z.cols());
  double n0 = 0.0;
  double n1 = 0.0;
  for (Index i = 0; i < Z.rows(); ++i) {
    if (labels[static_cast<std::size_t>(i)] == 1) {
      centroid1 += Z.row(i).transpose();
      n1 += 1.0;
    } else {
      centroid0 += Z.row(i).transpose();
      n0 += 1.0;
    }
  }
  if (n0 == 0.0 || n1 == 0.0) {
    throw ValidationError("class_separation_ratio: needs both classes");
  }
  centroid0 /= n0;
  centroid1 /= n1;

  double within = 0.0;
  for (Index i = 0; i < Z.rows(); ++i) {
    const RealVector& centroid =
        labels[static_cast<std::size_t>(i)] == 1 ? centroid1 : centroid0;
    within += (Z.row(i).transpose() - centroid).norm();
  }
  within /= static_cast<double>(Z.rows());
  const double between = (centroid1 - centroid0).norm();
  if (within == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return between / within;
}

}  // namespace seqcl
