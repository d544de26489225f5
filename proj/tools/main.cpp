// Command-line front end: dataset generation, training, grid search,
// imbalance sweeps, evaluation, and embedding export.

#include "seqcl/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace seqcl;

struct CliState {
  ExperimentConfig cfg;
  std::string loss_name = "bce";
  std::string task_name = "binary";
  std::vector<double> pos_ratio = {0.5};
  long long n_samples = 0;
  long long feature_dim = 76;
  long long t_min = 8;
  long long t_max = 16;
  double separation = 1.0;
  long long classes = 1;
  long long hidden_dim = 16;
  long long layers = 1;
  long long batch_size = 256;
  long long epochs = 100;
  long long bootstrap_k = 100;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> data_seed;
  std::string series;
  std::string labels;
  std::string statics;
  std::string out;
};

/// Options shared by every experiment-running subcommand. Flag values win
/// over config-file values (CLI11's default precedence).
void add_common_options(CLI::App* cmd, CliState& state, bool with_data) {
  cmd->add_option("--task", state.task_name, "binary or multilabel")
      ->check(CLI::IsMember({"binary", "multilabel"}));
  cmd->add_option("--classes", state.classes, "number of label classes C");
  cmd->add_option("--loss", state.loss_name,
                  "bce, bce+scr, cbce+scr, or csce+scr");
  cmd->add_option("--lambda", state.cfg.loss.lambda, "regularizer weight");
  cmd->add_option("--tau", state.cfg.loss.tau, "regularizer temperature");
  cmd->add_option("--hidden-dim", state.hidden_dim, "embedding width H");
  cmd->add_option("--layers", state.layers, "stacked recurrent layers");
  cmd->add_option("--dropout", state.cfg.dropout, "inter-layer dropout rate");
  cmd->add_option("--batch-size", state.batch_size, "mini-batch size");
  cmd->add_option("--epochs", state.epochs, "training epochs");
  cmd->add_option("--lr", state.cfg.lr, "Adam learning rate");
  cmd->add_option("--weight-decay", state.cfg.weight_decay, "L2 coefficient");
  cmd->add_option("--grad-clip", state.cfg.grad_clip,
                  "max gradient norm, 0 disables");
  cmd->add_option("--seed", state.seed, "experiment seed");
  cmd->add_option("--data-seed", state.data_seed,
                  "pin data generation/splitting separately from --seed");
  cmd->add_option("--train-frac", state.cfg.fractions.train, "train fraction");
  cmd->add_option("--val-frac", state.cfg.fractions.val, "validation fraction");
  cmd->add_option("--test-frac", state.cfg.fractions.test, "test fraction");
  cmd->add_option("--bootstrap", state.bootstrap_k,
                  "bootstrap resamples for metric stds");
  cmd->add_option("--out", state.out, "output directory")->required();
  if (with_data) {
    cmd->add_option("--series", state.series, "series CSV (id,t,f1..fD)");
    cmd->add_option("--labels", state.labels, "labels CSV (id,y1..yC)");
    cmd->add_option("--static", state.statics, "static feature CSV (id,s1..)");
    cmd->add_option("--n", state.n_samples, "synthetic sample count");
    cmd->add_option("--dim", state.feature_dim, "synthetic feature count D");
    cmd->add_option("--t-min", state.t_min, "synthetic min length");
    cmd->add_option("--t-max", state.t_max, "synthetic max length");
    cmd->add_option("--pos-ratio", state.pos_ratio,
                    "positive ratio (one value, or one per class)");
    cmd->add_option("--separation", state.separation,
                    "synthetic class separation");
  }
}

ExperimentConfig build_config(const CliState& state) {
  ExperimentConfig cfg = state.cfg;
  cfg.task = parse_task(state.task_name);
  cfg.num_classes = static_cast<Index>(state.classes);
  cfg.loss.kind = parse_loss_kind(state.loss_name);
  cfg.hidden_dim = static_cast<Index>(state.hidden_dim);
  cfg.num_layers = static_cast<Index>(state.layers);
  cfg.batch_size = static_cast<Index>(state.batch_size);
  cfg.max_epochs = static_cast<Index>(state.epochs);
  cfg.bootstrap_k = static_cast<Index>(state.bootstrap_k);
  cfg.seed = state.seed;
  cfg.data_seed = state.data_seed;
  cfg.out_dir = state.out;
  if (!state.series.empty() || !state.labels.empty()) {
    if (!state.series.empty()) {
      cfg.series_path = state.series;
    }
    if (!state.labels.empty()) {
      cfg.labels_path = state.labels;
    }
    if (!state.statics.empty()) {
      cfg.static_path = state.statics;
    }
  } else if (state.n_samples > 0) {
    SyntheticSpec spec;
    spec.n_samples = static_cast<Index>(state.n_samples);
    spec.feature_dim = static_cast<Index>(state.feature_dim);
    spec.t_min = static_cast<Index>(state.t_min);
    spec.t_max = static_cast<Index>(state.t_max);
    spec.num_classes = cfg.num_classes;
    spec.pos_ratio = state.pos_ratio;
    spec.separation = state.separation;
    cfg.synthetic = spec;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supervised contrastive losses for sequence classification"};
  app.require_subcommand(1);
  // Flat key=value config file; keys are <subcommand>.<flag-name> and
  // command-line flags win over file values.
  app.set_config("--config", "",
                 "flat key=value config file (keys like train.loss); flags "
                 "override file values");

  CliState state;

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  add_common_options(gen, state, /*with_data=*/true);

  CLI::App* train_cmd =
      app.add_subcommand("train", "train one model and evaluate on the test split");
  add_common_options(train_cmd, state, /*with_data=*/true);

  CLI::App* grid = app.add_subcommand(
      "grid", "grid search over lambda and batch size on a shared split");
  std::vector<double> lambda_grid = {0.0};
  std::vector<long long> batch_grid_ll = {256};
  grid->add_option("--lambda-grid", lambda_grid, "lambda values");
  grid->add_option("--batch-grid", batch_grid_ll, "batch sizes");
  add_common_options(grid, state, /*with_data=*/true);

  CLI::App* sweep = app.add_subcommand(
      "imbalance-sweep",
      "downsample training positives to each ratio, train each loss over "
      "several seeds, evaluate on the untouched test split");
  std::vector<double> ratios = {0.05, 0.01, 0.001};
  std::vector<std::string> sweep_losses = {"bce", "cbce+scr", "csce+scr"};
  std::vector<double> sweep_lambda_grid;
  long long sweep_seeds = 5;
  sweep->add_option("--ratios", ratios, "target positive ratios, decreasing");
  sweep->add_option("--losses", sweep_losses, "loss kinds to compare");
  sweep->add_option("--sweep-seeds", sweep_seeds, "training seeds per cell");
  sweep->add_option("--lambda-grid", sweep_lambda_grid,
                    "lambda options searched per cell by validation metric "
                    "(default: the single --lambda value)");
  add_common_options(sweep, state, /*with_data=*/true);

  CLI::App* export_cmd = app.add_subcommand(
      "export-embeddings", "write id,label,z1..zH rows plus anchor rows");
  std::string checkpoint;
  export_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")
      ->required();
  add_common_options(export_cmd, state, /*with_data=*/true);

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "score a dataset with a saved checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")
      ->required();
  add_common_options(eval_cmd, state, /*with_data=*/true);

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig cfg = build_config(state);
    if (gen->parsed()) {
      const GenDataResult result = run_gen_data(cfg);
      std::printf("wrote %s and %s\n", result.series_path.c_str(),
                  result.labels_path.c_str());
    } else if (train_cmd->parsed()) {
      const TrainRunResult result = run_train(cfg);
      std::printf("best epoch %lld, validation metric %.6f\n",
                  static_cast<long long>(result.train.best_epoch),
                  result.train.best_val_metric);
      for (const MetricEntry& e : result.test_report.entries) {
        std::printf("%s %.6f\n", e.name.c_str(), e.value);
      }
    } else if (grid->parsed()) {
      std::vector<Index> batch_grid(batch_grid_ll.begin(), batch_grid_ll.end());
      const GridRunResult result = run_grid(cfg, lambda_grid, batch_grid);
      const GridCell& best = result.search.cells[result.search.best_index];
      std::printf("best cell: lambda=%g batch=%lld val_metric=%.6f\n",
                  best.lambda, static_cast<long long>(best.batch_size),
                  best.result.best_val_metric);
    } else if (sweep->parsed()) {
      std::vector<LossKind> losses;
      for (const std::string& name : sweep_losses) {
        losses.push_back(parse_loss_kind(name));
      }
      const SweepResult result =
          run_imbalance_sweep(cfg, ratios, losses,
                              static_cast<int>(sweep_seeds), sweep_lambda_grid);
      std::printf("wrote %zu rows to %s\n", result.rows.size(),
                  result.sweep_csv_path.c_str());
    } else if (export_cmd->parsed()) {
      const ExportResult result = run_export_embeddings(checkpoint, cfg);
      std::printf("wrote %s\n", result.embeddings_csv_path.c_str());
    } else if (eval_cmd->parsed()) {
      const EvalResult result = run_eval(checkpoint, cfg);
      for (const MetricEntry& e : result.report.entries) {
        std::printf("%s %.6f\n", e.name.c_str(), e.value);
      }
    }
  } catch (const ValidationError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  }
  return 0;
}
