#include "seqcl/trainer.hpp"

#include "seqcl/metrics.hpp"
#include "seqcl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace seqcl {

namespace {

// Stream tags for deriving independent sub-seeds from one run seed.
constexpr std::uint64_t kSeedInit = 1;
constexpr std::uint64_t kSeedShuffle = 2;
constexpr std::uint64_t kSeedDropout = 3;
constexpr std::uint64_t kSeedGridCell = 4;

}  // namespace

AdamState init_adam(const EncoderParams& params, const AdamConfig& cfg) {
  AdamState state;
  state.cfg = cfg;
  for (const ParamView& view : param_views(params)) {
    state.m.push_back(RealVector::Zero(view.size));
    state.v.push_back(RealVector::Zero(view.size));
  }
  return state;
}

void adam_step(AdamState& state, EncoderParams& params,
               const EncoderParams& grads) {
  const std::vector<ParamView> p_views = param_views(params);
  const std::vector<ParamView> g_views = param_views(grads);
  if (p_views.size() != state.m.size() || g_views.size() != state.m.size()) {
    throw ValidationError("adam_step: parameter/gradient block mismatch");
  }
  state.step += 1;
  const AdamConfig& cfg = state.cfg;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t b = 0; b < p_views.size(); ++b) {
    if (p_views[b].size != g_views[b].size) {
      throw ValidationError("adam_step: block " + std::to_string(b) +
                            " size mismatch");
    }
    double* p = p_views[b].data;
    const double* g = g_views[b].data;
    RealVector& m = state.m[b];
    RealVector& v = state.v[b];
    for (Index i = 0; i < p_views[b].size; ++i) {
      const double grad = g[i] + cfg.weight_decay * p[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad * grad;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

SequenceBatch make_batch(const Dataset& data, const std::vector<Index>& idx) {
  if (idx.empty()) {
    throw ValidationError("make_batch: empty index list");
  }
  const Index n = static_cast<Index>(idx.size());
  SequenceBatch batch;
  batch.lengths.resize(idx.size());
  Index t_max = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const SequenceSample& s = data.samples[static_cast<std::size_t>(idx[k])];
    batch.lengths[k] = s.series.rows();
    t_max = std::max(t_max, s.series.rows());
  }
  batch.steps.assign(static_cast<std::size_t>(t_max),
                     RealMatrix::Zero(n, data.feature_dim));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const SequenceSample& s = data.samples[static_cast<std::size_t>(idx[k])];
    for (Index t = 0; t < s.series.rows(); ++t) {
      batch.steps[static_cast<std::size_t>(t)].row(static_cast<Index>(k)) =
          s.series.row(t);
    }
  }
  if (data.static_dim > 0) {
    batch.statics.resize(n, data.static_dim);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      batch.statics.row(static_cast<Index>(k)) =
          data.samples[static_cast<std::size_t>(idx[k])].statics.transpose();
    }
  }
  return batch;
}

RealMatrix label_matrix(const Dataset& data, const std::vector<Index>& idx) {
  RealMatrix labels(static_cast<Index>(idx.size()), data.num_classes);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    labels.row(static_cast<Index>(k)) =
        data.samples[static_cast<std::size_t>(idx[k])].labels.transpose();
  }
  return labels;
}

std::vector<std::vector<Index>> batch_indices(Index n, Index batch_size) {
  std::vector<std::vector<Index>> batches;
  Index start = 0;
  while (start < n) {
    const Index end = std::min(n, start + batch_size);
    std::vector<Index> b(static_cast<std::size_t>(end - start));
    std::iota(b.begin(), b.end(), start);
    if (static_cast<Index>(b.size()) < 2 && !batches.empty()) {
      batches.back().insert(batches.back().end(), b.begin(), b.end());
    } else {
      batches.push_back(std::move(b));
    }
    start = end;
  }
  return batches;
}

namespace {

double clip_gradients(EncoderParams& grads, double max_norm) {
  double sq = 0.0;
  for (const ParamView& view : param_views(grads)) {
    for (Index i = 0; i < view.size; ++i) {
      sq += view.data[i] * view.data[i];
    }
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (const ParamView& view : param_views(grads)) {
      for (Index i = 0; i < view.size; ++i) {
        view.data[i] *= scale;
      }
    }
  }
  return norm;
}

/// Validation loss and metric with a deterministic batch order.
std::pair<double, double> validation_pass(const TrainConfig& cfg,
                                          const EncoderParams& params,
                                          const Dataset& val_data) {
  const Index n = val_data.size();
  double loss_sum = 0.0;
  RealMatrix scores(n, val_data.num_classes);
  RealMatrix labels(n, val_data.num_classes);
  for (const std::vector<Index>& idx : batch_indices(n, cfg.batch_size)) {
    const SequenceBatch batch = make_batch(val_data, idx);
    BatchEmbeddings emb;
    emb.Z = encode(params, batch, /*training=*/false, /*dropout_seed=*/0);
    emb.labels = label_matrix(val_data, idx);
    const LossOutput loss = combined_loss(cfg.loss, emb, params.anchors);
    loss_sum += loss.value * static_cast<double>(idx.size());
    const RealMatrix batch_scores =
        predict_scores(cfg.loss.kind, emb.Z, params.anchors);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      scores.row(idx[k]) = batch_scores.row(static_cast<Index>(k));
      labels.row(idx[k]) = emb.labels.row(static_cast<Index>(k));
    }
  }
  const double metric = selection_metric_value(cfg.selection, scores, labels);
  return {loss_sum / static_cast<double>(n), metric};
}

}  // namespace

double selection_metric_value(SelectionMetric metric, const RealMatrix& scores,
                              const RealMatrix& labels) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
    throw ValidationError("selection_metric_value: shape mismatch");
  }
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
  if (metric == SelectionMetric::Auroc) {
    if (per_class.size() != 1) {
      throw ValidationError(
          "selection_metric_value: AUROC selection needs exactly one class");
    }
    return auroc(per_class[0]);
  }
  return multilabel_aurocs(per_class).micro;
}

TrainResult train(const TrainConfig& cfg, const EncoderConfig& enc_cfg,
                  const Dataset& train_data, const Dataset& val_data) {
  validate(train_data);
  validate(val_data);
  if (train_data.feature_dim != val_data.feature_dim ||
      train_data.static_dim != val_data.static_dim ||
      train_data.num_classes != val_data.num_classes) {
    throw ValidationError("train: train/validation dimensions differ");
  }
  if (enc_cfg.input_dim != train_data.feature_dim ||
      enc_cfg.static_dim != train_data.static_dim) {
    throw ValidationError("train: encoder dims do not match the data");
  }
  if (cfg.batch_size < 2) {
    throw ValidationError("train: batch_size must be >= 2");
  }
  if (cfg.max_epochs < 1) {
    throw ValidationError("train: max_epochs must be >= 1");
  }
  if (train_data.size() < 2) {
    throw ValidationError("train: need at least 2 training samples");
  }

  EncoderParams params = init_params(enc_cfg, train_data.num_classes,
                                     derive_seed(cfg.seed, {kSeedInit}));
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  adam_cfg.weight_decay = cfg.weight_decay;
  AdamState adam = init_adam(params, adam_cfg);
  Rng shuffle_rng(derive_seed(cfg.seed, {kSeedShuffle}));

  TrainResult result;
  result.best_val_metric = -std::numeric_limits<double>::infinity();

  const Index n = train_data.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Index{0});
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    const std::vector<std::vector<Index>> batches = batch_indices(n, cfg.batch_size);
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      std::vector<Index> idx(batches[bi].size());
      for (std::size_t k = 0; k < idx.size(); ++k) {
        idx[k] = order[static_cast<std::size_t>(batches[bi][k])];
      }
      const SequenceBatch batch = make_batch(train_data, idx);
      const std::uint64_t dropout_seed =
          derive_seed(cfg.seed, {kSeedDropout, static_cast<std::uint64_t>(epoch),
                                 static_cast<std::uint64_t>(bi)});
      EncoderCache cache;
      BatchEmbeddings emb;
      emb.Z = encode_forward(params, batch, /*training=*/true, dropout_seed, cache);
      emb.labels = label_matrix(train_data, idx);
      const LossOutput loss = combined_loss(cfg.loss, emb, params.anchors);
      if (!std::isfinite(loss.value)) {
        LossConfig bare = cfg.loss;
        bare.lambda = 0.0;
        const double ce_part = combined_loss(bare, emb, params.anchors).value;
        throw RuntimeFailure(
            "train: non-finite loss at epoch " + std::to_string(epoch) +
            ", batch " + std::to_string(bi) + " (total=" +
            std::to_string(loss.value) + ", cross-entropy part=" +
            std::to_string(ce_part) + ")");
      }
      loss_sum += loss.value * static_cast<double>(idx.size());

      EncoderParams grads = encode_backward(params, batch, cache, loss.grad_Z);
      grads.anchors.U = loss.grad_U;
      grads.anchors.V = loss.grad_V;
      if (cfg.grad_clip > 0.0) {
        clip_gradients(grads, cfg.grad_clip);
      }
      adam_step(adam, params, grads);
    }

    const auto [val_loss, val_metric] = validation_pass(cfg, params, val_data);
    EpochReport report;
    report.epoch = epoch;
    report.train_loss = loss_sum / static_cast<double>(n);
    report.val_loss = val_loss;
    report.val_metric = val_metric;
    result.epochs.push_back(report);

    if (val_metric > result.best_val_metric) {
      result.best_val_metric = val_metric;
      result.best_epoch = epoch;
      result.best_params = params;
    }
  }
  result.update_steps = adam.step;
  return result;
}

RealMatrix encode_dataset(const EncoderParams& params, const Dataset& data,
                          Index batch_size) {
  validate(data);
  const Index n = data.size();
  RealMatrix z(n, params.cfg.hidden_dim);
  Index start = 0;
  while (start < n) {
    const Index end = std::min(n, start + batch_size);
    std::vector<Index> idx(static_cast<std::size_t>(end - start));
    std::iota(idx.begin(), idx.end(), start);
    const SequenceBatch batch = make_batch(data, idx);
    z.middleRows(start, end - start) =
        encode(params, batch, /*training=*/false, /*dropout_seed=*/0);
    start = end;
  }
  return z;
}

RealMatrix score_dataset(LossKind kind, const EncoderParams& params,
                         const Dataset& data, Index batch_size) {
  const RealMatrix z = encode_dataset(params, data, batch_size);
  return predict_scores(kind, z, params.anchors);
}

GridSearchResult grid_search(const TrainConfig& base,
                             const EncoderConfig& enc_cfg,
                             const std::vector<double>& lambda_grid,
                             const std::vector<Index>& batch_grid,
                             const Dataset& train_data,
                             const Dataset& val_data) {
  if (lambda_grid.empty() || batch_grid.empty()) {
    throw ValidationError("grid_search: empty grid");
  }
  GridSearchResult out;
  std::uint64_t cell_index = 0;
  for (double lambda : lambda_grid) {
    for (Index batch : batch_grid) {
      GridCell cell;
      cell.lambda = lambda;
      cell.batch_size = batch;
      cell.seed = derive_seed(base.seed, {kSeedGridCell, cell_index});
      TrainConfig cfg = base;
      cfg.loss.lambda = lambda;
      cfg.batch_size = batch;
      cfg.seed = cell.seed;
      cell.result = train(cfg, enc_cfg, train_data, val_data);
      out.cells.push_back(std::move(cell));
      ++cell_index;
    }
  }
  out.best_index = 0;
  for (std::size_t i = 1; i < out.cells.size(); ++i) {
    const GridCell& a = out.cells[i];
    const GridCell& b = out.cells[out.best_index];
    const double ma = a.result.best_val_metric;
    const double mb = b.result.best_val_metric;
    const bool better =
        ma > mb ||
        (ma == mb && (a.lambda < b.lambda ||
                      (a.lambda == b.lambda && a.batch_size < b.batch_size)));
    if (better) {
      out.best_index = i;
    }
  }
  return out;
}

}  // namespace seqcl
