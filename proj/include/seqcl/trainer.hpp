#pragma once

#include "seqcl/data.hpp"
#include "seqcl/encoder.hpp"
#include "seqcl/losses.hpp"

#include <cstdint>
#include <vector>

namespace seqcl {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Bias-corrected Adam. Moment accumulators mirror the parameter blocks in
/// param_views() order.
struct AdamState {
  AdamConfig cfg;
  long long step = 0;
  std::vector<RealVector> m;
  std::vector<RealVector> v;
};

AdamState init_adam(const EncoderParams& params, const AdamConfig& cfg);

/// One bias-corrected update; increments the step counter exactly once.
void adam_step(AdamState& state, EncoderParams& params,
               const EncoderParams& grads);

enum class SelectionMetric { Auroc, MicroAuroc };

struct TrainConfig {
  LossConfig loss;
  Index batch_size = 256;
  Index max_epochs = 100;
  std::uint64_t seed = 0;
  SelectionMetric selection = SelectionMetric::Auroc;
  double lr = 0.001;
  double weight_decay = 0.0;
  double grad_clip = 0.0;  ///< max global gradient norm; 0 disables clipping
};

struct EpochReport {
  Index epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;
};

struct TrainResult {
  EncoderParams best_params;
  std::vector<EpochReport> epochs;
  Index best_epoch = 0;
  double best_val_metric = 0.0;
  long long update_steps = 0;
};

/// Assembles a padded SequenceBatch (and the matching label matrix) from
/// dataset rows in the given index order.
SequenceBatch make_batch(const Dataset& data, const std::vector<Index>& idx);
RealMatrix label_matrix(const Dataset& data, const std::vector<Index>& idx);

/// Splits 0..n-1 into consecutive chunks of batch_size; a final chunk smaller
/// than 2 is folded into the previous one so the regularizer stays defined.
std::vector<std::vector<Index>> batch_indices(Index n, Index batch_size);

/** The training loop: per epoch, seeded shuffle, mini-batch loss + gradients,
 *  Adam updates of the encoder and both anchors, then a validation pass. The
 *  returned parameters are the snapshot with the best validation metric
 *  (earliest epoch on ties). The whole trajectory is a pure function of
 *  (configs, seed, data).
 */
TrainResult train(const TrainConfig& cfg, const EncoderConfig& enc_cfg,
                  const Dataset& train_data, const Dataset& val_data);

/// Embeddings for a whole dataset (training = false), batched for memory.
RealMatrix encode_dataset(const EncoderParams& params, const Dataset& data,
                          Index batch_size = 512);

/// Predicted probabilities (N x C) for a whole dataset.
RealMatrix score_dataset(LossKind kind, const EncoderParams& params,
                         const Dataset& data, Index batch_size = 512);

double selection_metric_value(SelectionMetric metric, const RealMatrix& scores,
                              const RealMatrix& labels);

struct GridCell {
  double lambda = 0.0;
  Index batch_size = 0;
  std::uint64_t seed = 0;
  TrainResult result;
};

struct GridSearchResult {
  std::vector<GridCell> cells;
  std::size_t best_index = 0;
};

/// One training run per (lambda, batch) cell with a deterministically derived
/// seed per cell; the best cell is the validation-metric argmax with ties
/// broken toward smaller lambda, then smaller batch size.
GridSearchResult grid_search(const TrainConfig& base,
                             const EncoderConfig& enc_cfg,
                             const std::vector<double>& lambda_grid,
                             const std::vector<Index>& batch_grid,
                             const Dataset& train_data, const Dataset& val_data);

}  // namespace seqcl
