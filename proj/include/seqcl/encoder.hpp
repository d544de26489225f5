#pragma once

#include "seqcl/losses.hpp"
#include "seqcl/numerics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace seqcl {

struct EncoderConfig {
  Index input_dim = 1;        ///< D, features per timestep
  Index hidden_dim = 16;      ///< H, embedding width
  Index num_layers = 1;       ///< stacked recurrent layers
  double dropout_rate = 0.3;  ///< applied between stacked layers, [0, 1)
  Index static_dim = 0;       ///< D_S; 0 disables the static-feature head
};

/// One recurrent layer. Gate rows are stacked [input; forget; cell; output],
/// so every weight block is 4H tall.
struct LstmLayer {
  RealMatrix w_input;  // 4H x D_in
  RealMatrix w_recur;  // 4H x H
  RealVector bias;     // 4H
};

/// Everything the optimizer updates: recurrent layers, the optional static
/// projection, and the anchor head consumed by the losses.
struct EncoderParams {
  EncoderConfig cfg;
  Index num_classes = 1;
  std::vector<LstmLayer> layers;
  RealMatrix w_static;  // H x D_S (0 x 0 when static_dim == 0)
  AnchorSet anchors;    // U, V each C x H
};

/// Flat view over one parameter block; the block order is fixed and shared by
/// the optimizer, checkpoints, and gradient containers.
struct ParamView {
  double* data = nullptr;
  Index size = 0;
};

std::vector<ParamView> param_views(EncoderParams& params);
std::vector<ParamView> param_views(const EncoderParams& params);
Index param_count(const EncoderConfig& cfg, Index num_classes);

/// Same shapes as `like`, every entry zero. Used as a gradient container.
EncoderParams zeros_like(const EncoderParams& like);

/// A mini-batch of padded sequences. steps[t] is N x D; entries of steps[t]
/// beyond a sample's length are never read.
struct SequenceBatch {
  std::vector<RealMatrix> steps;
  std::vector<Index> lengths;
  RealMatrix statics;  // N x D_S, or 0 x 0

  Index rows() const { return lengths.empty() ? 0 : static_cast<Index>(lengths.size()); }
  Index max_len() const { return static_cast<Index>(steps.size()); }
};

/** Seeded initialization: all weights (anchors included) uniform in
 *  [-1/sqrt(H), 1/sqrt(H)], forget-gate bias 1. Identical (cfg, num_classes,
 *  seed) gives bit-identical parameters.
 */
EncoderParams init_params(const EncoderConfig& cfg, Index num_classes,
                          std::uint64_t seed);

/// Forward activations kept for backpropagation through time.
struct EncoderCache {
  bool training = false;
  std::uint64_t dropout_seed = 0;
  // Per layer: inputs after dropout (T entries of N x D_in), gate activations
  // and cell states (T entries of N x H each).
  std::vector<std::vector<RealMatrix>> inputs, gate_i, gate_f, gate_g, gate_o,
      cell, cell_tanh, hidden;
};

/** Maps a batch to embeddings Z (N x H): the top layer's hidden state at each
 *  sample's last valid timestep, plus the static projection when configured.
 *  Dropout between stacked layers is active only when training is true and is
 *  fully determined by dropout_seed (inverted dropout, so inference needs no
 *  rescaling).
 */
RealMatrix encode(const EncoderParams& params, const SequenceBatch& batch,
                  bool training, std::uint64_t dropout_seed);

/// encode() that also fills the cache needed by the cached backward pass.
RealMatrix encode_forward(const EncoderParams& params,
                          const SequenceBatch& batch, bool training,
                          std::uint64_t dropout_seed, EncoderCache& cache);

/// Exact gradients of every parameter via full BPTT over each true length.
/// Anchor gradients are not produced here (they come from the loss) and are
/// returned as zeros. Must be called with the forward pass's dropout seed.
EncoderParams encode_backward(const EncoderParams& params,
                              const SequenceBatch& batch,
                              const RealMatrix& grad_Z, bool training,
                              std::uint64_t dropout_seed);

/// Backward pass reusing a cache from encode_forward.
EncoderParams encode_backward(const EncoderParams& params,
                              const SequenceBatch& batch,
                              const EncoderCache& cache,
                              const RealMatrix& grad_Z);

/// Versioned binary checkpoint; load is bit-exact.
void save_checkpoint(const std::string& path, const EncoderParams& params);
EncoderParams load_checkpoint(const std::string& path);

}  // namespace seqcl
