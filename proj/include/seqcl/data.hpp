#pragma once

#include "seqcl/numerics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace seqcl {

/// One variable-length multivariate time series with optional static features
/// and a C-dimensional binary label vector.
struct SequenceSample {
  std::string id;
  RealMatrix series;   // T_i x D
  RealVector statics;  // D_S, empty when unused
  RealVector labels;   // C, entries in {0, 1}
};

struct Dataset {
  std::vector<SequenceSample> samples;
  Index feature_dim = 0;
  Index static_dim = 0;
  Index num_classes = 0;

  Index size() const { return static_cast<Index>(samples.size()); }
};

/// Uniform dims, lengths >= 1, binary labels. Throws ValidationError.
void validate(const Dataset& data);

/// Fraction of samples with label 1 in the given class column.
double positive_ratio(const Dataset& data, Index class_idx);

/// FNV-1a over a canonical byte serialization; used to certify that a test
/// set is shared across experiment cells.
std::uint64_t dataset_hash(const Dataset& data);

struct SyntheticSpec {
  Index n_samples = 0;
  Index feature_dim = 76;
  Index t_min = 8;
  Index t_max = 16;
  Index num_classes = 1;
  std::vector<double> pos_ratio = {0.5};  ///< one entry, or one per class
  double separation = 1.0;  ///< scales the label-dependent latent drift
  std::uint64_t seed = 0;
};

/** Class-conditional linear dynamical system generator.
 *
 *  Each sample follows latent dynamics h_{t+1} = A h_t + drift + noise with a
 *  drift direction per class, signed by the label and scaled by `separation`,
 *  observed through a fixed random projection plus observation noise. The
 *  spectral radius of A is kept below 1. Per class the realized positive
 *  count is exactly round(n * pos_ratio). Identical specs generate
 *  bit-identical datasets.
 */
Dataset generate_synthetic(const SyntheticSpec& spec);

/** Keeps every negative of the given class and subsamples positives without
 *  replacement to p = round(target_ratio * n_neg / (1 - target_ratio)), the
 *  count that puts the realized ratio within one sample of the target.
 */
Dataset downsample_positives(const Dataset& data, Index class_idx,
                             double target_ratio, std::uint64_t seed);

/// Series CSV `id,t,f1..fD`, labels CSV `id,y1..yC`, optional static CSV
/// `id,s1..sD_S`. Values round-trip bit-exactly through save and load.
Dataset load_csv(const std::string& series_path, const std::string& labels_path,
                 const std::optional<std::string>& static_path = std::nullopt);

void save_csv(const Dataset& data, const std::string& series_path,
              const std::string& labels_path,
              const std::optional<std::string>& static_path = std::nullopt);

struct SplitFractions {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Seeded shuffle plus partition. With stratify_class set, each split's
/// positive count for that class is within one sample of proportional.
Splits split(const Dataset& data, const SplitFractions& fractions,
             std::optional<Index> stratify_class, std::uint64_t seed);

}  // namespace seqcl
