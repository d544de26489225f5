#pragma once

#include "seqcl/numerics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace seqcl {

/// Predicted probabilities paired with ground-truth binary labels.
struct ScoredLabels {
  RealVector scores;        // in [0, 1]
  std::vector<int> labels;  // in {0, 1}
};

/// Raised when a ranking metric is requested on single-class data.
class UndefinedMetricError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Area under the ROC curve as the Mann-Whitney statistic
/// P(score_pos > score_neg) + P(tie)/2, via average ranks in O(N log N).
double auroc(const ScoredLabels& sl);

/// Area under the precision-recall step curve (average precision): sum of
/// precision times recall increment over descending thresholds, ties grouped.
double auprc(const ScoredLabels& sl);

/// Fraction of samples with (score >= threshold) == label.
double accuracy(const ScoredLabels& sl, double threshold = 0.5);

/// Max over thresholds (at distinct score values) of min(sensitivity,
/// precision) -- the single-number summary of the PR curve.
double min_se_pplus(const ScoredLabels& sl);

struct MultilabelAuroc {
  double micro = 0.0;     ///< auroc over all (sample, class) pairs flattened
  double macro = 0.0;     ///< unweighted mean of per-class aurocs
  double weighted = 0.0;  ///< positive-support-weighted mean of per-class aurocs
  std::vector<Index> degenerate_classes;  ///< single-label classes, excluded
                                          ///< from macro and weighted
};

MultilabelAuroc multilabel_aurocs(const std::vector<ScoredLabels>& per_class);

enum class MetricKind { Auroc, Auprc, Accuracy, MinSePplus };

double compute_metric(MetricKind kind, const ScoredLabels& sl);

/// Sample standard deviation of the metric over k seeded with-replacement
/// resamples. Resamples on which the metric is undefined are redrawn (bounded
/// retries) so exactly k values enter the estimate.
double bootstrap_std(const ScoredLabels& sl, MetricKind kind, int k,
                     std::uint64_t seed);

struct MetricEntry {
  std::string name;
  double value = 0.0;
  std::optional<double> std_dev;
};

/// Ordered set of named metric values; serializes to `metric,value,std` CSV.
struct MetricsReport {
  std::vector<MetricEntry> entries;

  void add(const std::string& name, double value,
           std::optional<double> std_dev = std::nullopt) {
    entries.push_back({name, value, std_dev});
  }
  double get(const std::string& name) const;
  std::string to_csv() const;
};

}  // namespace seqcl
