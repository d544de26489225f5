#include "seqcl/metrics.hpp"

#include "seqcl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

namespace seqcl {

namespace {

void check_scored(const ScoredLabels& sl) {
  if (sl.scores.size() != static_cast<Index>(sl.labels.size())) {
    throw ValidationError("metrics: scores and labels differ in length");
  }
  if (sl.labels.empty()) {
    throw ValidationError("metrics: empty input");
  }
  for (Index i = 0; i < sl.scores.size(); ++i) {
    if (!(sl.scores[i] >= 0.0 && sl.scores[i] <= 1.0)) {
      throw ValidationError("metrics: score " + std::to_string(i) +
                            " outside [0, 1]");
    }
    const int y = sl.labels[static_cast<std::size_t>(i)];
    if (y != 0 && y != 1) {
      throw ValidationError("metrics: label " + std::to_string(i) +
                            " is not 0 or 1");
    }
  }
}

long long count_positives(const ScoredLabels& sl) {
  return std::count(sl.labels.begin(), sl.labels.end(), 1);
}

/// Indices sorted by descending score, ties grouped; calls fn(group_begin,
/// group_end, tp_after, fp_after) once per distinct threshold.
template <typename Fn>
void walk_thresholds(const ScoredLabels& sl, Fn&& fn) {
  const std::size_t n = sl.labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sl.scores[static_cast<Index>(a)] > sl.scores[static_cast<Index>(b)];
  });
  long long tp = 0;
  long long fp = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && sl.scores[static_cast<Index>(order[j])] ==
                        sl.scores[static_cast<Index>(order[i])]) {
      tp += sl.labels[order[j]];
      fp += 1 - sl.labels[order[j]];
      ++j;
    }
    fn(tp, fp);
    i = j;
  }
}

}  // namespace

double auroc(const ScoredLabels& sl) {
  check_scored(sl);
  const std::size_t n = sl.labels.size();
  const long long n_pos = count_positives(sl);
  const long long n_neg = static_cast<long long>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw UndefinedMetricError("auroc: needs both classes present");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sl.scores[static_cast<Index>(a)] < sl.scores[static_cast<Index>(b)];
  });

  // Average ranks over tie groups; rank sums are exact in doubles.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    long long group_pos = 0;
    while (j < n && sl.scores[static_cast<Index>(order[j])] ==
                        sl.scores[static_cast<Index>(order[i])]) {
      group_pos += sl.labels[order[j]];
      ++j;
    }
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    pos_rank_sum += avg_rank * static_cast<double>(group_pos);
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) /
         (np * static_cast<double>(n_neg));
}

double auprc(const ScoredLabels& sl) {
  check_scored(sl);
  const long long n_pos = count_positives(sl);
  if (n_pos == 0) {
    throw UndefinedMetricError("auprc: needs at least one positive");
  }
  double area = 0.0;
  double prev_recall = 0.0;
  walk_thresholds(sl, [&](long long tp, long long fp) {
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision =
        static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  });
  return area;
}

double accuracy(const ScoredLabels& sl, double threshold) {
  check_scored(sl);
  long long correct = 0;
  for (Index i = 0; i < sl.scores.size(); ++i) {
    const int pred = sl.scores[i] >= threshold ? 1 : 0;
    correct += pred == sl.labels[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(sl.labels.size());
}

double min_se_pplus(const ScoredLabels& sl) {
  check_scored(sl);
  const long long n_pos = count_positives(sl);
  if (n_pos == 0) {
    throw UndefinedMetricError("min_se_pplus: needs at least one positive");
  }
  double best = 0.0;
  walk_thresholds(sl, [&](long long tp, long long fp) {
    const double se = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double pp = static_cast<double>(tp) / static_cast<double>(tp + fp);
    best = std::max(best, std::min(se, pp));
  });
  return best;
}

MultilabelAuroc multilabel_aurocs(const std::vector<ScoredLabels>& per_class) {
  if (per_class.empty()) {
    throw ValidationError("multilabel_aurocs: no classes");
  }
  MultilabelAuroc out;
  std::vector<double> class_auroc;
  std::vector<double> class_support;
  ScoredLabels flat;
  std::size_t total = 0;
  for (const ScoredLabels& sl : per_class) {
    total += sl.labels.size();
  }
  flat.scores.resize(static_cast<Index>(total));
  flat.labels.reserve(total);
  Index cursor = 0;

  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const ScoredLabels& sl = per_class[c];
    check_scored(sl);
    flat.scores.segment(cursor, sl.scores.size()) = sl.scores;
    cursor += sl.scores.size();
    flat.labels.insert(flat.labels.end(), sl.labels.begin(), sl.labels.end());

    const long long n_pos = count_positives(sl);
    const long long n_neg = static_cast<long long>(sl.labels.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0) {
      out.degenerate_classes.push_back(static_cast<Index>(c));
      continue;
    }
    class_auroc.push_back(auroc(sl));
    class_support.push_back(static_cast<double>(n_pos));
  }
  if (class_auroc.empty()) {
    throw UndefinedMetricError("multilabel_aurocs: every class is degenerate");
  }

  out.micro = auroc(flat);
  out.macro = std::accumulate(class_auroc.begin(), class_auroc.end(), 0.0) /
              static_cast<double>(class_auroc.size());
  const double support_sum =
      std::accumulate(class_support.begin(), class_support.end(), 0.0);
  double weighted = 0.0;
  for (std::size_t c = 0; c < class_auroc.size(); ++c) {
    weighted += class_auroc[c] * class_support[c] / support_sum;
  }
  out.weighted = weighted;
  return out;
}

double compute_metric(MetricKind kind, const ScoredLabels& sl) {
  switch (kind) {
    case MetricKind::Auroc:
      return auroc(sl);
    case MetricKind::Auprc:
      return auprc(sl);
    case MetricKind::Accuracy:
      return accuracy(sl);
    case MetricKind::MinSePplus:
      return min_se_pplus(sl);
  }
  throw ValidationError("compute_metric: unknown metric kind");
}

double bootstrap_std(const ScoredLabels& sl, MetricKind kind, int k,
                     std::uint64_t seed) {
  check_scored(sl);
  if (k < 2) {
    throw ValidationError("bootstrap_std: k must be >= 2");
  }
  const std::size_t n = sl.labels.size();
  constexpr int kMaxRetries = 1000;

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(k));
  for (int r = 0; r < k; ++r) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    bool done = false;
    for (int attempt = 0; attempt < kMaxRetries && !done; ++attempt) {
      ScoredLabels resample;
      resample.scores.resize(static_cast<Index>(n));
      resample.labels.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(n));
        resample.scores[static_cast<Index>(i)] =
            sl.scores[static_cast<Index>(j)];
        resample.labels[i] = sl.labels[j];
      }
      try {
        values.push_back(compute_metric(kind, resample));
        done = true;
      } catch (const UndefinedMetricError&) {
        // degenerate resample: redraw
      }
    }
    if (!done) {
      throw RuntimeFailure(
          "bootstrap_std: could not draw a non-degenerate resample");
    }
  }

  const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                      static_cast<double>(k);
  double ssq = 0.0;
  for (double v : values) {
    ssq += (v - mean) * (v - mean);
  }
  return std::sqrt(ssq / static_cast<double>(k - 1));
}

double MetricsReport::get(const std::string& name) const {
  for (const MetricEntry& e : entries) {
    if (e.name == name) {
      return e.value;
    }
  }
  throw ValidationError("MetricsReport: no metric named " + name);
}

std::string MetricsReport::to_csv() const {
  std::string out = "metric,value,std\n";
  char buf[64];
  for (const MetricEntry& e : entries) {
    out += e.name;
    std::snprintf(buf, sizeof(buf), ",%.10g", e.value);
    out += buf;
    if (e.std_dev.has_value()) {
      std::snprintf(buf, sizeof(buf), ",%.10g", *e.std_dev);
      out += buf;
    } else {
      out += ",";
    }
    out += "\n";
  }
  return out;
}

}  // namespace seqcl
