#pragma once

// Test-only oracles: brute-force metric computations and finite-difference
// gradient checks, kept independent of the library's analytic paths.

#include "seqcl/losses.hpp"
#include "seqcl/metrics.hpp"
#include "seqcl/numerics.hpp"
#include "seqcl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <set>
#include <vector>

namespace seqcl::testing {

/// Bitwise equality of two matrices (shape and every byte).
inline bool bits_equal(const RealMatrix& a, const RealMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(),
                     sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

inline double rel_err(double analytic, double numeric, double floor = 1e-3) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Max relative error between an analytic gradient block and central finite
/// differences of `value_fn`, perturbing `block` in place.
inline double max_grad_err(const RealMatrix& analytic, RealMatrix& block,
                           const std::function<double()>& value_fn,
                           double step = 1e-6) {
  double worst = 0.0;
  for (Index r = 0; r < block.rows(); ++r) {
    for (Index c = 0; c < block.cols(); ++c) {
      const double orig = block(r, c);
      block(r, c) = orig + step;
      const double hi = value_fn();
      block(r, c) = orig - step;
      const double lo = value_fn();
      block(r, c) = orig;
      const double numeric = (hi - lo) / (2.0 * step);
      worst = std::max(worst, rel_err(analytic(r, c), numeric));
    }
  }
  return worst;
}

struct RandomLossInstance {
  BatchEmbeddings emb;
  AnchorSet anchors;
};

inline RandomLossInstance random_loss_instance(Rng& rng, Index n, Index h,
                                               Index c) {
  RandomLossInstance inst;
  inst.emb.Z.resize(n, h);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < h; ++j) {
      inst.emb.Z(i, j) = rng.normal();
    }
  }
  inst.emb.labels.resize(n, c);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < c; ++j) {
      inst.emb.labels(i, j) = rng.uniform01() < 0.5 ? 0.0 : 1.0;
    }
  }
  inst.anchors.U.resize(c, h);
  inst.anchors.V.resize(c, h);
  for (Index i = 0; i < c; ++i) {
    for (Index j = 0; j < h; ++j) {
      inst.anchors.U(i, j) = rng.normal();
      inst.anchors.V(i, j) = rng.normal();
    }
  }
  return inst;
}

/// Worst relative FD error over Z, U, and V for one loss function.
inline double loss_grad_check(
    const std::function<LossOutput(const BatchEmbeddings&, const AnchorSet&)>& loss,
    RandomLossInstance inst, double step = 1e-6) {
  const LossOutput out = loss(inst.emb, inst.anchors);
  const auto value = [&]() { return loss(inst.emb, inst.anchors).value; };
  double worst = max_grad_err(out.grad_Z, inst.emb.Z, value, step);
  worst = std::max(worst, max_grad_err(out.grad_U, inst.anchors.U, value, step));
  worst = std::max(worst, max_grad_err(out.grad_V, inst.anchors.V, value, step));
  return worst;
}

// ---- brute-force metric oracles --------------------------------------------

/// AUROC by direct O(N^2) pair counting with half credit for ties.
inline double auroc_pairwise(const ScoredLabels& sl) {
  double wins = 0.0;
  long long pairs = 0;
  for (std::size_t i = 0; i < sl.labels.size(); ++i) {
    if (sl.labels[i] != 1) continue;
    for (std::size_t j = 0; j < sl.labels.size(); ++j) {
      if (sl.labels[j] != 0) continue;
      ++pairs;
      const double sp = sl.scores[static_cast<Index>(i)];
      const double sn = sl.scores[static_cast<Index>(j)];
      if (sp > sn) {
        wins += 1.0;
      } else if (sp == sn) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

/// Average precision by recounting TP/FP from scratch at every distinct
/// threshold, descending.
inline double auprc_threshold_scan(const ScoredLabels& sl) {
  std::set<double, std::greater<double>> thresholds(
      sl.scores.data(), sl.scores.data() + sl.scores.size());
  long long n_pos = 0;
  for (int y : sl.labels) {
    n_pos += y;
  }
  double area = 0.0;
  double prev_recall = 0.0;
  for (double th : thresholds) {
    long long tp = 0;
    long long fp = 0;
    for (std::size_t i = 0; i < sl.labels.size(); ++i) {
      if (sl.scores[static_cast<Index>(i)] >= th) {
        tp += sl.labels[i];
        fp += 1 - sl.labels[i];
      }
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision =
        static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

/// max over distinct-score thresholds of min(sensitivity, precision),
/// recounted from scratch per threshold.
inline double min_se_pplus_scan(const ScoredLabels& sl) {
  std::set<double> thresholds(sl.scores.data(),
                              sl.scores.data() + sl.scores.size());
  long long n_pos = 0;
  for (int y : sl.labels) {
    n_pos += y;
  }
  double best = 0.0;
  for (double th : thresholds) {
    long long tp = 0;
    long long fp = 0;
    for (std::size_t i = 0; i < sl.labels.size(); ++i) {
      if (sl.scores[static_cast<Index>(i)] >= th) {
        tp += sl.labels[i];
        fp += 1 - sl.labels[i];
      }
    }
    const double se = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double pp = static_cast<double>(tp) / static_cast<double>(tp + fp);
    best = std::max(best, std::min(se, pp));
  }
  return best;
}

/// Random scored labels; with make_ties, scores come from a coarse grid so
/// tie handling is exercised.
inline ScoredLabels random_scored(Rng& rng, Index n, bool make_ties,
                                  bool ensure_both_classes = true) {
  ScoredLabels sl;
  sl.scores.resize(n);
  sl.labels.resize(static_cast<std::size_t>(n));
  for (;;) {
    for (Index i = 0; i < n; ++i) {
      double s = rng.uniform01();
      if (make_ties) {
        s = std::floor(s * 5.0) / 4.0;
        s = std::min(s, 1.0);
      }
      sl.scores[i] = s;
      sl.labels[static_cast<std::size_t>(i)] = rng.uniform01() < 0.5 ? 0 : 1;
    }
    if (!ensure_both_classes) {
      return sl;
    }
    const long long pos =
        std::count(sl.labels.begin(), sl.labels.end(), 1);
    if (pos > 0 && pos < static_cast<long long>(sl.labels.size())) {
      return sl;
    }
  }
}

}  // namespace seqcl::testing
