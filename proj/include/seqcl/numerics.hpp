#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace seqcl {

// Dense containers shared by all modules. Row-major so a sample's embedding
// (a matrix row) is contiguous in memory.
using RealMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Invalid configuration, shapes, or data. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure while a run is in progress (non-finite loss, exhausted retries,
/// I/O). The CLI maps this to exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/** Numerically stable 1 / (1 + exp(-x)).
 *
 *  The exponential is always taken of a non-positive argument, so the result
 *  saturates to 0 or 1 at the extremes instead of overflowing.
 */
inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Stable log(1 + exp(x)) = max(x, 0) + log1p(exp(-|x|)).
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

/// log(sigmoid(x)) = -softplus(-x), finite for the whole double range.
inline double log_sigmoid(double x) { return -softplus(-x); }

/// Max-shifted log(sum(exp(xs))). Exact for a single element.
inline double logsumexp(const RealVector& xs) {
  if (xs.size() == 0) {
    throw ValidationError("logsumexp: empty input");
  }
  if (xs.size() == 1) {
    return xs[0];
  }
  const double m = xs.maxCoeff();
  double acc = 0.0;
  for (Index i = 0; i < xs.size(); ++i) {
    acc += std::exp(xs[i] - m);
  }
  return m + std::log(acc);
}

/** Cosine similarity a.b / (|a||b|), clamped to [-1, 1] so that downstream
 *  exp(sim / tau) never sees an out-of-range value from rounding.
 *
 *  A zero-norm argument signals a collapsed embedding and is rejected rather
 *  than silently mapped to 0.
 */
inline double cosine_sim(const RealVector& a, const RealVector& b) {
  if (a.size() != b.size()) {
    throw ValidationError("cosine_sim: length mismatch (" +
                          std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw ValidationError("cosine_sim: zero-norm (degenerate) embedding");
  }
  const double s = a.dot(b) / (na * nb);
  return std::clamp(s, -1.0, 1.0);
}

}  // namespace seqcl
