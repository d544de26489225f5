#include "seqcl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace seqcl {

namespace {

void check_batch(const BatchEmbeddings& emb, const AnchorSet& anchors) {
  const Index n = emb.Z.rows();
  const Index h = emb.Z.cols();
  const Index c = emb.labels.cols();
  if (n < 1 || h < 1 || c < 1) {
    throw ValidationError("loss: empty batch, embedding, or label dimension");
  }
  if (emb.labels.rows() != n) {
    throw ValidationError("loss: labels have " +
                          std::to_string(emb.labels.rows()) + " rows, Z has " +
                          std::to_string(n));
  }
  if (anchors.U.rows() != c || anchors.U.cols() != h ||
      anchors.V.rows() != anchors.U.rows() ||
      anchors.V.cols() != anchors.U.cols()) {
    throw ValidationError("loss: anchor shapes do not match (C=" +
                          std::to_string(c) + ", H=" + std::to_string(h) +
                          ")");
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < c; ++j) {
      const double y = emb.labels(i, j);
      if (y != 0.0 && y != 1.0) {
        throw ValidationError("loss: label entry (" + std::to_string(i) + "," +
                              std::to_string(j) + ") is not 0 or 1");
      }
    }
  }
}

}  // namespace

LossOutput bce_loss(const BatchEmbeddings& emb, const AnchorSet& anchors) {
  check_batch(emb, anchors);
  const Index n = emb.Z.rows();
  const Index c = emb.labels.cols();
  const double scale = 1.0 / static_cast<double>(c * n);

  const RealMatrix logits = emb.Z * anchors.U.transpose();  // N x C

  LossOutput out;
  double acc = 0.0;
  RealMatrix grad_logits(n, c);  // d(mean loss)/d(u_c . z_i)
  for (Index j = 0; j < c; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double a = logits(i, j);
      const double y = emb.labels(i, j);
      acc -= y * log_sigmoid(a) + (1.0 - y) * log_sigmoid(-a);
      grad_logits(i, j) = (sigmoid(a) - y) * scale;
    }
  }
  out.value = acc * scale;
  out.grad_Z = grad_logits * anchors.U;
  out.grad_U = grad_logits.transpose() * emb.Z;
  out.grad_V = RealMatrix::Zero(anchors.V.rows(), anchors.V.cols());
  return out;
}

LossOutput cbce_loss(const BatchEmbeddings& emb, const AnchorSet& anchors) {
  check_batch(emb, anchors);
  const Index n = emb.Z.rows();
  const Index c = emb.labels.cols();
  const double scale = 1.0 / static_cast<double>(c * n);

  const RealMatrix a = emb.Z * anchors.U.transpose();  // u_c . z_i
  const RealMatrix b = emb.Z * anchors.V.transpose();  // v_c . z_i

  LossOutput out;
  double acc = 0.0;
  RealMatrix grad_a(n, c);
  RealMatrix grad_b(n, c);
  for (Index j = 0; j < c; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double y = emb.labels(i, j);
      // -log of the sigmoid product, as a sum of log-sigmoid terms.
      acc -= y * (log_sigmoid(a(i, j)) + log_sigmoid(-b(i, j))) +
             (1.0 - y) * (log_sigmoid(b(i, j)) + log_sigmoid(-a(i, j)));
      grad_a(i, j) = (sigmoid(a(i, j)) - y) * scale;
      grad_b(i, j) = (sigmoid(b(i, j)) - (1.0 - y)) * scale;
    }
  }
  out.value = acc * scale;
  out.grad_Z = grad_a * anchors.U + grad_b * anchors.V;
  out.grad_U = grad_a.transpose() * emb.Z;
  out.grad_V = grad_b.transpose() * emb.Z;
  return out;
}

LossOutput csce_loss(const BatchEmbeddings& emb, const AnchorSet& anchors) {
  check_batch(emb, anchors);
  const Index n = emb.Z.rows();
  const Index c = emb.labels.cols();
  const double scale = 1.0 / static_cast<double>(c * n);

  const RealMatrix a = emb.Z * anchors.U.transpose();
  const RealMatrix b = emb.Z * anchors.V.transpose();

  LossOutput out;
  double acc = 0.0;
  RealMatrix grad_a(n, c);
  RealMatrix grad_b(n, c);
  for (Index j = 0; j < c; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double y = emb.labels(i, j);
      const double d = b(i, j) - a(i, j);
      // -log softmax over the pair: logsumexp(a, b) - chosen logit.
      acc += y * softplus(d) + (1.0 - y) * softplus(-d);
      const double p_u = sigmoid(-d);  // exp(a) / (exp(a) + exp(b))
      grad_a(i, j) = (p_u - y) * scale;
      grad_b(i, j) = ((1.0 - p_u) - (1.0 - y)) * scale;
    }
  }
  out.value = acc * scale;
  out.grad_Z = grad_a * anchors.U + grad_b * anchors.V;
  out.grad_U = grad_a.transpose() * emb.Z;
  out.grad_V = grad_b.transpose() * emb.Z;
  return out;
}

ScrOutput scr_loss(const RealMatrix& Z, const RealVector& labels_c,
                   double tau) {
  const Index n = Z.rows();
  if (n < 2) {
    throw ValidationError("scr_loss: needs at least 2 samples, got " +
                          std::to_string(n));
  }
  if (labels_c.size() != n) {
    throw ValidationError("scr_loss: label vector length " +
                          std::to_string(labels_c.size()) + " != N " +
                          std::to_string(n));
  }
  if (!(tau > 0.0)) {
    throw ValidationError("scr_loss: tau must be positive");
  }
  for (Index i = 0; i < n; ++i) {
    if (labels_c[i] != 0.0 && labels_c[i] != 1.0) {
      throw ValidationError("scr_loss: label entry " + std::to_string(i) +
                            " is not 0 or 1");
    }
  }

  const RealVector norms = Z.rowwise().norm();
  for (Index i = 0; i < n; ++i) {
    if (norms[i] == 0.0) {
      throw ValidationError("scr_loss: zero-norm (degenerate) embedding row " +
                            std::to_string(i));
    }
  }
  RealMatrix zn = Z;
  for (Index i = 0; i < n; ++i) {
    zn.row(i) /= norms[i];
  }

  // Pairwise cosine similarities, clamped against rounding drift.
  RealMatrix sim = zn * zn.transpose();
  sim = sim.cwiseMax(-1.0).cwiseMin(1.0);

  // Same-label counts N_i (including i itself).
  const double n_pos = labels_c.sum();
  std::vector<double> same_count(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    same_count[static_cast<std::size_t>(i)] =
        labels_c[i] == 1.0 ? n_pos : static_cast<double>(n) - n_pos;
  }

  // Row-wise log-sum-exp and softmax over k != i.
  RealVector lse(n);
  RealMatrix prob(n, n);
  for (Index i = 0; i < n; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (Index k = 0; k < n; ++k) {
      if (k != i) {
        m = std::max(m, sim(i, k) / tau);
      }
    }
    double acc = 0.0;
    for (Index k = 0; k < n; ++k) {
      if (k != i) {
        acc += std::exp(sim(i, k) / tau - m);
      }
    }
    lse[i] = m + std::log(acc);
    for (Index k = 0; k < n; ++k) {
      prob(i, k) = k == i ? 0.0 : std::exp(sim(i, k) / tau - lse[i]);
    }
  }

  // Value and the per-pair coefficients dL/d sim(i, j).
  double value = 0.0;
  RealMatrix coef = RealMatrix::Zero(n, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Index i = 0; i < n; ++i) {
    const double members = same_count[static_cast<std::size_t>(i)];
    if (members < 2.0) {
      continue;  // singleton label in batch: no positive pair, skipped
    }
    const double w = 1.0 / (members - 1.0);
    double pos_sum = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) {
        continue;
      }
      const bool same = labels_c[j] == labels_c[i];
      if (same) {
        pos_sum += sim(i, j) / tau;
      }
      coef(i, j) = inv_n / tau * (prob(i, j) - (same ? w : 0.0));
    }
    value += inv_n * (lse[i] - w * pos_sum);
  }

  // Chain through the cosine normalization:
  //   d sim(i,j)/d z_i = (zn_j - sim(i,j) zn_i) / |z_i|,
  // with sim(i,j) appearing once for outer index i and once for outer j.
  const RealMatrix sym = coef + coef.transpose();
  const RealVector row_dot = (sym.array() * sim.array()).rowwise().sum();
  RealMatrix grad = sym * zn;
  for (Index i = 0; i < n; ++i) {
    grad.row(i) -= row_dot[i] * zn.row(i);
    grad.row(i) /= norms[i];
  }

  ScrOutput out;
  out.value = value;
  out.grad_Z = std::move(grad);
  return out;
}

LossOutput combined_loss(const LossConfig& cfg, const BatchEmbeddings& emb,
                         const AnchorSet& anchors) {
  if (cfg.lambda < 0.0) {
    throw ValidationError("combined_loss: lambda must be non-negative");
  }
  if (!(cfg.tau > 0.0)) {
    throw ValidationError("combined_loss: tau must be positive");
  }

  LossOutput out;
  switch (cfg.kind) {
    case LossKind::Bce:
    case LossKind::BceScr:
      out = bce_loss(emb, anchors);
      break;
    case LossKind::CbceScr:
      out = cbce_loss(emb, anchors);
      break;
    case LossKind::CsceScr:
      out = csce_loss(emb, anchors);
      break;
  }
  if (cfg.kind == LossKind::Bce || cfg.lambda == 0.0) {
    return out;
  }

  const Index c = emb.labels.cols();
  double scr_sum = 0.0;
  RealMatrix scr_grad = RealMatrix::Zero(emb.Z.rows(), emb.Z.cols());
  for (Index j = 0; j < c; ++j) {
    const ScrOutput scr = scr_loss(emb.Z, emb.labels.col(j), cfg.tau);
    scr_sum += scr.value;
    scr_grad += scr.grad_Z;
  }
  const double inv_c = 1.0 / static_cast<double>(c);
  out.value += cfg.lambda * (scr_sum * inv_c);
  out.grad_Z += cfg.lambda * inv_c * scr_grad;
  return out;
}

double predict_proba(LossKind kind, const RealVector& z, const RealVector& u_c,
                     const RealVector& v_c) {
  if (z.size() != u_c.size() || z.size() != v_c.size()) {
    throw ValidationError("predict_proba: length mismatch");
  }
  const double a = u_c.dot(z);
  const double b = v_c.dot(z);
  switch (kind) {
    case LossKind::Bce:
    case LossKind::BceScr:
      return sigmoid(a);
    case LossKind::CbceScr:
      // sig(a) / (sig(a) + sig(b)) evaluated in log space so the ratio stays
      // defined even when both sigmoids underflow.
      return sigmoid(log_sigmoid(a) - log_sigmoid(b));
    case LossKind::CsceScr:
      return sigmoid(a - b);
  }
  throw ValidationError("predict_proba: unknown loss kind");
}

RealMatrix predict_scores(LossKind kind, const RealMatrix& Z,
                          const AnchorSet& anchors) {
  const Index n = Z.rows();
  const Index c = anchors.U.rows();
  RealMatrix scores(n, c);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < c; ++j) {
      scores(i, j) = predict_proba(kind, Z.row(i).transpose(),
                                   anchors.U.row(j).transpose(),
                                   anchors.V.row(j).transpose());
    }
  }
  return scores;
}

}  // namespace seqcl
