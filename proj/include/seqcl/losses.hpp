#pragma once

#include "seqcl/numerics.hpp"

namespace seqcl {

/// Encoder outputs for one mini-batch together with the binary labels the
/// losses contrast against. Z is N x H, labels is N x C with entries in {0,1}.
struct BatchEmbeddings {
  RealMatrix Z;
  RealMatrix labels;
};

/// One learned positive anchor and one learned negative anchor per class,
/// stored as rows: U and V are both C x H.
struct AnchorSet {
  RealMatrix U;
  RealMatrix V;
};

enum class LossKind {
  Bce,      ///< plain binary cross entropy against the positive anchor
  BceScr,   ///< BCE plus the batch-wise contrastive regularizer
  CbceScr,  ///< contrastive BCE (product of sigmoids) plus regularizer
  CsceScr,  ///< contrastive softmax CE (two-way softmax) plus regularizer
};

struct LossConfig {
  LossKind kind = LossKind::Bce;
  double lambda = 0.0;  ///< regularizer weight, >= 0
  double tau = 0.1;     ///< regularizer temperature, > 0
};

/// Mean loss over the batch plus exact analytic gradients for every block.
struct LossOutput {
  double value = 0.0;
  RealMatrix grad_Z;  // N x H
  RealMatrix grad_U;  // C x H
  RealMatrix grad_V;  // C x H
};

struct ScrOutput {
  double value = 0.0;
  RealMatrix grad_Z;  // N x H
};

/// Mean BCE over all (sample, class) pairs with logits u_c . z_i.
/// Only U is used; grad_V is returned as zeros.
LossOutput bce_loss(const BatchEmbeddings& emb, const AnchorSet& anchors);

/// Contrastive BCE: each sample is scored against both anchors in a product
/// of sigmoids, evaluated as a sum of log-sigmoid terms so nothing underflows.
LossOutput cbce_loss(const BatchEmbeddings& emb, const AnchorSet& anchors);

/// Contrastive softmax CE: two-way softmax over {u_c . z_i, v_c . z_i},
/// evaluated through the pairwise log-sum-exp.
LossOutput csce_loss(const BatchEmbeddings& emb, const AnchorSet& anchors);

/** Batch-wise supervised contrastive regularizer over cosine similarities at
 *  temperature tau, for a single binary label column.
 *
 *  A sample whose label has no other member in the batch cannot anchor a
 *  positive pair; its outer term is skipped (contributes 0) while the outer
 *  normalization stays 1/N. The gradient is the full quotient-rule derivative
 *  through the cosine normalization.
 */
ScrOutput scr_loss(const RealMatrix& Z, const RealVector& labels_c, double tau);

/** Cross-entropy term selected by cfg.kind plus lambda times the per-class
 *  mean of the regularizer. With lambda == 0 the output is bit-identical to
 *  the bare cross-entropy operation.
 */
LossOutput combined_loss(const LossConfig& cfg, const BatchEmbeddings& emb,
                         const AnchorSet& anchors);

/// Predicted probability of the positive case from a single embedding and one
/// class's anchor pair. BCE family: sigmoid(u.z); CBCE family:
/// sig(u.z)/(sig(u.z)+sig(v.z)); CSCE family: pairwise softmax.
double predict_proba(LossKind kind, const RealVector& z, const RealVector& u_c,
                     const RealVector& v_c);

/// predict_proba for every (sample, class) pair; returns N x C scores.
RealMatrix predict_scores(LossKind kind, const RealMatrix& Z,
                          const AnchorSet& anchors);

}  // namespace seqcl
