#pragma once

#include <span>

#include "rfauth/tensor.hpp"

namespace rfauth::nn {

struct LossGrad {
  double loss = 0.0;
  Tensor grad;
};

/// Single-sample cross entropy on raw logits (K,). loss includes the caller's
/// accumulated L2 penalty; grad is softmax(z) - onehot(label), computed with
/// the log-sum-exp shift.
LossGrad sparse_ce_loss(const Tensor& logits, int label, double l2_terms = 0.0);

/// Batch-mean cross entropy on (N, K) logits. grad rows are already divided
/// by N; L2 penalties are not included (add Model::l2_penalty separately).
LossGrad sparse_ce_batch(const Tensor& logits, std::span<const int> labels);

/// Mean squared error over all elements; grad is with respect to pred.
LossGrad mse_loss(const Tensor& pred, const Tensor& target);

/// Squared distance between batch-mean feature vectors, || mean(real) -
/// mean(fake) ||^2; grad is with respect to fake_feats (N_fake, D).
LossGrad feature_matching_loss(const Tensor& real_feats, const Tensor& fake_feats);

}  // namespace rfauth::nn
