#include "rfauth/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rfauth::nn {

namespace {

/// Writes softmax(z) into p and returns log(sum(exp(z - max))).
double stable_softmax(const double* z, std::size_t k, double* p) {
  const double zmax = *std::max_element(z, z + k);
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    p[i] = std::exp(z[i] - zmax);
    sum += p[i];
  }
  for (std::size_t i = 0; i < k; ++i) p[i] /= sum;
  return std::log(sum);
}

}  // namespace

LossGrad sparse_ce_loss(const Tensor& logits, int label, double l2_terms) {
  if (logits.ndim() != 1) throw std::invalid_argument("sparse_ce_loss: logits must be rank 1");
  const std::size_t k = logits.dim(0);
  if (label < 0 || static_cast<std::size_t>(label) >= k) {
    throw std::invalid_argument("sparse_ce_loss: label " + std::to_string(label) +
                                " outside [0, " + std::to_string(k) + ")");
  }
  LossGrad out;
  out.grad = Tensor({k});
  const double zmax = *std::max_element(logits.data.begin(), logits.data.end());
  const double lse = stable_softmax(logits.ptr(), k, out.grad.ptr());
  out.loss = -(logits.data[static_cast<std::size_t>(label)] - zmax - lse) + l2_terms;
  out.grad.data[static_cast<std::size_t>(label)] -= 1.0;
  return out;
}

LossGrad sparse_ce_batch(const Tensor& logits, std::span<const int> labels) {
  if (logits.ndim() != 2) throw std::invalid_argument("sparse_ce_batch: logits must be (N, K)");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != n) throw std::invalid_argument("sparse_ce_batch: label count mismatch");
  LossGrad out;
  out.grad = Tensor({n, k});
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw std::invalid_argument("sparse_ce_batch: label " + std::to_string(label) +
                                  " outside [0, " + std::to_string(k) + ")");
    }
    const double* z = logits.ptr() + r * k;
    double* p = out.grad.ptr() + r * k;
    const double zmax = *std::max_element(z, z + k);
    const double lse = stable_softmax(z, k, p);
    total += -(z[label] - zmax - lse);
    p[label] -= 1.0;
  }
  for (double& g : out.grad.data) g /= static_cast<double>(n);
  out.loss = total / static_cast<double>(n);
  return out;
}

LossGrad mse_loss(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) {
    throw std::invalid_argument("mse_loss: shape mismatch " + pred.shape_str() + " vs " +
                                target.shape_str());
  }
  LossGrad out;
  out.grad = Tensor(pred.shape);
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.data[i] - target.data[i];
    total += d * d;
    out.grad.data[i] = 2.0 * d * inv_n;
  }
  out.loss = total * inv_n;
  return out;
}

LossGrad feature_matching_loss(const Tensor& real_feats, const Tensor& fake_feats) {
  if (real_feats.ndim() != 2 || fake_feats.ndim() != 2 ||
      real_feats.dim(1) != fake_feats.dim(1)) {
    throw std::invalid_argument("feature_matching_loss: expected (N, D) batches with equal D");
  }
  const std::size_t d = real_feats.dim(1);
  const std::size_t nr = real_feats.dim(0), nf = fake_feats.dim(0);
  std::vector<double> diff(d, 0.0);
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t j = 0; j < d; ++j) diff[j] += real_feats.data[r * d + j];
  }
  for (std::size_t j = 0; j < d; ++j) diff[j] /= static_cast<double>(nr);
  std::vector<double> fake_mean(d, 0.0);
  for (std::size_t r = 0; r < nf; ++r) {
    for (std::size_t j = 0; j < d; ++j) fake_mean[j] += fake_feats.data[r * d + j];
  }
  for (std::size_t j = 0; j < d; ++j) diff[j] -= fake_mean[j] / static_cast<double>(nf);

  LossGrad out;
  out.grad = Tensor({nf, d});
  for (std::size_t j = 0; j < d; ++j) out.loss += diff[j] * diff[j];
  for (std::size_t r = 0; r < nf; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      out.grad.data[r * d + j] = -2.0 * diff[j] / static_cast<double>(nf);
    }
  }
  return out;
}

}  // namespace rfauth::nn
