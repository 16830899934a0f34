#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rfauth/model.hpp"

namespace rfauth::nn {

/// Central-finite-difference check of `analytic` (aligned with
/// model.learnable()) against loss_eval, which must deterministically
/// re-evaluate the full scalar objective — including L2 penalties — for the
/// model's current parameter values. Returns
/// max over parameters of |g_fd - g_an| / max(|g_fd|, |g_an|, 1e-8).
double max_rel_grad_error(Model& model, const std::vector<Tensor>& analytic,
                          const std::function<double()>& loss_eval, double eps = 1e-5);

/// Checks the train-mode cross-entropy gradient of a classifier. Dropout
/// masks are pinned by re-seeding the stream for every evaluation.
double grad_check_classification(Model& model, const Tensor& batch, std::span<const int> labels,
                                 std::uint64_t seed, double eps = 1e-5);

/// Same for a mean-squared-error objective against a fixed target.
double grad_check_regression(Model& model, const Tensor& batch, const Tensor& target,
                             std::uint64_t seed, double eps = 1e-5);

}  // namespace rfauth::nn
