#pragma once

#include <cstdint>
#include <vector>

#include "rfauth/model.hpp"
#include "rfauth/tensor.hpp"

namespace rfauth::nn {

/// Bias-corrected Adam. Moment buffers are aligned with Model::learnable().
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long step = 0;
  std::vector<Tensor> m, v;

  static AdamState for_model(const Model& model, double lr);
};

/// One update over the model's learnable tensors; increments the step count.
void adam_step(Model& model, const std::vector<Tensor>& grads, AdamState& state);

/// Raw variant used by tests and by anything optimizing loose tensors.
void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state);

}  // namespace rfauth::nn
