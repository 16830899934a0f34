#include "rfauth/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace rfauth::nn {

AdamState AdamState::for_model(const Model& model, double lr_value) {
  AdamState s;
  s.lr = lr_value;
  s.m = model.zero_grads();
  s.v = model.zero_grads();
  return s;
}

namespace {

void update(std::vector<Tensor*>& params, const std::vector<Tensor>& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state size mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    if (!p.same_shape(g) || !p.same_shape(m)) {
      throw std::invalid_argument("adam_step: tensor shape mismatch at index " + std::to_string(i));
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      m.data[j] = state.beta1 * m.data[j] + (1.0 - state.beta1) * g.data[j];
      v.data[j] = state.beta2 * v.data[j] + (1.0 - state.beta2) * g.data[j] * g.data[j];
      const double mhat = m.data[j] / bc1;
      const double vhat = v.data[j] / bc2;
      p.data[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace

void adam_step(Model& model, const std::vector<Tensor>& grads, AdamState& state) {
  std::vector<Tensor*> params;
  for (const auto& ref : model.learnable()) {
    params.push_back(ref.slot == 0 ? &model.params[ref.layer].w : &model.params[ref.layer].b);
  }
  update(params, grads, state);
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state) {
  auto p = params;
  update(p, grads, state);
}

}  // namespace rfauth::nn
