#include "rfauth/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "rfauth/losses.hpp"

namespace rfauth::nn {

double max_rel_grad_error(Model& model, const std::vector<Tensor>& analytic,
                          const std::function<double()>& loss_eval, double eps) {
  const auto refs = model.learnable();
  double worst = 0.0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    Tensor& t = refs[i].slot == 0 ? model.params[refs[i].layer].w : model.params[refs[i].layer].b;
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double saved = t.data[j];
      t.data[j] = saved + eps;
      const double plus = loss_eval();
      t.data[j] = saved - eps;
      const double minus = loss_eval();
      t.data[j] = saved;
      const double fd = (plus - minus) / (2.0 * eps);
      const double an = analytic[i].data[j];
      const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

double grad_check_classification(Model& model, const Tensor& batch, std::span<const int> labels,
                                 std::uint64_t seed, double eps) {
  ForwardCache cache;
  Rng rng(seed);
  const Tensor logits = model.forward(batch, Mode::Train, &rng, &cache);
  const LossGrad lg = sparse_ce_batch(logits, labels);
  auto grads = model.zero_grads();
  model.backward(cache, lg.grad, &grads);

  auto loss_eval = [&]() {
    Rng r(seed);
    const Tensor z = model.forward(batch, Mode::Train, &r);
    return sparse_ce_batch(z, labels).loss + model.l2_penalty();
  };
  return max_rel_grad_error(model, grads, loss_eval, eps);
}

double grad_check_regression(Model& model, const Tensor& batch, const Tensor& target,
                             std::uint64_t seed, double eps) {
  ForwardCache cache;
  Rng rng(seed);
  const Tensor pred = model.forward(batch, Mode::Train, &rng, &cache);
  const LossGrad lg = mse_loss(pred, target);
  auto grads = model.zero_grads();
  model.backward(cache, lg.grad, &grads);

  auto loss_eval = [&]() {
    Rng r(seed);
    const Tensor p = model.forward(batch, Mode::Train, &r);
    return mse_loss(p, target).loss + model.l2_penalty();
  };
  return max_rel_grad_error(model, grads, loss_eval, eps);
}

}  // namespace rfauth::nn
