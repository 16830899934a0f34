#pragma once

#include <cstdint>
#include <vector>

#include "rfauth/rng.hpp"
#include "rfauth/tensor.hpp"

namespace rfauth::nn {

enum class Activation : std::uint8_t { None = 0, Relu = 1, LeakyRelu = 2 };

enum class LayerKind : std::uint8_t {
  Conv2D = 0,    // kernel (k, 1) over (H, W, C) input, valid padding, stride 1
  Conv1D = 1,    // kernel k over (L, C) input, valid padding, stride 1
  Dense = 2,
  BatchNorm = 3, // per-feature over the last axis
  MaxPool2D = 4, // pool (2, 1), stride (2, 1)
  Dropout = 5,
  Flatten = 6,
  Reshape = 7,
  Act = 8,       // standalone activation
};

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  std::size_t units = 0;   // conv filters or dense units
  std::size_t kernel = 0;  // conv kernel length
  Activation act = Activation::None;
  double act_alpha = 0.0;  // LeakyReLU slope
  double l2 = 0.0;         // kernel regularization strength
  double rate = 0.0;       // dropout rate in [0, 1)
  double bn_momentum = 0.99;
  double bn_eps = 1e-3;
  std::vector<std::size_t> target_shape;  // reshape target (per sample)

  static LayerSpec conv2d(std::size_t filters, std::size_t k, Activation act, double l2);
  static LayerSpec conv1d(std::size_t filters, std::size_t k, Activation act, double alpha);
  static LayerSpec dense(std::size_t units, Activation act, double l2, double alpha = 0.0);
  static LayerSpec batch_norm();
  static LayerSpec max_pool2d();
  static LayerSpec dropout(double rate);
  static LayerSpec flatten();
  static LayerSpec reshape(std::vector<std::size_t> shape);
  static LayerSpec activation(Activation act, double alpha = 0.0);

  const char* kind_name() const;
};

/// Weight storage for one layer. Conv/Dense use w (kernel) and b (bias);
/// BatchNorm uses w (gamma), b (beta) and the running statistics.
struct LayerParams {
  Tensor w, b;
  Tensor run_mean, run_var;
};

enum class Mode { Train, Infer };

struct LayerCache {
  Tensor input;
  Tensor output;
  Tensor mask;                     // dropout keep mask, pre-scaled
  std::vector<std::uint8_t> pick;  // maxpool winner (0 = upper row)
  std::vector<double> mean, inv_std;  // batchnorm statistics used this pass
};

struct ForwardCache {
  Mode mode = Mode::Infer;
  std::vector<LayerCache> layers;
};

/// One learnable tensor of the model, in declaration order.
struct LearnableRef {
  std::size_t layer = 0;
  int slot = 0;  // 0 = w/gamma, 1 = b/beta
  double l2 = 0.0;
};

/// A plain sequential network. Layers are described by LayerSpec and executed
/// by a shape-checked interpreter; the heavy lifting (dense and im2col conv
/// products) is delegated to Eigen.
struct Model {
  std::vector<std::size_t> input_shape;  // per-sample
  std::vector<LayerSpec> specs;
  std::vector<LayerParams> params;

  Model& add(LayerSpec spec);

  /// Allocates parameters (Glorot-uniform kernels, zero biases, identity
  /// batch norm) and validates the shape chain.
  void init(std::uint64_t seed);

  /// Per-sample output shape of every layer.
  std::vector<std::vector<std::size_t>> layer_shapes() const;
  std::vector<std::size_t> output_shape() const;

  std::vector<LearnableRef> learnable() const;
  std::vector<Tensor> zero_grads() const;
  std::size_t parameter_count() const;

  /// Runs the batch through the network. rng is required in train mode when
  /// any dropout layer has rate > 0; cache is required to run backward later.
  /// Train mode updates batch-norm running statistics.
  Tensor forward(const Tensor& batch, Mode mode, Rng* rng = nullptr,
                 ForwardCache* cache = nullptr);

  /// Pure inference pass.
  Tensor predict(const Tensor& batch) const;

  /// Propagates d_output (gradient at the output of layer `from_layer`,
  /// default the last) back to the input. When grads is non-null it receives
  /// parameter gradients aligned with learnable(), including L2 terms.
  Tensor backward(const ForwardCache& cache, const Tensor& d_output,
                  std::vector<Tensor>* grads,
                  std::size_t from_layer = static_cast<std::size_t>(-1)) const;

  /// Sum of l2 * ||w||^2 over layers with kernel regularization.
  double l2_penalty() const;
};

}  // namespace rfauth::nn
