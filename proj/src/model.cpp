#include "rfauth/model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace rfauth::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using CMapRow = Eigen::Map<const Eigen::RowVectorXd>;

void apply_activation(Tensor& t, Activation act, double alpha) {
  switch (act) {
    case Activation::None:
      return;
    case Activation::Relu:
      for (double& v : t.data) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::LeakyRelu:
      for (double& v : t.data) v = v > 0.0 ? v : alpha * v;
      return;
  }
}

/// Derivative of the activation expressed through its output value; valid
/// because both ReLU variants preserve the sign of the pre-activation.
inline double act_deriv(double out, Activation act, double alpha) {
  switch (act) {
    case Activation::None: return 1.0;
    case Activation::Relu: return out > 0.0 ? 1.0 : 0.0;
    case Activation::LeakyRelu: return out > 0.0 ? 1.0 : alpha;
  }
  return 1.0;
}

[[noreturn]] void shape_fail(std::size_t layer, const LayerSpec& spec, const std::string& what) {
  throw std::invalid_argument("layer " + std::to_string(layer) + " (" + spec.kind_name() +
                              "): " + what);
}

/// Patches of k consecutive rows (times all Wd columns and C channels),
/// laid out one GEMM row per (n, ho, w) position.
void im2col(const double* x, std::size_t n_batch, std::size_t h, std::size_t wd, std::size_t c,
            std::size_t k, double* col) {
  const std::size_t ho = h - k + 1;
  double* out = col;
  for (std::size_t n = 0; n < n_batch; ++n) {
    const double* xn = x + n * h * wd * c;
    for (std::size_t y = 0; y < ho; ++y) {
      for (std::size_t w = 0; w < wd; ++w) {
        for (std::size_t dk = 0; dk < k; ++dk) {
          std::memcpy(out, xn + ((y + dk) * wd + w) * c, c * sizeof(double));
          out += c;
        }
      }
    }
  }
}

void col2im_add(const double* col, std::size_t n_batch, std::size_t h, std::size_t wd,
                std::size_t c, std::size_t k, double* dx) {
  const std::size_t ho = h - k + 1;
  const double* in = col;
  for (std::size_t n = 0; n < n_batch; ++n) {
    double* xn = dx + n * h * wd * c;
    for (std::size_t y = 0; y < ho; ++y) {
      for (std::size_t w = 0; w < wd; ++w) {
        for (std::size_t dk = 0; dk < k; ++dk) {
          double* dst = xn + ((y + dk) * wd + w) * c;
          for (std::size_t i = 0; i < c; ++i) dst[i] += in[i];
          in += c;
        }
      }
    }
  }
}

struct ConvDims {
  std::size_t h, wd, c, ho, f, k;
};

ConvDims conv_dims(const LayerSpec& spec, const std::vector<std::size_t>& in) {
  ConvDims d{};
  d.k = spec.kernel;
  d.f = spec.units;
  if (spec.kind == LayerKind::Conv2D) {
    d.h = in[0];
    d.wd = in[1];
    d.c = in[2];
  } else {
    d.h = in[0];
    d.wd = 1;
    d.c = in[1];
  }
  d.ho = d.h - d.k + 1;
  return d;
}

}  // namespace

LayerSpec LayerSpec::conv2d(std::size_t filters, std::size_t k, Activation act, double l2) {
  LayerSpec s;
  s.kind = LayerKind::Conv2D;
  s.units = filters;
  s.kernel = k;
  s.act = act;
  s.l2 = l2;
  return s;
}

LayerSpec LayerSpec::conv1d(std::size_t filters, std::size_t k, Activation act, double alpha) {
  LayerSpec s;
  s.kind = LayerKind::Conv1D;
  s.units = filters;
  s.kernel = k;
  s.act = act;
  s.act_alpha = alpha;
  return s;
}

LayerSpec LayerSpec::dense(std::size_t units, Activation act, double l2, double alpha) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.units = units;
  s.act = act;
  s.l2 = l2;
  s.act_alpha = alpha;
  return s;
}

LayerSpec LayerSpec::batch_norm() {
  LayerSpec s;
  s.kind = LayerKind::BatchNorm;
  return s;
}

LayerSpec LayerSpec::max_pool2d() {
  LayerSpec s;
  s.kind = LayerKind::MaxPool2D;
  return s;
}

LayerSpec LayerSpec::dropout(double rate) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0, 1)");
  LayerSpec s;
  s.kind = LayerKind::Dropout;
  s.rate = rate;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::Flatten;
  return s;
}

LayerSpec LayerSpec::reshape(std::vector<std::size_t> shape) {
  LayerSpec s;
  s.kind = LayerKind::Reshape;
  s.target_shape = std::move(shape);
  return s;
}

LayerSpec LayerSpec::activation(Activation act, double alpha) {
  LayerSpec s;
  s.kind = LayerKind::Act;
  s.act = act;
  s.act_alpha = alpha;
  return s;
}

const char* LayerSpec::kind_name() const {
  switch (kind) {
    case LayerKind::Conv2D: return "Conv2D";
    case LayerKind::Conv1D: return "Conv1D";
    case LayerKind::Dense: return "Dense";
    case LayerKind::BatchNorm: return "BatchNorm";
    case LayerKind::MaxPool2D: return "MaxPool2D";
    case LayerKind::Dropout: return "Dropout";
    case LayerKind::Flatten: return "Flatten";
    case LayerKind::Reshape: return "Reshape";
    case LayerKind::Act: return "Act";
  }
  return "?";
}

Model& Model::add(LayerSpec spec) {
  specs.push_back(std::move(spec));
  return *this;
}

std::vector<std::vector<std::size_t>> Model::layer_shapes() const {
  std::vector<std::vector<std::size_t>> shapes;
  std::vector<std::size_t> cur = input_shape;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& s = specs[i];
    switch (s.kind) {
      case LayerKind::Conv2D: {
        if (cur.size() != 3) shape_fail(i, s, "expects (H, W, C) input, got " + shape_to_string(cur));
        if (cur[0] < s.kernel) shape_fail(i, s, "kernel longer than input height");
        cur = {cur[0] - s.kernel + 1, cur[1], s.units};
        break;
      }
      case LayerKind::Conv1D: {
        if (cur.size() != 2) shape_fail(i, s, "expects (L, C) input, got " + shape_to_string(cur));
        if (cur[0] < s.kernel) shape_fail(i, s, "kernel longer than input length");
        cur = {cur[0] - s.kernel + 1, s.units};
        break;
      }
      case LayerKind::Dense: {
        if (cur.size() != 1) shape_fail(i, s, "expects flat input, got " + shape_to_string(cur));
        cur = {s.units};
        break;
      }
      case LayerKind::BatchNorm:
      case LayerKind::Dropout:
      case LayerKind::Act:
        break;
      case LayerKind::MaxPool2D: {
        if (cur.size() != 3) shape_fail(i, s, "expects (H, W, C) input, got " + shape_to_string(cur));
        if (cur[0] < 2) shape_fail(i, s, "input height below pool size");
        cur = {cur[0] / 2, cur[1], cur[2]};
        break;
      }
      case LayerKind::Flatten:
        cur = {shape_numel(cur)};
        break;
      case LayerKind::Reshape: {
        if (shape_numel(s.target_shape) != shape_numel(cur)) {
          shape_fail(i, s, "reshape changes element count");
        }
        cur = s.target_shape;
        break;
      }
    }
    shapes.push_back(cur);
  }
  return shapes;
}

std::vector<std::size_t> Model::output_shape() const {
  auto shapes = layer_shapes();
  return shapes.empty() ? input_shape : shapes.back();
}

void Model::init(std::uint64_t seed) {
  const auto shapes = layer_shapes();
  Rng rng(seed);
  params.assign(specs.size(), LayerParams{});
  std::vector<std::size_t> in = input_shape;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& s = specs[i];
    LayerParams& p = params[i];
    switch (s.kind) {
      case LayerKind::Conv2D:
      case LayerKind::Conv1D: {
        const std::size_t c = (s.kind == LayerKind::Conv2D) ? in[2] : in[1];
        const double fan_in = static_cast<double>(s.kernel * c);
        const double fan_out = static_cast<double>(s.kernel * s.units);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        p.w = Tensor({s.kernel, c, s.units});
        for (double& v : p.w.data) v = rng.uniform(-limit, limit);
        p.b = Tensor({s.units});
        break;
      }
      case LayerKind::Dense: {
        const double limit = std::sqrt(6.0 / static_cast<double>(in[0] + s.units));
        p.w = Tensor({in[0], s.units});
        for (double& v : p.w.data) v = rng.uniform(-limit, limit);
        p.b = Tensor({s.units});
        break;
      }
      case LayerKind::BatchNorm: {
        const std::size_t c = in.back();
        p.w = Tensor::full({c}, 1.0);
        p.b = Tensor({c});
        p.run_mean = Tensor({c});
        p.run_var = Tensor::full({c}, 1.0);
        break;
      }
      default:
        break;
    }
    in = shapes[i];
  }
}

std::vector<LearnableRef> Model::learnable() const {
  std::vector<LearnableRef> refs;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    switch (specs[i].kind) {
      case LayerKind::Conv2D:
      case LayerKind::Conv1D:
      case LayerKind::Dense:
        refs.push_back({i, 0, specs[i].l2});
        refs.push_back({i, 1, 0.0});
        break;
      case LayerKind::BatchNorm:
        refs.push_back({i, 0, 0.0});
        refs.push_back({i, 1, 0.0});
        break;
      default:
        break;
    }
  }
  return refs;
}

std::vector<Tensor> Model::zero_grads() const {
  std::vector<Tensor> grads;
  for (const auto& ref : learnable()) {
    const Tensor& t = ref.slot == 0 ? params[ref.layer].w : params[ref.layer].b;
    grads.push_back(Tensor(t.shape));
  }
  return grads;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& ref : learnable()) {
    n += (ref.slot == 0 ? params[ref.layer].w : params[ref.layer].b).size();
  }
  return n;
}

double Model::l2_penalty() const {
  double penalty = 0.0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].l2 <= 0.0) continue;
    double ss = 0.0;
    for (double v : params[i].w.data) ss += v * v;
    penalty += specs[i].l2 * ss;
  }
  return penalty;
}

Tensor Model::forward(const Tensor& batch, Mode mode, Rng* rng, ForwardCache* cache) {
  if (params.size() != specs.size()) throw std::logic_error("model not initialized");
  if (batch.ndim() != input_shape.size() + 1) {
    throw std::invalid_argument("batch rank " + std::to_string(batch.ndim()) +
                                " does not match input shape " + shape_to_string(input_shape));
  }
  for (std::size_t a = 0; a < input_shape.size(); ++a) {
    if (batch.dim(a + 1) != input_shape[a]) {
      throw std::invalid_argument("batch shape " + batch.shape_str() +
                                  " does not match model input " + shape_to_string(input_shape));
    }
  }
  const std::size_t n = batch.dim(0);
  if (cache) {
    cache->mode = mode;
    cache->layers.assign(specs.size(), LayerCache{});
  }

  Tensor cur = batch;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& s = specs[i];
    LayerParams& p = params[i];
    Tensor next;
    LayerCache local;
    LayerCache& lc = cache ? cache->layers[i] : local;

    switch (s.kind) {
      case LayerKind::Conv2D:
      case LayerKind::Conv1D: {
        std::vector<std::size_t> per_sample(cur.shape.begin() + 1, cur.shape.end());
        const ConvDims d = conv_dims(s, per_sample);
        const std::size_t rows = n * d.ho * d.wd;
        const std::size_t cols = d.k * d.c;
        std::vector<double> col(rows * cols);
        im2col(cur.ptr(), n, d.h, d.wd, d.c, d.k, col.data());
        next = (s.kind == LayerKind::Conv2D) ? Tensor({n, d.ho, d.wd, d.f})
                                             : Tensor({n, d.ho, d.f});
        CMapMat xc(col.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        CMapMat w(p.w.ptr(), static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(d.f));
        MapMat y(next.ptr(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d.f));
        y.noalias() = xc * w;
        y.rowwise() += CMapRow(p.b.ptr(), static_cast<Eigen::Index>(d.f));
        apply_activation(next, s.act, s.act_alpha);
        break;
      }
      case LayerKind::Dense: {
        const std::size_t din = cur.dim(1);
        next = Tensor({n, s.units});
        CMapMat x(cur.ptr(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(din));
        CMapMat w(p.w.ptr(), static_cast<Eigen::Index>(din), static_cast<Eigen::Index>(s.units));
        MapMat y(next.ptr(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s.units));
        y.noalias() = x * w;
        y.rowwise() += CMapRow(p.b.ptr(), static_cast<Eigen::Index>(s.units));
        apply_activation(next, s.act, s.act_alpha);
        break;
      }
      case LayerKind::BatchNorm: {
        const std::size_t c = cur.shape.back();
        const std::size_t m = cur.size() / c;
        next = Tensor(cur.shape);
        lc.mean.assign(c, 0.0);
        lc.inv_std.assign(c, 0.0);
        if (mode == Mode::Train) {
          std::vector<double> var(c, 0.0);
          const double* x = cur.ptr();
          for (std::size_t idx = 0; idx < cur.size(); idx += c) {
            for (std::size_t j = 0; j < c; ++j) lc.mean[j] += x[idx + j];
          }
          for (std::size_t j = 0; j < c; ++j) lc.mean[j] /= static_cast<double>(m);
          for (std::size_t idx = 0; idx < cur.size(); idx += c) {
            for (std::size_t j = 0; j < c; ++j) {
              const double d = x[idx + j] - lc.mean[j];
              var[j] += d * d;
            }
          }
          for (std::size_t j = 0; j < c; ++j) {
            var[j] /= static_cast<double>(m);
            lc.inv_std[j] = 1.0 / std::sqrt(var[j] + s.bn_eps);
            p.run_mean.data[j] = s.bn_momentum * p.run_mean.data[j] + (1.0 - s.bn_momentum) * lc.mean[j];
            p.run_var.data[j] = s.bn_momentum * p.run_var.data[j] + (1.0 - s.bn_momentum) * var[j];
          }
        } else {
          for (std::size_t j = 0; j < c; ++j) {
            lc.mean[j] = p.run_mean.data[j];
            lc.inv_std[j] = 1.0 / std::sqrt(p.run_var.data[j] + s.bn_eps);
          }
        }
        const double* x = cur.ptr();
        double* y = next.ptr();
        for (std::size_t idx = 0; idx < cur.size(); idx += c) {
          for (std::size_t j = 0; j < c; ++j) {
            y[idx + j] = p.w.data[j] * (x[idx + j] - lc.mean[j]) * lc.inv_std[j] + p.b.data[j];
          }
        }
        break;
      }
      case LayerKind::MaxPool2D: {
        const std::size_t h = cur.dim(1), wd = cur.dim(2), c = cur.dim(3);
        const std::size_t ho = h / 2;
        next = Tensor({n, ho, wd, c});
        lc.pick.assign(next.size(), 0);
        const double* x = cur.ptr();
        double* y = next.ptr();
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t yo = 0; yo < ho; ++yo) {
            const double* row0 = x + ((b * h + 2 * yo) * wd) * c;
            const double* row1 = row0 + wd * c;
            double* dst = y + ((b * ho + yo) * wd) * c;
            std::uint8_t* pk = lc.pick.data() + ((b * ho + yo) * wd) * c;
            for (std::size_t j = 0; j < wd * c; ++j) {
              if (row0[j] >= row1[j]) {
                dst[j] = row0[j];
                pk[j] = 0;
              } else {
                dst[j] = row1[j];
                pk[j] = 1;
              }
            }
          }
        }
        break;
      }
      case LayerKind::Dropout: {
        if (mode == Mode::Train && s.rate > 0.0) {
          if (!rng) throw std::invalid_argument("train-mode forward with dropout needs an rng");
          const double keep_scale = 1.0 / (1.0 - s.rate);
          next = Tensor(cur.shape);
          lc.mask = Tensor(cur.shape);
          for (std::size_t j = 0; j < cur.size(); ++j) {
            const double mv = rng->uniform() < s.rate ? 0.0 : keep_scale;
            lc.mask.data[j] = mv;
            next.data[j] = cur.data[j] * mv;
          }
        } else {
          next = cur;
        }
        break;
      }
      case LayerKind::Flatten:
        next = cur.reshaped({n, cur.size() / n});
        break;
      case LayerKind::Reshape: {
        std::vector<std::size_t> target{n};
        target.insert(target.end(), s.target_shape.begin(), s.target_shape.end());
        next = cur.reshaped(std::move(target));
        break;
      }
      case LayerKind::Act: {
        next = cur;
        apply_activation(next, s.act, s.act_alpha);
        break;
      }
    }

    if (cache) {
      lc.input = std::move(cur);
      lc.output = next;
    }
    cur = std::move(next);
  }
  return cur;
}

Tensor Model::predict(const Tensor& batch) const {
  // inference mutates nothing (running stats are only updated in train mode)
  return const_cast<Model*>(this)->forward(batch, Mode::Infer);
}

Tensor Model::backward(const ForwardCache& cache, const Tensor& d_output,
                       std::vector<Tensor>* grads, std::size_t from_layer) const {
  if (cache.layers.size() != specs.size()) {
    throw std::logic_error("backward: cache does not match model (stale or missing)");
  }
  std::size_t top = from_layer == static_cast<std::size_t>(-1) ? specs.size() - 1 : from_layer;
  if (top >= specs.size()) throw std::invalid_argument("backward: from_layer out of range");

  // learnable-list base index per layer
  std::vector<std::size_t> base(specs.size(), 0);
  {
    std::size_t acc = 0;
    const auto refs = learnable();
    std::size_t r = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      base[i] = acc;
      while (r < refs.size() && refs[r].layer == i) {
        ++r;
        ++acc;
      }
    }
    if (grads && grads->size() != refs.size()) {
      throw std::invalid_argument("backward: gradient vector size mismatch");
    }
  }

  Tensor d = d_output;
  for (std::size_t ii = top + 1; ii-- > 0;) {
    const LayerSpec& s = specs[ii];
    const LayerParams& p = params[ii];
    const LayerCache& lc = cache.layers[ii];
    if (!d.same_shape(lc.output) && s.kind != LayerKind::Flatten && s.kind != LayerKind::Reshape) {
      // flatten/reshape tolerate shape-tag mismatches; everything else must align
      if (d.size() != lc.output.size()) {
        throw std::invalid_argument("backward: gradient shape " + d.shape_str() +
                                    " does not match layer output " + lc.output.shape_str());
      }
    }
    const std::size_t n = lc.input.dim(0);
    Tensor dprev;

    switch (s.kind) {
      case LayerKind::Conv2D:
      case LayerKind::Conv1D: {
        std::vector<std::size_t> per_sample(lc.input.shape.begin() + 1, lc.input.shape.end());
        const ConvDims cd = conv_dims(s, per_sample);
        const std::size_t rows = n * cd.ho * cd.wd;
        const std::size_t cols = cd.k * cd.c;

        Tensor dz = d;
        for (std::size_t j = 0; j < dz.size(); ++j) {
          dz.data[j] *= act_deriv(lc.output.data[j], s.act, s.act_alpha);
        }
        std::vector<double> col(rows * cols);
        im2col(lc.input.ptr(), n, cd.h, cd.wd, cd.c, cd.k, col.data());

        CMapMat xc(col.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        CMapMat dzm(dz.ptr(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cd.f));
        CMapMat w(p.w.ptr(), static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(cd.f));

        if (grads) {
          Tensor& dw = (*grads)[base[ii]];
          Tensor& db = (*grads)[base[ii] + 1];
          MapMat dwm(dw.ptr(), static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(cd.f));
          dwm.noalias() = xc.transpose() * dzm;
          if (s.l2 > 0.0) {
            for (std::size_t j = 0; j < dw.size(); ++j) dw.data[j] += 2.0 * s.l2 * p.w.data[j];
          }
          Eigen::Map<Eigen::RowVectorXd>(db.ptr(), static_cast<Eigen::Index>(cd.f)) =
              dzm.colwise().sum();
        }

        std::vector<double> dcol(rows * cols);
        MapMat dcm(dcol.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        dcm.noalias() = dzm * w.transpose();
        dprev = Tensor(lc.input.shape);
        col2im_add(dcol.data(), n, cd.h, cd.wd, cd.c, cd.k, dprev.ptr());
        break;
      }
      case LayerKind::Dense: {
        const std::size_t din = lc.input.dim(1);
        Tensor dz = d;
        for (std::size_t j = 0; j < dz.size(); ++j) {
          dz.data[j] *= act_deriv(lc.output.data[j], s.act, s.act_alpha);
        }
        CMapMat x(lc.input.ptr(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(din));
        CMapMat dzm(dz.ptr(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s.units));
        CMapMat w(p.w.ptr(), static_cast<Eigen::Index>(din), static_cast<Eigen::Index>(s.units));
        if (grads) {
          Tensor& dw = (*grads)[base[ii]];
          Tensor& db = (*grads)[base[ii] + 1];
          MapMat dwm(dw.ptr(), static_cast<Eigen::Index>(din), static_cast<Eigen::Index>(s.units));
          dwm.noalias() = x.transpose() * dzm;
          if (s.l2 > 0.0) {
            for (std::size_t j = 0; j < dw.size(); ++j) dw.data[j] += 2.0 * s.l2 * p.w.data[j];
          }
          Eigen::Map<Eigen::RowVectorXd>(db.ptr(), static_cast<Eigen::Index>(s.units)) =
              dzm.colwise().sum();
        }
        dprev = Tensor(lc.input.shape);
        MapMat dxm(dprev.ptr(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(din));
        dxm.noalias() = dzm * w.transpose();
        break;
      }
      case LayerKind::BatchNorm: {
        const std::size_t c = lc.input.shape.back();
        const std::size_t m = lc.input.size() / c;
        dprev = Tensor(lc.input.shape);
        const double* x = lc.input.ptr();
        const double* dy = d.ptr();

        std::vector<double> dgamma(c, 0.0), dbeta(c, 0.0);
        if (cache.mode == Mode::Train) {
          std::vector<double> s1(c, 0.0), s2(c, 0.0), s3(c, 0.0);
          for (std::size_t idx = 0; idx < lc.input.size(); idx += c) {
            for (std::size_t j = 0; j < c; ++j) {
              const double xc = x[idx + j] - lc.mean[j];
              const double dxhat = dy[idx + j] * p.w.data[j];
              dgamma[j] += dy[idx + j] * xc * lc.inv_std[j];
              dbeta[j] += dy[idx + j];
              s1[j] += dxhat;
              s2[j] += dxhat * xc;
              s3[j] += xc;
            }
          }
          std::vector<double> dvar(c), dmean(c);
          for (std::size_t j = 0; j < c; ++j) {
            const double is = lc.inv_std[j];
            dvar[j] = s2[j] * (-0.5) * is * is * is;
            dmean[j] = -is * s1[j] + dvar[j] * (-2.0 / static_cast<double>(m)) * s3[j];
          }
          double* dx = dprev.ptr();
          for (std::size_t idx = 0; idx < lc.input.size(); idx += c) {
            for (std::size_t j = 0; j < c; ++j) {
              const double xc = x[idx + j] - lc.mean[j];
              dx[idx + j] = dy[idx + j] * p.w.data[j] * lc.inv_std[j] +
                            dvar[j] * 2.0 * xc / static_cast<double>(m) +
                            dmean[j] / static_cast<double>(m);
            }
          }
        } else {
          double* dx = dprev.ptr();
          for (std::size_t idx = 0; idx < lc.input.size(); idx += c) {
            for (std::size_t j = 0; j < c; ++j) {
              const double xhat = (x[idx + j] - lc.mean[j]) * lc.inv_std[j];
              dgamma[j] += dy[idx + j] * xhat;
              dbeta[j] += dy[idx + j];
              dx[idx + j] = dy[idx + j] * p.w.data[j] * lc.inv_std[j];
            }
          }
        }
        if (grads) {
          std::copy(dgamma.begin(), dgamma.end(), (*grads)[base[ii]].data.begin());
          std::copy(dbeta.begin(), dbeta.end(), (*grads)[base[ii] + 1].data.begin());
        }
        break;
      }
      case LayerKind::MaxPool2D: {
        dprev = Tensor(lc.input.shape);
        const std::size_t h = lc.input.dim(1), wd = lc.input.dim(2), c = lc.input.dim(3);
        const std::size_t ho = h / 2;
        const double* dy = d.ptr();
        double* dx = dprev.ptr();
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t yo = 0; yo < ho; ++yo) {
            const std::size_t out_off = ((b * ho + yo) * wd) * c;
            const std::size_t in_off = ((b * h + 2 * yo) * wd) * c;
            for (std::size_t j = 0; j < wd * c; ++j) {
              dx[in_off + lc.pick[out_off + j] * wd * c + j] += dy[out_off + j];
            }
          }
        }
        break;
      }
      case LayerKind::Dropout: {
        if (cache.mode == Mode::Train && s.rate > 0.0) {
          dprev = Tensor(lc.input.shape);
          for (std::size_t j = 0; j < d.size(); ++j) dprev.data[j] = d.data[j] * lc.mask.data[j];
        } else {
          dprev = d;
          dprev.shape = lc.input.shape;
        }
        break;
      }
      case LayerKind::Flatten:
      case LayerKind::Reshape: {
        dprev = d.reshaped(lc.input.shape);
        break;
      }
      case LayerKind::Act: {
        dprev = d;
        for (std::size_t j = 0; j < dprev.size(); ++j) {
          dprev.data[j] *= act_deriv(lc.output.data[j], s.act, s.act_alpha);
        }
        break;
      }
    }
    d = std::move(dprev);
  }
  return d;
}

}  // namespace rfauth::nn
