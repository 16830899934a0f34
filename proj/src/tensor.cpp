#include "rfauth/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace rfauth::nn {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(shape_numel(shape), 0.0) {
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("tensor dimensions must be positive");
  }
}

Tensor Tensor::full(std::vector<std::size_t> s, double value) {
  Tensor t(std::move(s));
  std::fill(t.data.begin(), t.data.end(), value);
  return t;
}

Tensor Tensor::reshaped(std::vector<std::size_t> s) const {
  if (shape_numel(s) != size()) {
    throw std::invalid_argument("reshape " + shape_str() + " -> " + shape_to_string(s) +
                                " changes element count");
  }
  Tensor t;
  t.shape = std::move(s);
  t.data = data;
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const { return shape_to_string(shape); }

}  // namespace rfauth::nn
