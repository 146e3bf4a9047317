#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace pse {

// Dense row-major tensor of 64-bit reals. Rank 1..3 covers everything in
// this codebase; shape is carried explicitly so checkpoints can round-trip.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    v_.assign(numel_of(shape_), 0.0);
  }

  Tensor(std::initializer_list<std::size_t> shape)
      : Tensor(std::vector<std::size_t>(shape)) {}

  static Tensor zeros(std::initializer_list<std::size_t> shape) {
    return Tensor(shape);
  }

  static Tensor full(std::initializer_list<std::size_t> shape, double value) {
    Tensor t(shape);
    t.fill(value);
    return t;
  }

  static Tensor from_vector(std::vector<double> values) {
    Tensor t;
    t.shape_ = {values.size()};
    t.v_ = std::move(values);
    return t;
  }

  static Tensor from_rows(std::size_t rows, std::size_t cols,
                          std::vector<double> values) {
    if (values.size() != rows * cols)
      throw std::invalid_argument("Tensor::from_rows: size mismatch");
    Tensor t;
    t.shape_ = {rows, cols};
    t.v_ = std::move(values);
    return t;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }

  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }

  double& operator()(std::size_t i) {
    assert(rank() == 1 && i < shape_[0]);
    return v_[i];
  }
  double operator()(std::size_t i) const {
    assert(rank() == 1 && i < shape_[0]);
    return v_[i];
  }
  double& operator()(std::size_t i, std::size_t j) {
    assert(rank() == 2 && i < shape_[0] && j < shape_[1]);
    return v_[i * shape_[1] + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(rank() == 2 && i < shape_[0] && j < shape_[1]);
    return v_[i * shape_[1] + j];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    assert(rank() == 3 && i < shape_[0] && j < shape_[1] && k < shape_[2]);
    return v_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    assert(rank() == 3 && i < shape_[0] && j < shape_[1] && k < shape_[2]);
    return v_[(i * shape_[1] + j) * shape_[2] + k];
  }

  void fill(double value) { std::fill(v_.begin(), v_.end(), value); }
  void zero() { fill(0.0); }

  // Same storage under a new shape; element count must match.
  Tensor reshaped(std::vector<std::size_t> new_shape) const {
    if (numel_of(new_shape) != v_.size())
      throw std::invalid_argument("Tensor::reshaped: element count mismatch");
    Tensor t;
    t.shape_ = std::move(new_shape);
    t.v_ = v_;
    return t;
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  // Elementwise accumulate: this += scale * other.
  void axpy(double scale, const Tensor& other) {
    assert(same_shape(other));
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += scale * other.v_[i];
  }

  double sum() const { return std::accumulate(v_.begin(), v_.end(), 0.0); }

  static std::size_t numel_of(const std::vector<std::size_t>& shape) {
    std::size_t n = shape.empty() ? 0 : 1;
    for (std::size_t d : shape) n *= d;
    return n;
  }

  std::string shape_str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> v_;
};

// A trainable tensor with its paired gradient buffer.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
    grad = Tensor(value.shape());
  }

  void zero_grad() { grad.zero(); }
  std::size_t size() const { return value.size(); }
};

using ParamRefs = std::vector<Parameter*>;

inline void zero_grads(const ParamRefs& params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace pse
