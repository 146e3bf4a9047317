#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pse/core/rng.hpp"
#include "pse/core/tensor.hpp"

namespace pse {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x) without overflow; also log sigmoid(x) = -softplus(-x).
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// y = x W^T + b applied row-wise: x is (n, in), W is (out, in), b is (out).
// Rank-1 x is treated as a single row and returns rank-1 y.
inline Tensor linear_forward(const Tensor& x, const Tensor& W,
                             const Tensor& b) {
  if (W.rank() != 2 || b.rank() != 1 || b.dim(0) != W.dim(0))
    throw ShapeError("linear_forward: bad parameter shapes");
  const std::size_t out = W.dim(0), in = W.dim(1);
  const bool vec = x.rank() == 1;
  const std::size_t n = vec ? 1 : x.dim(0);
  const std::size_t xin = vec ? x.dim(0) : x.dim(1);
  if (xin != in)
    throw ShapeError("linear_forward: input dim " + std::to_string(xin) +
                     " != weight dim " + std::to_string(in));
  Tensor y = vec ? Tensor({out}) : Tensor({n, out});
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x.data() + r * in;
    double* yr = y.data() + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* w = W.data() + o * in;
      double acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += w[i] * xr[i];
      yr[o] = acc;
    }
  }
  return y;
}

// Accumulates dW, db and fills dx (same shape as x) given upstream dy.
inline void linear_backward(const Tensor& x, const Tensor& W, const Tensor& dy,
                            Tensor& dx, Tensor& dW, Tensor& db) {
  const std::size_t out = W.dim(0), in = W.dim(1);
  const bool vec = x.rank() == 1;
  const std::size_t n = vec ? 1 : x.dim(0);
  if (!dx.same_shape(x)) dx = Tensor(x.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x.data() + r * in;
    const double* gy = dy.data() + r * out;
    double* gx = dx.data() + r * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = gy[o];
      if (g == 0.0) continue;
      const double* w = W.data() + o * in;
      double* gw = dW.data() + o * in;
      db[o] += g;
      for (std::size_t i = 0; i < in; ++i) {
        gx[i] += g * w[i];
        gw[i] += g * xr[i];
      }
    }
  }
}

// Row-wise softmax with max subtraction. Works on (n, m) or rank-1 input.
inline Tensor softmax_rows(const Tensor& logits) {
  const bool vec = logits.rank() == 1;
  const std::size_t n = vec ? 1 : logits.dim(0);
  const std::size_t m = vec ? logits.dim(0) : logits.dim(1);
  Tensor out(logits.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const double* in = logits.data() + r * m;
    double* o = out.data() + r * m;
    double mx = in[0];
    for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, in[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      o[j] = std::exp(in[j] - mx);
      z += o[j];
    }
    for (std::size_t j = 0; j < m; ++j) o[j] /= z;
  }
  return out;
}

inline double logsumexp(const double* x, std::size_t n) {
  double mx = x[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  if (!std::isfinite(mx)) return mx;  // all -inf stays -inf
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::exp(x[i] - mx);
  return mx + std::log(acc);
}

// Glorot-uniform init over the last two dims (fan_out, fan_in).
inline void init_uniform_glorot(Tensor& t, Rng& rng) {
  if (t.rank() != 2) throw ShapeError("glorot init expects a matrix");
  const double fan_out = static_cast<double>(t.dim(0));
  const double fan_in = static_cast<double>(t.dim(1));
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& x : t.values()) x = rng.uniform(-bound, bound);
}

inline void init_uniform(Tensor& t, Rng& rng, double bound) {
  for (double& x : t.values()) x = rng.uniform(-bound, bound);
}

inline void require_finite(const Tensor& t, const char* what) {
  if (!t.all_finite())
    throw NumericError(std::string("non-finite values in ") + what);
}

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x))
    throw NumericError(std::string("non-finite value in ") + what);
}

}  // namespace pse
