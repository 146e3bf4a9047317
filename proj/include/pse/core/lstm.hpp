#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pse/core/ops.hpp"
#include "pse/core/rng.hpp"
#include "pse/core/tensor.hpp"

namespace pse {

// One direction of an LSTM. Gate weights are stacked [input, forget,
// candidate, output] along the first axis; the forget-gate bias slice is
// initialized to 1.0. Initial hidden/cell states are learned parameters.
struct LstmCellParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Parameter W;   // (4H, X)
  Parameter U;   // (4H, H)
  Parameter b;   // (4H)
  Parameter h0;  // (H)
  Parameter c0;  // (H)

  void init(const std::string& prefix, std::size_t in_dim, std::size_t hid,
            Rng& rng) {
    input_dim = in_dim;
    hidden_dim = hid;
    W = Parameter(prefix + ".W", Tensor({4 * hid, in_dim}));
    U = Parameter(prefix + ".U", Tensor({4 * hid, hid}));
    b = Parameter(prefix + ".b", Tensor({4 * hid}));
    h0 = Parameter(prefix + ".h0", Tensor({hid}));
    c0 = Parameter(prefix + ".c0", Tensor({hid}));
    init_uniform_glorot(W.value, rng);
    init_uniform_glorot(U.value, rng);
    for (std::size_t k = hid; k < 2 * hid; ++k) b.value[k] = 1.0;
  }

  ParamRefs params() { return {&W, &U, &b, &h0, &c0}; }
};

struct LstmStepCache {
  Tensor gi, gf, gg, go;  // post-activation gates, (H) each
  Tensor tanh_c;          // tanh of the new cell state
};

// h_out/c_out may not alias h_prev/c_prev.
inline void lstm_cell_forward(const LstmCellParams& p, const double* x,
                              const double* h_prev, const double* c_prev,
                              double* h_out, double* c_out,
                              LstmStepCache& cache) {
  const std::size_t H = p.hidden_dim, X = p.input_dim;
  cache.gi = Tensor({H});
  cache.gf = Tensor({H});
  cache.gg = Tensor({H});
  cache.go = Tensor({H});
  cache.tanh_c = Tensor({H});
  std::vector<double> pre(4 * H);
  for (std::size_t r = 0; r < 4 * H; ++r) {
    const double* w = p.W.value.data() + r * X;
    const double* u = p.U.value.data() + r * H;
    double acc = p.b.value[r];
    for (std::size_t k = 0; k < X; ++k) acc += w[k] * x[k];
    for (std::size_t k = 0; k < H; ++k) acc += u[k] * h_prev[k];
    pre[r] = acc;
  }
  for (std::size_t k = 0; k < H; ++k) {
    const double i = sigmoid(pre[k]);
    const double f = sigmoid(pre[H + k]);
    const double g = std::tanh(pre[2 * H + k]);
    const double o = sigmoid(pre[3 * H + k]);
    const double c = f * c_prev[k] + i * g;
    const double tc = std::tanh(c);
    cache.gi[k] = i;
    cache.gf[k] = f;
    cache.gg[k] = g;
    cache.go[k] = o;
    cache.tanh_c[k] = tc;
    c_out[k] = c;
    h_out[k] = o * tc;
  }
}

// Exact reverse-mode step. dx/dh_prev/dc_prev are accumulated (+=); dh/dc are
// the upstream gradients w.r.t. h_t and c_t.
inline void lstm_cell_backward(LstmCellParams& p, const double* x,
                               const double* h_prev, const double* c_prev,
                               const LstmStepCache& cache, const double* dh,
                               const double* dc, double* dx, double* dh_prev,
                               double* dc_prev) {
  const std::size_t H = p.hidden_dim, X = p.input_dim;
  std::vector<double> dpre(4 * H);
  for (std::size_t k = 0; k < H; ++k) {
    const double i = cache.gi[k], f = cache.gf[k], g = cache.gg[k],
                 o = cache.go[k], tc = cache.tanh_c[k];
    const double dtotal_c = dc[k] + dh[k] * o * (1.0 - tc * tc);
    dpre[k] = dtotal_c * g * i * (1.0 - i);
    dpre[H + k] = dtotal_c * c_prev[k] * f * (1.0 - f);
    dpre[2 * H + k] = dtotal_c * i * (1.0 - g * g);
    dpre[3 * H + k] = dh[k] * tc * o * (1.0 - o);
    dc_prev[k] += dtotal_c * f;
  }
  for (std::size_t r = 0; r < 4 * H; ++r) {
    const double g = dpre[r];
    if (g == 0.0) continue;
    const double* w = p.W.value.data() + r * X;
    const double* u = p.U.value.data() + r * H;
    double* gw = p.W.grad.data() + r * X;
    double* gu = p.U.grad.data() + r * H;
    p.b.grad[r] += g;
    for (std::size_t k = 0; k < X; ++k) {
      dx[k] += g * w[k];
      gw[k] += g * x[k];
    }
    for (std::size_t k = 0; k < H; ++k) {
      dh_prev[k] += g * u[k];
      gu[k] += g * h_prev[k];
    }
  }
}

// States of one directional run over a sequence. Rows of hs/cs are indexed by
// processing step: row 0 holds the initial state, row t+1 the state after
// consuming the t-th processed position.
struct LstmRunTrace {
  Tensor hs;  // (n+1, H)
  Tensor cs;  // (n+1, H)
  std::vector<LstmStepCache> steps;
};

// Runs the cell over the rows of `inputs` (n, X). With reverse=true the
// processing order is position n-1 down to 0.
inline LstmRunTrace lstm_run(const LstmCellParams& p, const Tensor& inputs,
                             bool reverse) {
  const std::size_t n = inputs.dim(0);
  const std::size_t H = p.hidden_dim;
  if (inputs.dim(1) != p.input_dim)
    throw ShapeError("lstm_run: input dim mismatch");
  LstmRunTrace tr;
  tr.hs = Tensor({n + 1, H});
  tr.cs = Tensor({n + 1, H});
  tr.steps.resize(n);
  for (std::size_t k = 0; k < H; ++k) {
    tr.hs(0, k) = p.h0.value[k];
    tr.cs(0, k) = p.c0.value[k];
  }
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t pos = reverse ? n - 1 - step : step;
    lstm_cell_forward(p, inputs.data() + pos * p.input_dim,
                      tr.hs.data() + step * H, tr.cs.data() + step * H,
                      tr.hs.data() + (step + 1) * H,
                      tr.cs.data() + (step + 1) * H, tr.steps[step]);
  }
  return tr;
}

// d_hs has shape (n+1, H): row t+1 is the upstream gradient on the state
// after step t, row 0 any extra gradient on the initial state. d_inputs is
// accumulated by position.
inline void lstm_run_backward(LstmCellParams& p, const Tensor& inputs,
                              const LstmRunTrace& tr, bool reverse,
                              const Tensor& d_hs, Tensor& d_inputs) {
  const std::size_t n = inputs.dim(0);
  const std::size_t H = p.hidden_dim;
  if (!d_inputs.same_shape(inputs)) d_inputs = Tensor(inputs.shape());
  std::vector<double> dh(H, 0.0), dc(H, 0.0), dh_prev(H), dc_prev(H);
  for (std::size_t s = n; s-- > 0;) {
    const std::size_t pos = reverse ? n - 1 - s : s;
    for (std::size_t k = 0; k < H; ++k) {
      dh[k] += d_hs(s + 1, k);
      dh_prev[k] = 0.0;
      dc_prev[k] = 0.0;
    }
    lstm_cell_backward(p, inputs.data() + pos * p.input_dim,
                       tr.hs.data() + s * H, tr.cs.data() + s * H,
                       tr.steps[s], dh.data(), dc.data(),
                       d_inputs.data() + pos * p.input_dim, dh_prev.data(),
                       dc_prev.data());
    dh = dh_prev;
    dc = dc_prev;
  }
  for (std::size_t k = 0; k < H; ++k) {
    p.h0.grad[k] += dh[k] + d_hs(0, k);
    p.c0.grad[k] += dc[k];
  }
}

// Bidirectional layer: output row t is [forward state after reading
// positions 0..t ; reverse state after reading positions n-1..t].
struct BiLstmLayer {
  LstmCellParams fwd;
  LstmCellParams rev;

  void init(const std::string& prefix, std::size_t in_dim, std::size_t hid,
            Rng& rng) {
    fwd.init(prefix + ".fwd", in_dim, hid, rng);
    rev.init(prefix + ".rev", in_dim, hid, rng);
  }

  std::size_t output_dim() const { return 2 * fwd.hidden_dim; }

  ParamRefs params() {
    ParamRefs out = fwd.params();
    for (Parameter* p : rev.params()) out.push_back(p);
    return out;
  }
};

struct BiLstmTrace {
  LstmRunTrace fwd;
  LstmRunTrace rev;
  Tensor out;  // (n, 2H)
};

inline BiLstmTrace bilstm_forward(const BiLstmLayer& layer,
                                  const Tensor& inputs) {
  const std::size_t n = inputs.dim(0);
  const std::size_t H = layer.fwd.hidden_dim;
  BiLstmTrace tr;
  tr.fwd = lstm_run(layer.fwd, inputs, false);
  tr.rev = lstm_run(layer.rev, inputs, true);
  tr.out = Tensor({n, 2 * H});
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < H; ++k) {
      tr.out(t, k) = tr.fwd.hs(t + 1, k);
      // reverse step that consumed position t is step n-1-t
      tr.out(t, H + k) = tr.rev.hs(n - t, k);
    }
  }
  return tr;
}

inline void bilstm_backward(BiLstmLayer& layer, const Tensor& inputs,
                            const BiLstmTrace& tr, const Tensor& d_out,
                            Tensor& d_inputs) {
  const std::size_t n = inputs.dim(0);
  const std::size_t H = layer.fwd.hidden_dim;
  Tensor d_fwd({n + 1, H}), d_rev({n + 1, H});
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < H; ++k) {
      d_fwd(t + 1, k) = d_out(t, k);
      d_rev(n - t, k) = d_out(t, H + k);
    }
  }
  if (!d_inputs.same_shape(inputs)) d_inputs = Tensor(inputs.shape());
  lstm_run_backward(layer.fwd, inputs, tr.fwd, false, d_fwd, d_inputs);
  lstm_run_backward(layer.rev, inputs, tr.rev, true, d_rev, d_inputs);
}

// Stack of bidirectional layers; layer l>0 consumes the 2H outputs below.
struct BiLstmStack {
  std::vector<BiLstmLayer> layers;

  void init(const std::string& prefix, std::size_t in_dim, std::size_t hid,
            std::size_t depth, Rng& rng) {
    layers.resize(depth);
    std::size_t cur = in_dim;
    for (std::size_t l = 0; l < depth; ++l) {
      layers[l].init(prefix + ".layer" + std::to_string(l), cur, hid, rng);
      cur = 2 * hid;
    }
  }

  ParamRefs params() {
    ParamRefs out;
    for (BiLstmLayer& l : layers)
      for (Parameter* p : l.params()) out.push_back(p);
    return out;
  }
};

struct BiLstmStackTrace {
  std::vector<BiLstmTrace> layers;
  const Tensor& top() const { return layers.back().out; }
};

inline BiLstmStackTrace bilstm_stack_forward(const BiLstmStack& stack,
                                             const Tensor& inputs) {
  BiLstmStackTrace tr;
  tr.layers.reserve(stack.layers.size());
  const Tensor* cur = &inputs;
  for (const BiLstmLayer& layer : stack.layers) {
    tr.layers.push_back(bilstm_forward(layer, *cur));
    cur = &tr.layers.back().out;
  }
  return tr;
}

inline void bilstm_stack_backward(BiLstmStack& stack, const Tensor& inputs,
                                  const BiLstmStackTrace& tr,
                                  const Tensor& d_top, Tensor& d_inputs) {
  const std::size_t depth = stack.layers.size();
  Tensor carry = d_top;
  for (std::size_t l = depth; l-- > 0;) {
    const Tensor& layer_in = l == 0 ? inputs : tr.layers[l - 1].out;
    Tensor d_in(layer_in.shape());
    bilstm_backward(stack.layers[l], layer_in, tr.layers[l], carry, d_in);
    carry = std::move(d_in);
  }
  d_inputs = std::move(carry);
}

}  // namespace pse
