#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pse/core/checkpoint.hpp"
#include "pse/core/lstm.hpp"
#include "pse/core/ops.hpp"
#include "pse/data/alphabet.hpp"

namespace pse {

enum class EncoderArch { Linear, FullyConnected, BiLstm1, BiLstm3 };

inline const char* encoder_arch_name(EncoderArch a) {
  switch (a) {
    case EncoderArch::Linear: return "linear";
    case EncoderArch::FullyConnected: return "fc";
    case EncoderArch::BiLstm1: return "bilstm1";
    case EncoderArch::BiLstm3: return "bilstm3";
  }
  return "?";
}

inline EncoderArch encoder_arch_from_name(const std::string& s) {
  if (s == "linear") return EncoderArch::Linear;
  if (s == "fc") return EncoderArch::FullyConnected;
  if (s == "bilstm1") return EncoderArch::BiLstm1;
  if (s == "bilstm3") return EncoderArch::BiLstm3;
  throw ConfigError("unknown encoder architecture: " + s);
}

struct EncoderConfig {
  EncoderArch arch = EncoderArch::BiLstm3;
  std::size_t hidden = 64;      // per-direction biLSTM units
  std::size_t embed_dim = 32;   // output embedding dimension D
  std::size_t fusion_dim = 64;  // width of the fused input layer
  bool lm_fusion = false;
  std::size_t lm_dim = 0;       // incoming LM state dimension when fused

  std::size_t depth() const {
    return arch == EncoderArch::BiLstm3 ? 3
           : arch == EncoderArch::BiLstm1 ? 1
                                          : 0;
  }

  void validate() const {
    if (embed_dim < 1 || hidden < 1 || fusion_dim < 1)
      throw ConfigError("encoder: dims must be >= 1");
    if (lm_fusion && lm_dim == 0)
      throw ConfigError("encoder: lm_fusion requires lm_dim > 0");
  }
};

// Token sequences are fused with (optional) language-model states through
//   h_i = ReLU(W_lm h^LM_i + W_x x_i + b)
// then passed through the architecture body and a final linear projection
// into the embedding space. Without fusion the LM term is zero.
struct EncoderParams {
  EncoderConfig cfg;
  Parameter w_lm;   // (fusion_dim, lm_dim); empty when lm_dim == 0
  Parameter w_x;    // (fusion_dim, 21)
  Parameter b_in;   // (fusion_dim)
  Parameter w_h;    // FC variant hidden layer
  Parameter b_h;
  BiLstmStack stack;
  Parameter w_out;  // (embed_dim, body_dim)
  Parameter b_out;  // (embed_dim)

  std::size_t body_dim() const {
    switch (cfg.arch) {
      case EncoderArch::Linear: return cfg.fusion_dim;
      case EncoderArch::FullyConnected: return cfg.hidden;
      default: return 2 * cfg.hidden;
    }
  }

  void init(const EncoderConfig& config, Rng& rng) {
    cfg = config;
    cfg.validate();
    const std::size_t lm_dim = cfg.lm_fusion ? cfg.lm_dim : 0;
    if (lm_dim > 0) {
      w_lm = Parameter("encoder.w_lm", Tensor({cfg.fusion_dim, lm_dim}));
      init_uniform_glorot(w_lm.value, rng);
    } else {
      w_lm = Parameter("encoder.w_lm", Tensor({cfg.fusion_dim, 0}));
    }
    w_x = Parameter("encoder.w_x", Tensor({cfg.fusion_dim, Alphabet::kSize}));
    b_in = Parameter("encoder.b_in", Tensor({cfg.fusion_dim}));
    init_uniform_glorot(w_x.value, rng);
    if (cfg.arch == EncoderArch::FullyConnected) {
      w_h = Parameter("encoder.w_h", Tensor({cfg.hidden, cfg.fusion_dim}));
      b_h = Parameter("encoder.b_h", Tensor({cfg.hidden}));
      init_uniform_glorot(w_h.value, rng);
    }
    if (cfg.depth() > 0)
      stack.init("encoder", cfg.fusion_dim, cfg.hidden, cfg.depth(), rng);
    w_out = Parameter("encoder.w_out", Tensor({cfg.embed_dim, body_dim()}));
    b_out = Parameter("encoder.b_out", Tensor({cfg.embed_dim}));
    init_uniform_glorot(w_out.value, rng);
  }

  ParamRefs params() {
    ParamRefs out;
    if (w_lm.value.size() > 0) out.push_back(&w_lm);
    out.push_back(&w_x);
    out.push_back(&b_in);
    if (cfg.arch == EncoderArch::FullyConnected) {
      out.push_back(&w_h);
      out.push_back(&b_h);
    }
    for (Parameter* p : stack.params()) out.push_back(p);
    out.push_back(&w_out);
    out.push_back(&b_out);
    return out;
  }

  void save(Checkpoint& ck) {
    ck.meta["encoder.arch"] = static_cast<std::int64_t>(cfg.arch);
    ck.meta["encoder.hidden"] = static_cast<std::int64_t>(cfg.hidden);
    ck.meta["encoder.embed_dim"] = static_cast<std::int64_t>(cfg.embed_dim);
    ck.meta["encoder.fusion_dim"] = static_cast<std::int64_t>(cfg.fusion_dim);
    ck.meta["encoder.lm_fusion"] = cfg.lm_fusion ? 1 : 0;
    ck.meta["encoder.lm_dim"] = static_cast<std::int64_t>(cfg.lm_dim);
    checkpoint_put_params(ck, params());
  }

  static EncoderParams load(const Checkpoint& ck) {
    EncoderConfig cfg;
    cfg.arch = static_cast<EncoderArch>(ck.meta_required("encoder.arch"));
    cfg.hidden = static_cast<std::size_t>(ck.meta_required("encoder.hidden"));
    cfg.embed_dim =
        static_cast<std::size_t>(ck.meta_required("encoder.embed_dim"));
    cfg.fusion_dim =
        static_cast<std::size_t>(ck.meta_required("encoder.fusion_dim"));
    cfg.lm_fusion = ck.meta_required("encoder.lm_fusion") != 0;
    cfg.lm_dim = static_cast<std::size_t>(ck.meta_required("encoder.lm_dim"));
    EncoderParams enc;
    Rng scratch(0);
    enc.init(cfg, scratch);
    checkpoint_get_params(ck, enc.params());
    return enc;
  }
};

inline Tensor one_hot_tokens(const std::vector<int>& tokens) {
  Tensor x({tokens.size(), Alphabet::kSize});
  for (std::size_t t = 0; t < tokens.size(); ++t)
    x(t, static_cast<std::size_t>(tokens[t])) = 1.0;
  return x;
}

// h_i = W_lm h^LM_i + W_x x_i + b, before the ReLU. With fusion disabled the
// LM term is dropped, equivalent to zero LM states.
inline Tensor fusion_preactivation(const EncoderParams& enc,
                                   const Tensor& onehot,
                                   const Tensor* lm_states) {
  Tensor pre = linear_forward(onehot, enc.w_x.value, enc.b_in.value);
  if (lm_states != nullptr && enc.w_lm.value.size() > 0) {
    const std::size_t n = onehot.dim(0);
    const std::size_t fd = enc.cfg.fusion_dim, ld = enc.cfg.lm_dim;
    if (lm_states->dim(0) != n || lm_states->dim(1) != ld)
      throw ShapeError("fusion: language-model state shape mismatch");
    for (std::size_t t = 0; t < n; ++t) {
      const double* h = lm_states->data() + t * ld;
      for (std::size_t o = 0; o < fd; ++o) {
        const double* w = enc.w_lm.value.data() + o * ld;
        double acc = 0.0;
        for (std::size_t k = 0; k < ld; ++k) acc += w[k] * h[k];
        pre(t, o) += acc;
      }
    }
  }
  return pre;
}

inline Tensor fuse_inputs(const EncoderParams& enc, const Tensor& onehot,
                          const Tensor* lm_states) {
  Tensor pre = fusion_preactivation(enc, onehot, lm_states);
  for (double& v : pre.values()) v = relu(v);
  return pre;
}

struct EncoderTrace {
  Tensor onehot;       // (n, 21)
  const Tensor* lm = nullptr;  // borrowed; (n, lm_dim) when fused
  Tensor fused_pre;    // (n, fusion_dim) pre-ReLU
  Tensor fused;        // (n, fusion_dim)
  Tensor fc_pre;       // FC variant only
  Tensor fc_act;
  BiLstmStackTrace stack;
  Tensor z;            // (n, embed_dim)
};

// lm_states must be non-null iff the encoder was built with LM fusion.
inline EncoderTrace encode(const EncoderParams& enc,
                           const std::vector<int>& tokens,
                           const Tensor* lm_states) {
  if (tokens.empty()) throw DataError("encode: empty sequence");
  const bool fused_lm = enc.cfg.lm_fusion && enc.w_lm.value.size() > 0;
  if (fused_lm) {
    if (lm_states == nullptr)
      throw ConfigError("encode: encoder expects language-model states");
    if (lm_states->dim(0) != tokens.size() ||
        lm_states->dim(1) != enc.cfg.lm_dim)
      throw ShapeError("encode: language-model state shape mismatch");
  }
  EncoderTrace tr;
  tr.onehot = one_hot_tokens(tokens);
  tr.lm = fused_lm ? lm_states : nullptr;
  tr.fused_pre = fusion_preactivation(enc, tr.onehot, tr.lm);
  tr.fused = Tensor(tr.fused_pre.shape());
  for (std::size_t k = 0; k < tr.fused_pre.size(); ++k)
    tr.fused[k] = relu(tr.fused_pre[k]);

  const Tensor* body = &tr.fused;
  switch (enc.cfg.arch) {
    case EncoderArch::Linear:
      break;
    case EncoderArch::FullyConnected: {
      tr.fc_pre = linear_forward(tr.fused, enc.w_h.value, enc.b_h.value);
      tr.fc_act = Tensor(tr.fc_pre.shape());
      for (std::size_t k = 0; k < tr.fc_pre.size(); ++k)
        tr.fc_act[k] = relu(tr.fc_pre[k]);
      body = &tr.fc_act;
      break;
    }
    default: {
      tr.stack = bilstm_stack_forward(enc.stack, tr.fused);
      body = &tr.stack.top();
      break;
    }
  }
  tr.z = linear_forward(*body, enc.w_out.value, enc.b_out.value);
  return tr;
}

// Accumulates parameter gradients from dZ. Gradients w.r.t. the frozen LM
// states are intentionally not produced.
inline void encode_backward(EncoderParams& enc, const EncoderTrace& tr,
                            const Tensor& dZ) {
  const Tensor* body = &tr.fused;
  if (enc.cfg.arch == EncoderArch::FullyConnected) body = &tr.fc_act;
  if (enc.cfg.depth() > 0) body = &tr.stack.top();

  Tensor d_body;
  linear_backward(*body, enc.w_out.value, dZ, d_body, enc.w_out.grad,
                  enc.b_out.grad);

  Tensor d_fused;
  switch (enc.cfg.arch) {
    case EncoderArch::Linear:
      d_fused = std::move(d_body);
      break;
    case EncoderArch::FullyConnected: {
      for (std::size_t k = 0; k < d_body.size(); ++k)
        if (tr.fc_pre[k] <= 0.0) d_body[k] = 0.0;
      linear_backward(tr.fused, enc.w_h.value, d_body, d_fused, enc.w_h.grad,
                      enc.b_h.grad);
      break;
    }
    default:
      bilstm_stack_backward(enc.stack, tr.fused, tr.stack, d_body, d_fused);
      break;
  }
  for (std::size_t k = 0; k < d_fused.size(); ++k)
    if (tr.fused_pre[k] <= 0.0) d_fused[k] = 0.0;
  Tensor d_onehot;
  linear_backward(tr.onehot, enc.w_x.value, d_fused, d_onehot, enc.w_x.grad,
                  enc.b_in.grad);
  if (tr.lm != nullptr) {
    // only the fusion weights learn from the LM path
    const std::size_t n = tr.onehot.dim(0);
    const std::size_t fd = enc.cfg.fusion_dim, ld = enc.cfg.lm_dim;
    for (std::size_t t = 0; t < n; ++t) {
      const double* h = tr.lm->data() + t * ld;
      for (std::size_t o = 0; o < fd; ++o) {
        const double g = d_fused(t, o);
        if (g == 0.0) continue;
        double* gw = enc.w_lm.grad.data() + o * ld;
        for (std::size_t k = 0; k < ld; ++k) gw[k] += g * h[k];
      }
    }
  }
}

}  // namespace pse
