#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pse/core/adam.hpp"
#include "pse/core/checkpoint.hpp"
#include "pse/core/lstm.hpp"
#include "pse/core/ops.hpp"
#include "pse/data/records.hpp"
#include "pse/model/encoder.hpp"

namespace pse {

struct LmConfig {
  std::size_t hidden = 128;
  std::size_t layers = 2;

  void validate() const {
    if (hidden < 1 || layers < 1) throw ConfigError("lm: dims must be >= 1");
  }
};

// Bidirectional LSTM language model. One stack of LSTM layers is shared by
// the forward and reverse passes; a linear head maps hidden states to 20-way
// residue logits. The position-i prediction sums the forward log-probability
// (conditioned on tokens before i) and the reverse one (tokens after i).
struct LanguageModelParams {
  LmConfig cfg;
  std::vector<LstmCellParams> stack;
  Parameter proj_W;  // (20, hidden)
  Parameter proj_b;  // (20)

  void init(const LmConfig& config, Rng& rng) {
    cfg = config;
    cfg.validate();
    stack.resize(cfg.layers);
    std::size_t in_dim = Alphabet::kSize;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      stack[l].init("lm.layer" + std::to_string(l), in_dim, cfg.hidden, rng);
      in_dim = cfg.hidden;
    }
    proj_W = Parameter("lm.proj_W", Tensor({Alphabet::kCanonical, cfg.hidden}));
    proj_b = Parameter("lm.proj_b", Tensor({Alphabet::kCanonical}));
    init_uniform_glorot(proj_W.value, rng);
  }

  // Dimension of the per-position state handed to the encoder:
  // 2 directions x layers x hidden.
  std::size_t state_dim() const { return 2 * cfg.layers * cfg.hidden; }

  ParamRefs params() {
    ParamRefs out;
    for (LstmCellParams& cell : stack)
      for (Parameter* p : cell.params()) out.push_back(p);
    out.push_back(&proj_W);
    out.push_back(&proj_b);
    return out;
  }

  void save(const std::string& path) {
    Checkpoint ck;
    ck.kind = "lm";
    ck.meta["lm.hidden"] = static_cast<std::int64_t>(cfg.hidden);
    ck.meta["lm.layers"] = static_cast<std::int64_t>(cfg.layers);
    checkpoint_put_params(ck, params());
    ck.save(path);
  }

  static LanguageModelParams load(const std::string& path) {
    Checkpoint ck = Checkpoint::load(path);
    if (ck.kind != "lm")
      throw CheckpointError("expected an lm checkpoint, got kind '" + ck.kind +
                            "'");
    LmConfig cfg;
    cfg.hidden = static_cast<std::size_t>(ck.meta_required("lm.hidden"));
    cfg.layers = static_cast<std::size_t>(ck.meta_required("lm.layers"));
    LanguageModelParams lm;
    Rng scratch(0);
    lm.init(cfg, scratch);
    checkpoint_get_params(ck, lm.params());
    return lm;
  }
};

namespace lm_detail {

// States re-indexed by sequence position: row p holds the hidden state after
// that direction's pass has consumed position p.
inline Tensor states_by_position(const LstmRunTrace& tr, bool reverse) {
  const std::size_t n = tr.hs.dim(0) - 1;
  const std::size_t H = tr.hs.dim(1);
  Tensor out({n, H});
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t row = reverse ? n - p : p + 1;
    for (std::size_t k = 0; k < H; ++k) out(p, k) = tr.hs(row, k);
  }
  return out;
}

inline void add_position_grads_to_hs(const Tensor& d_by_pos, bool reverse,
                                     Tensor& d_hs) {
  const std::size_t n = d_by_pos.dim(0), H = d_by_pos.dim(1);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t row = reverse ? n - p : p + 1;
    for (std::size_t k = 0; k < H; ++k) d_hs(row, k) += d_by_pos(p, k);
  }
}

struct LmDirTrace {
  std::vector<Tensor> layer_inputs;   // per layer, position-indexed
  std::vector<LstmRunTrace> layers;
};

inline LmDirTrace run_direction(const LanguageModelParams& lm,
                                const Tensor& onehot, bool reverse) {
  LmDirTrace tr;
  tr.layer_inputs.push_back(onehot);
  for (std::size_t l = 0; l < lm.cfg.layers; ++l) {
    tr.layers.push_back(lstm_run(lm.stack[l], tr.layer_inputs[l], reverse));
    if (l + 1 < lm.cfg.layers)
      tr.layer_inputs.push_back(states_by_position(tr.layers[l], reverse));
  }
  return tr;
}

inline void backward_direction(LanguageModelParams& lm, LmDirTrace& tr,
                               bool reverse, std::vector<Tensor>& d_hs) {
  for (std::size_t l = lm.cfg.layers; l-- > 0;) {
    Tensor d_in;
    lstm_run_backward(lm.stack[l], tr.layer_inputs[l], tr.layers[l], reverse,
                      d_hs[l], d_in);
    if (l > 0) add_position_grads_to_hs(d_in, reverse, d_hs[l - 1]);
  }
}

}  // namespace lm_detail

struct LmForward {
  lm_detail::LmDirTrace fwd;
  lm_detail::LmDirTrace rev;
  Tensor logits_fwd;  // (n, 20)
  Tensor logits_rev;  // (n, 20)
};

inline LmForward lm_forward(const LanguageModelParams& lm,
                            const std::vector<int>& tokens) {
  if (tokens.empty()) throw DataError("lm_forward: empty sequence");
  const std::size_t n = tokens.size();
  const std::size_t H = lm.cfg.hidden;
  LmForward out;
  const Tensor onehot = one_hot_tokens(tokens);
  out.fwd = lm_detail::run_direction(lm, onehot, false);
  out.rev = lm_detail::run_direction(lm, onehot, true);
  // forward prediction for position i conditions on x_<i: top state row i;
  // reverse conditions on x_>i: top state row n-1-i.
  const Tensor& top_f = out.fwd.layers.back().hs;
  const Tensor& top_r = out.rev.layers.back().hs;
  Tensor pre_f({n, H}), pre_r({n, H});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < H; ++k) {
      pre_f(i, k) = top_f(i, k);
      pre_r(i, k) = top_r(n - 1 - i, k);
    }
  out.logits_fwd = linear_forward(pre_f, lm.proj_W.value, lm.proj_b.value);
  out.logits_rev = linear_forward(pre_r, lm.proj_W.value, lm.proj_b.value);
  return out;
}

// log p^F(x_i) + log p^R(x_i); the target must be a canonical residue.
inline double lm_position_logprob(const LanguageModelParams& lm,
                                  const std::vector<int>& tokens,
                                  std::size_t i) {
  if (i >= tokens.size()) throw DataError("lm_position_logprob: bad index");
  if (tokens[i] == Alphabet::kUnknown)
    throw DataError("lm_position_logprob: unknown-token target");
  const LmForward f = lm_forward(lm, tokens);
  const std::size_t c = static_cast<std::size_t>(tokens[i]);
  auto log_softmax_at = [&](const Tensor& logits) {
    const double* row = logits.data() + i * Alphabet::kCanonical;
    return row[c] - logsumexp(row, Alphabet::kCanonical);
  };
  return log_softmax_at(f.logits_fwd) + log_softmax_at(f.logits_rev);
}

// Mean over scored positions of -(log p^F + log p^R); unknown targets are
// skipped (the head only covers the 20 canonical residues).
inline double lm_loss(const LanguageModelParams& lm,
                      const std::vector<std::vector<int>>& batch) {
  if (batch.empty()) throw DataError("lm_loss: empty batch");
  double total = 0.0;
  std::size_t scored = 0;
  for (const std::vector<int>& tokens : batch) {
    const LmForward f = lm_forward(lm, tokens);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i] == Alphabet::kUnknown) continue;
      const std::size_t c = static_cast<std::size_t>(tokens[i]);
      const double* rf = f.logits_fwd.data() + i * Alphabet::kCanonical;
      const double* rr = f.logits_rev.data() + i * Alphabet::kCanonical;
      total -= rf[c] - logsumexp(rf, Alphabet::kCanonical);
      total -= rr[c] - logsumexp(rr, Alphabet::kCanonical);
      ++scored;
    }
  }
  if (scored == 0) throw DataError("lm_loss: no canonical targets in batch");
  return total / static_cast<double>(scored);
}

namespace lm_detail {

// Shared loss backward over one sequence with upstream scale already folded
// into `scale` (1 / scored positions of the batch).
inline double lm_backward_sequence(LanguageModelParams& lm,
                                   const std::vector<int>& tokens,
                                   double scale, std::size_t* scored_out) {
  const std::size_t n = tokens.size();
  const std::size_t H = lm.cfg.hidden;
  LmForward f = lm_forward(lm, tokens);
  Tensor d_logits_f({n, Alphabet::kCanonical});
  Tensor d_logits_r({n, Alphabet::kCanonical});
  double total = 0.0;
  std::size_t scored = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (tokens[i] == Alphabet::kUnknown) continue;
    const std::size_t c = static_cast<std::size_t>(tokens[i]);
    for (int dir = 0; dir < 2; ++dir) {
      const Tensor& logits = dir == 0 ? f.logits_fwd : f.logits_rev;
      Tensor& dl = dir == 0 ? d_logits_f : d_logits_r;
      const double* row = logits.data() + i * Alphabet::kCanonical;
      const double lse = logsumexp(row, Alphabet::kCanonical);
      total -= row[c] - lse;
      for (std::size_t k = 0; k < Alphabet::kCanonical; ++k)
        dl(i, k) = scale * (std::exp(row[k] - lse) - (k == c ? 1.0 : 0.0));
    }
    ++scored;
  }
  if (scored_out) *scored_out = scored;
  if (scored == 0) return 0.0;
  // projection backward into position-indexed state grads
  const Tensor& top_f = f.fwd.layers.back().hs;
  const Tensor& top_r = f.rev.layers.back().hs;
  Tensor pre_f({n, H}), pre_r({n, H});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < H; ++k) {
      pre_f(i, k) = top_f(i, k);
      pre_r(i, k) = top_r(n - 1 - i, k);
    }
  Tensor d_pre_f, d_pre_r;
  linear_backward(pre_f, lm.proj_W.value, d_logits_f, d_pre_f, lm.proj_W.grad,
                  lm.proj_b.grad);
  linear_backward(pre_r, lm.proj_W.value, d_logits_r, d_pre_r, lm.proj_W.grad,
                  lm.proj_b.grad);
  // scatter back onto the state rows used by the heads
  std::vector<Tensor> d_hs_f, d_hs_r;
  for (std::size_t l = 0; l < lm.cfg.layers; ++l) {
    d_hs_f.emplace_back(Tensor({n + 1, H}));
    d_hs_r.emplace_back(Tensor({n + 1, H}));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < H; ++k) {
      d_hs_f.back()(i, k) += d_pre_f(i, k);
      d_hs_r.back()(n - 1 - i, k) += d_pre_r(i, k);
    }
  backward_direction(lm, f.fwd, false, d_hs_f);
  backward_direction(lm, f.rev, true, d_hs_r);
  return total;
}

}  // namespace lm_detail

struct LmPretrainConfig {
  LmConfig model;
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  double lr = 0.001;
  std::uint64_t seed = 0;
};

struct LmPretrainLog {
  std::vector<double> epoch_loss;
  double final_loss = 0.0;
};

inline LmPretrainLog pretrain_lm(LanguageModelParams& lm,
                                 const std::vector<std::vector<int>>& corpus,
                                 const LmPretrainConfig& cfg) {
  if (corpus.empty()) throw DataError("pretrain_lm: empty corpus");
  Rng rng(cfg.seed);
  Adam adam({cfg.lr});
  const ParamRefs params = lm.params();
  LmPretrainLog log;
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own rng for reproducibility
    for (std::size_t i = order.size(); i-- > 1;) {
      const std::size_t j = rng.uniform_index(i + 1);
      std::swap(order[i], order[j]);
    }
    double epoch_total = 0.0;
    std::size_t epoch_scored = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + cfg.batch_size);
      std::size_t batch_scored = 0;
      for (std::size_t k = start; k < stop; ++k)
        for (int t : corpus[order[k]])
          if (t != Alphabet::kUnknown) ++batch_scored;
      if (batch_scored == 0) continue;
      zero_grads(params);
      double batch_total = 0.0;
      const double scale = 1.0 / static_cast<double>(batch_scored);
      for (std::size_t k = start; k < stop; ++k) {
        std::size_t scored = 0;
        batch_total += lm_detail::lm_backward_sequence(lm, corpus[order[k]],
                                                       scale, &scored);
      }
      adam.step(params);
      epoch_total += batch_total;
      epoch_scored += batch_scored;
    }
    log.epoch_loss.push_back(epoch_total /
                             static_cast<double>(epoch_scored));
  }
  log.final_loss = log.epoch_loss.empty() ? 0.0 : log.epoch_loss.back();
  return log;
}

// Per-position feature for the encoder: concatenation over layers of the
// forward state at i and the reverse state at i. Deterministic, and no
// gradient path exists back into the language model.
inline Tensor lm_hidden_states(const LanguageModelParams& lm,
                               const std::vector<int>& tokens) {
  const std::size_t n = tokens.size();
  const std::size_t H = lm.cfg.hidden;
  const Tensor onehot = one_hot_tokens(tokens);
  const lm_detail::LmDirTrace fwd = lm_detail::run_direction(lm, onehot, false);
  const lm_detail::LmDirTrace rev = lm_detail::run_direction(lm, onehot, true);
  Tensor out({n, lm.state_dim()});
  for (std::size_t l = 0; l < lm.cfg.layers; ++l) {
    const Tensor f = lm_detail::states_by_position(fwd.layers[l], false);
    const Tensor r = lm_detail::states_by_position(rev.layers[l], true);
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t k = 0; k < H; ++k) {
        out(p, l * H + k) = f(p, k);
        out(p, (lm.cfg.layers + l) * H + k) = r(p, k);
      }
  }
  return out;
}

}  // namespace pse
