#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "pse/core/adam.hpp"
#include "pse/core/errors.hpp"
#include "pse/core/ops.hpp"
#include "pse/data/alphabet.hpp"

namespace pse {

constexpr std::size_t kSsClasses = 8;

// Centered width-k window of one-hot tokens; boundaries pad with the
// unknown token.
inline Tensor kmer_onehot_features(const std::vector<int>& tokens,
                                   std::size_t k) {
  if (k % 2 == 0 || k == 0)
    throw ConfigError("kmer features: k must be odd");
  const std::size_t n = tokens.size();
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  Tensor out({n, k * Alphabet::kSize});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t w = 0; w < k; ++w) {
      const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(i) -
                                 half + static_cast<std::ptrdiff_t>(w);
      const int tok = (pos < 0 || pos >= static_cast<std::ptrdiff_t>(n))
                          ? Alphabet::kUnknown
                          : tokens[static_cast<std::size_t>(pos)];
      out(i, w * Alphabet::kSize + static_cast<std::size_t>(tok)) = 1.0;
    }
  return out;
}

struct SsProbeConfig {
  std::size_t hidden = 256;
  std::size_t epochs = 10;
  std::size_t batch_size = 256;
  double lr = 0.001;
  std::uint64_t seed = 0;
};

struct SsProbeResult {
  double accuracy = 0.0;
  double perplexity = 0.0;
  double train_accuracy = 0.0;
  double train_perplexity = 0.0;
  std::vector<std::string> warnings;
};

namespace probe_detail {

struct Mlp {
  Parameter w1, b1, w2, b2, w3, b3;

  void init(std::size_t features, std::size_t hidden, Rng& rng) {
    w1 = Parameter("probe.w1", Tensor({hidden, features}));
    b1 = Parameter("probe.b1", Tensor({hidden}));
    w2 = Parameter("probe.w2", Tensor({hidden, hidden}));
    b2 = Parameter("probe.b2", Tensor({hidden}));
    w3 = Parameter("probe.w3", Tensor({kSsClasses, hidden}));
    b3 = Parameter("probe.b3", Tensor({kSsClasses}));
    init_uniform_glorot(w1.value, rng);
    init_uniform_glorot(w2.value, rng);
    init_uniform_glorot(w3.value, rng);
  }

  ParamRefs params() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }

  Tensor logits(const Tensor& x) const {
    Tensor h1 = linear_forward(x, w1.value, b1.value);
    for (double& v : h1.values()) v = relu(v);
    Tensor h2 = linear_forward(h1, w2.value, b2.value);
    for (double& v : h2.values()) v = relu(v);
    return linear_forward(h2, w3.value, b3.value);
  }

  // mean cross entropy over the batch; accumulates gradients
  double loss_backward(const Tensor& x, const std::vector<int>& y) {
    const std::size_t n = x.dim(0);
    Tensor h1_pre = linear_forward(x, w1.value, b1.value);
    Tensor h1 = h1_pre;
    for (double& v : h1.values()) v = relu(v);
    Tensor h2_pre = linear_forward(h1, w2.value, b2.value);
    Tensor h2 = h2_pre;
    for (double& v : h2.values()) v = relu(v);
    Tensor logits = linear_forward(h2, w3.value, b3.value);
    Tensor d_logits({n, kSsClasses});
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = logits.data() + i * kSsClasses;
      const double lse = logsumexp(row, kSsClasses);
      const std::size_t c = static_cast<std::size_t>(y[i]);
      total -= row[c] - lse;
      for (std::size_t k = 0; k < kSsClasses; ++k)
        d_logits(i, k) = (std::exp(row[k] - lse) - (k == c ? 1.0 : 0.0)) /
                         static_cast<double>(n);
    }
    Tensor d_h2;
    linear_backward(h2, w3.value, d_logits, d_h2, w3.grad, b3.grad);
    for (std::size_t k = 0; k < d_h2.size(); ++k)
      if (h2_pre[k] <= 0.0) d_h2[k] = 0.0;
    Tensor d_h1;
    linear_backward(h1, w2.value, d_h2, d_h1, w2.grad, b2.grad);
    for (std::size_t k = 0; k < d_h1.size(); ++k)
      if (h1_pre[k] <= 0.0) d_h1[k] = 0.0;
    Tensor d_x;
    linear_backward(x, w1.value, d_h1, d_x, w1.grad, b1.grad);
    return total / static_cast<double>(n);
  }
};

inline std::pair<double, double> evaluate(const Mlp& mlp, const Tensor& x,
                                          const std::vector<int>& y) {
  const std::size_t n = x.dim(0);
  const Tensor logits = mlp.logits(x);
  double ce = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.data() + i * kSsClasses;
    const double lse = logsumexp(row, kSsClasses);
    ce -= row[static_cast<std::size_t>(y[i])] - lse;
    std::size_t best = 0;
    for (std::size_t k = 1; k < kSsClasses; ++k)
      if (row[k] > row[best]) best = k;
    correct += best == static_cast<std::size_t>(y[i]) ? 1u : 0u;
  }
  return {static_cast<double>(correct) / static_cast<double>(n),
          std::exp(ce / static_cast<double>(n))};
}

}  // namespace probe_detail

// Per-position 8-class probe: a 2-hidden-layer ReLU MLP trained with Adam,
// reporting accuracy and perplexity (exp of mean cross entropy) on the test
// split.
inline SsProbeResult ss_probe(const Tensor& train_x,
                              const std::vector<int>& train_y,
                              const Tensor& test_x,
                              const std::vector<int>& test_y,
                              const SsProbeConfig& cfg) {
  if (train_x.dim(0) == 0 || test_x.dim(0) == 0)
    throw DataError("ss_probe: empty split");
  if (train_x.dim(0) != train_y.size() || test_x.dim(0) != test_y.size())
    throw DataError("ss_probe: feature/label count mismatch");
  SsProbeResult result;
  std::set<int> train_classes(train_y.begin(), train_y.end());
  for (int c = 0; c < static_cast<int>(kSsClasses); ++c)
    if (!train_classes.count(c))
      result.warnings.push_back("class " + std::to_string(c) +
                                " absent from training split");
  Rng rng(cfg.seed);
  probe_detail::Mlp mlp;
  mlp.init(train_x.dim(1), cfg.hidden, rng);
  Adam adam({cfg.lr});
  const ParamRefs params = mlp.params();
  const std::size_t n = train_x.dim(0);
  const std::size_t f = train_x.dim(1);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n; i-- > 1;) {
      const std::size_t j = rng.uniform_index(i + 1);
      std::swap(order[i], order[j]);
    }
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      Tensor bx({stop - start, f});
      std::vector<int> by(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t src = order[k];
        for (std::size_t c = 0; c < f; ++c)
          bx(k - start, c) = train_x(src, c);
        by[k - start] = train_y[src];
      }
      zero_grads(params);
      mlp.loss_backward(bx, by);
      adam.step(params);
    }
  }
  const auto [train_acc, train_ppl] =
      probe_detail::evaluate(mlp, train_x, train_y);
  const auto [test_acc, test_ppl] = probe_detail::evaluate(mlp, test_x,
                                                           test_y);
  result.train_accuracy = train_acc;
  result.train_perplexity = train_ppl;
  result.accuracy = test_acc;
  result.perplexity = test_ppl;
  return result;
}

}  // namespace pse
