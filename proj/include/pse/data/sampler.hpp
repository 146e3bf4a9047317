#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pse/core/errors.hpp"
#include "pse/core/rng.hpp"
#include "pse/data/alphabet.hpp"
#include "pse/data/records.hpp"

namespace pse {

struct PairSamplerConfig {
  double smoothing = 0.5;        // exponent s in N_t^s
  std::size_t batch_size = 64;
  std::size_t epoch_size = 100000;
  std::uint64_t seed = 0;

  void validate() const {
    if (smoothing < 0.0) throw ConfigError("smoothing exponent must be >= 0");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  }
};

struct SampledPair {
  std::size_t a = 0;
  std::size_t b = 0;
  int level = 0;
};

// Two-stage sampler: level t with probability N_t^s / sum_u N_u^s, then a
// uniform pair within the level; with replacement. Levels with no pairs are
// excluded from the distribution.
class PairSampler {
 public:
  PairSampler(const Dataset& ds, const PairSamplerConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    buckets_ = pairs_by_level(ds);
    weights_.resize(5, 0.0);
    bool any = false;
    for (std::size_t t = 0; t < 5; ++t) {
      const double count = static_cast<double>(buckets_[t].size());
      if (count > 0.0) {
        weights_[t] = std::pow(count, cfg.smoothing);
        any = true;
      }
    }
    if (!any) throw DataError("pair sampler: dataset has no labeled pairs");
  }

  const std::vector<double>& level_weights() const { return weights_; }

  std::vector<double> level_probabilities() const {
    double total = 0.0;
    for (double w : weights_) total += w;
    std::vector<double> probs(5);
    for (std::size_t t = 0; t < 5; ++t) probs[t] = weights_[t] / total;
    return probs;
  }

  std::size_t pair_count(int level) const {
    return buckets_[static_cast<std::size_t>(level)].size();
  }

  SampledPair sample(Rng& rng) const {
    const std::size_t level = rng.categorical(weights_);
    const auto& bucket = buckets_[level];
    const auto [a, b] = bucket[rng.uniform_index(bucket.size())];
    return {a, b, static_cast<int>(level)};
  }

  std::vector<SampledPair> sample_batch(Rng& rng) const {
    std::vector<SampledPair> out;
    out.reserve(cfg_.batch_size);
    for (std::size_t k = 0; k < cfg_.batch_size; ++k)
      out.push_back(sample(rng));
    return out;
  }

 private:
  PairSamplerConfig cfg_;
  std::array<std::vector<std::pair<std::size_t, std::size_t>>, 5> buckets_;
  std::vector<double> weights_;
};

// Each position is independently resampled with probability p from the
// uniform distribution over the 20 canonical residues (the draw may equal
// the original token).
inline std::vector<int> perturb_sequence(const std::vector<int>& tokens,
                                         double p, Rng& rng) {
  if (p < 0.0 || p > 1.0)
    throw ConfigError("perturbation probability must be in [0,1]");
  std::vector<int> out = tokens;
  if (p == 0.0) return out;
  for (int& t : out)
    if (rng.bernoulli(p))
      t = static_cast<int>(rng.uniform_index(Alphabet::kCanonical));
  return out;
}

}  // namespace pse
