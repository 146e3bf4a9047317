#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pse/core/rng.hpp"
#include "pse/eval/ss_probe.hpp"

using namespace pse;

TEST_CASE("kmer features use a centered window padded with unknown") {
  const std::vector<int> tokens{3, 7, 11};
  const Tensor f = kmer_onehot_features(tokens, 3);
  REQUIRE(f.dim(0) == 3);
  REQUIRE(f.dim(1) == 3 * 21);
  // position 0: window [pad, 3, 7]
  REQUIRE(f(0, 0 * 21 + Alphabet::kUnknown) == 1.0);
  REQUIRE(f(0, 1 * 21 + 3) == 1.0);
  REQUIRE(f(0, 2 * 21 + 7) == 1.0);
  // position 2: window [7, 11, pad]
  REQUIRE(f(2, 0 * 21 + 7) == 1.0);
  REQUIRE(f(2, 2 * 21 + Alphabet::kUnknown) == 1.0);
  REQUIRE_THROWS_AS(kmer_onehot_features(tokens, 4), ConfigError);
}

TEST_CASE("probe reaches uniform perplexity on unlearnable labels") {
  // features carry no signal: identical rows; labels spread over 8 classes
  const std::size_t n = 400;
  Tensor x({n, 4});
  Rng rng(3);
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i)
    y.push_back(static_cast<int>(rng.uniform_index(8)));
  SsProbeConfig cfg;
  cfg.hidden = 16;
  cfg.epochs = 6;
  cfg.batch_size = 64;
  const SsProbeResult r = ss_probe(x, y, x, y, cfg);
  // best achievable is the empirical class distribution: perplexity close to
  // 8 and accuracy near 1/8 for balanced labels
  REQUIRE_THAT(r.perplexity, Catch::Matchers::WithinAbs(8.0, 0.6));
  REQUIRE(r.accuracy < 0.3);
}

TEST_CASE("probe memorizes perfectly separable features") {
  const std::size_t n = 320;
  Tensor x({n, 8});
  std::vector<int> y;
  Rng rng(5);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(rng.uniform_index(8));
    x(i, static_cast<std::size_t>(c)) = 1.0;
    y.push_back(c);
  }
  SsProbeConfig cfg;
  cfg.hidden = 32;
  cfg.epochs = 40;
  cfg.batch_size = 32;
  cfg.lr = 0.01;
  const SsProbeResult r = ss_probe(x, y, x, y, cfg);
  REQUIRE(r.train_accuracy > 0.99);
  REQUIRE(r.train_perplexity < 1.2);
}

TEST_CASE("absent training classes produce warnings but still run") {
  Tensor x({50, 3});
  std::vector<int> y(50, 2);  // only class 2 present
  Rng rng(6);
  init_uniform(x, rng, 1.0);
  SsProbeConfig cfg;
  cfg.hidden = 8;
  cfg.epochs = 10;
  cfg.batch_size = 16;
  cfg.lr = 0.01;
  const SsProbeResult r = ss_probe(x, y, x, y, cfg);
  REQUIRE(r.warnings.size() == 7);
  REQUIRE(r.accuracy == 1.0);
}
