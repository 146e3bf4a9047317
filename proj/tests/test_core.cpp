#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "pse/core/adam.hpp"
#include "pse/core/checkpoint.hpp"
#include "pse/core/grad_check.hpp"
#include "pse/core/ops.hpp"
#include "pse/core/rng.hpp"
#include "pse/core/tensor.hpp"
#include "pse/io/tsv.hpp"

using namespace pse;

TEST_CASE("tensor shape and indexing") {
  Tensor t({2, 3});
  REQUIRE(t.size() == 6);
  t(1, 2) = 5.0;
  REQUIRE(t[5] == 5.0);
  Tensor r = t.reshaped({3, 2});
  REQUIRE(r(2, 1) == 5.0);
  REQUIRE_THROWS(t.reshaped({4, 2}));
}

TEST_CASE("linear identity and bias cases") {
  Tensor W({3, 3});
  for (std::size_t i = 0; i < 3; ++i) W(i, i) = 1.0;
  Tensor b({3});
  Tensor x = Tensor::from_vector({1.0, -2.0, 3.0});
  Tensor y = linear_forward(x, W, b);
  for (std::size_t i = 0; i < 3; ++i) REQUIRE(y[i] == x[i]);

  Tensor x0({3});
  b[0] = 7.0;
  b[2] = -1.5;
  Tensor yb = linear_forward(x0, W, b);
  for (std::size_t i = 0; i < 3; ++i) REQUIRE(yb[i] == b[i]);

  Tensor bad({2});
  REQUIRE_THROWS_AS(linear_forward(bad, W, b), ShapeError);
}

TEST_CASE("linear backward matches finite differences") {
  Rng rng(11);
  Tensor x({4, 3}), W({2, 3}), b({2});
  init_uniform(x, rng, 1.0);
  init_uniform_glorot(W, rng);
  init_uniform(b, rng, 0.5);
  Tensor dy({4, 2});
  init_uniform(dy, rng, 1.0);

  auto loss = [&]() {
    const Tensor y = linear_forward(x, W, b);
    double acc = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) acc += y[k] * dy[k];
    return acc;
  };
  Tensor dx, dW(W.shape()), db(b.shape());
  linear_backward(x, W, dy, dx, dW, db);
  REQUIRE(grad_check(loss, x, dx).max_rel_err <= 1e-6);
  REQUIRE(grad_check(loss, W, dW).max_rel_err <= 1e-6);
  REQUIRE(grad_check(loss, b, db).max_rel_err <= 1e-6);
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(3);
  Tensor logits({5, 7});
  init_uniform(logits, rng, 30.0);  // large spread exercises max-subtraction
  const Tensor p = softmax_rows(logits);
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 7; ++j) {
      s += p(i, j);
      REQUIRE(p(i, j) > 0.0);
    }
    REQUIRE_THAT(s, Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("sigmoid stays in (0,1) over the working range") {
  for (double x = -30.0; x <= 30.0; x += 0.37) {
    const double s = sigmoid(x);
    REQUIRE(s > 0.0);
    REQUIRE(s < 1.0);
  }
  REQUIRE_THAT(sigmoid(0.0), Catch::Matchers::WithinAbs(0.5, 1e-15));
  // softplus agrees with log(1+e^x) and stays finite for large inputs
  REQUIRE_THAT(softplus(1.3), Catch::Matchers::WithinAbs(
                                  std::log1p(std::exp(1.3)), 1e-12));
  REQUIRE(std::isfinite(softplus(1000.0)));
}

TEST_CASE("grad_check validates a known analytic gradient") {
  Tensor x = Tensor::from_vector({3.0});
  Tensor g = Tensor::from_vector({6.0});
  auto f = [&]() { return x[0] * x[0]; };
  REQUIRE(grad_check(f, x, g).max_rel_err <= 1e-8);
  // deliberately wrong gradient must be flagged
  Tensor wrong = Tensor::from_vector({5.0});
  REQUIRE(grad_check(f, x, wrong).max_rel_err > 0.1);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Parameter p("w", Tensor::from_vector({1.5, -2.0, 0.25}));
  const std::vector<double> before = p.value.values();
  Adam adam;
  for (int k = 0; k < 3; ++k) adam.step({&p});
  REQUIRE(p.value.values() == before);
}

TEST_CASE("adam: first step magnitude is lr*|g|/(|g|+eps)") {
  Parameter p("w", Tensor::from_vector({1.0}));
  p.grad[0] = 0.3;
  AdamConfig cfg;
  Adam adam(cfg);
  adam.step({&p});
  const double expect = cfg.lr * 0.3 / (0.3 + cfg.eps);
  REQUIRE_THAT(1.0 - p.value[0], Catch::Matchers::WithinAbs(expect, 1e-12));
}

TEST_CASE("adam: repeated positive gradient shrinks the parameter") {
  Parameter p("w", Tensor::from_vector({1.0}));
  Adam adam;
  double prev = p.value[0];
  for (int k = 0; k < 5; ++k) {
    p.zero_grad();
    p.grad[0] = 2.0;
    adam.step({&p});
    REQUIRE(p.value[0] < prev);
    prev = p.value[0];
  }
}

TEST_CASE("adam rejects non-finite gradients") {
  Parameter p("w", Tensor::from_vector({1.0}));
  p.grad[0] = std::numeric_limits<double>::quiet_NaN();
  Adam adam;
  REQUIRE_THROWS_AS(adam.step({&p}), NumericError);
}

TEST_CASE("checkpoint round-trips byte-exact") {
  Rng rng(99);
  Checkpoint ck;
  ck.kind = "test";
  ck.meta["alpha"] = 42;
  ck.meta["beta"] = -7;
  Tensor a({3, 4}), b({5});
  init_uniform(a, rng, 2.0);
  init_uniform(b, rng, 2.0);
  ck.add("a", a);
  ck.add("b", b);

  const auto dir = std::filesystem::temp_directory_path();
  const std::string p1 = (dir / "pse_ck1.bin").string();
  const std::string p2 = (dir / "pse_ck2.bin").string();
  ck.save(p1);
  Checkpoint re = Checkpoint::load(p1);
  REQUIRE(re.kind == "test");
  REQUIRE(re.meta_required("alpha") == 42);
  REQUIRE(re.get("a").values() == a.values());
  re.save(p2);
  REQUIRE(read_file(p1) == read_file(p2));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("rng reproducibility and fork independence") {
  Rng a(123), b(123);
  for (int k = 0; k < 16; ++k) REQUIRE(a.next_u64() == b.next_u64());
  Rng c(123);
  Rng child = c.fork(1);
  REQUIRE(child.next_u64() != Rng(123).next_u64());
}

TEST_CASE("categorical respects weights") {
  Rng rng(7);
  std::vector<double> w{0.0, 2.0, 0.0, 1.0};
  std::array<int, 4> counts{};
  for (int k = 0; k < 30000; ++k)
    counts[rng.categorical(w)]++;
  REQUIRE(counts[0] == 0);
  REQUIRE(counts[2] == 0);
  const double frac = counts[1] / 30000.0;
  REQUIRE_THAT(frac, Catch::Matchers::WithinAbs(2.0 / 3.0, 0.02));
}
