#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pse/core/grad_check.hpp"
#include "pse/model/contact.hpp"

using namespace pse;

TEST_CASE("pairwise features arithmetic and symmetry") {
  Tensor Z({2, 1});
  Z(0, 0) = 2.0;
  Z(1, 0) = 3.0;
  const Tensor v = pairwise_features(Z);
  REQUIRE(v(0, 1, 0) == 1.0);  // |2-3|
  REQUIRE(v(0, 1, 1) == 6.0);  // 2*3
  REQUIRE(v(0, 0, 0) == 0.0);  // |z-z|
  REQUIRE(v(1, 1, 0) == 0.0);

  Rng rng(8);
  Tensor R({6, 4});
  init_uniform(R, rng, 2.0);
  const Tensor f = pairwise_features(R);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      for (std::size_t k = 0; k < 8; ++k)
        REQUIRE(f(i, j, k) == f(j, i, k));  // exact, not approximate
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t k = 0; k < 4; ++k) REQUIRE(f(i, i, k) == 0.0);
}

TEST_CASE("all-zero head gives probability one half everywhere") {
  Rng rng(2);
  ContactHeadParams head;
  head.init({4}, 3, rng);
  head.W.value.zero();
  head.b.value.zero();
  head.filt.value.zero();
  head.filt_b.value.zero();
  Tensor Z({5, 3});
  init_uniform(Z, rng, 1.0);
  const Tensor probs = contact_probabilities(head, Z);
  for (std::size_t k = 0; k < probs.size(); ++k) REQUIRE(probs[k] == 0.5);
}

TEST_CASE("length-1 input yields a 1x1 prediction") {
  Rng rng(3);
  ContactHeadParams head;
  head.init({4}, 2, rng);
  Tensor Z({1, 2});
  init_uniform(Z, rng, 1.0);
  const Tensor probs = contact_probabilities(head, Z);
  REQUIRE(probs.dim(0) == 1);
  REQUIRE(probs.dim(1) == 1);
  REQUIRE(probs(0, 0) > 0.0);
  REQUIRE(probs(0, 0) < 1.0);
}

TEST_CASE("confident correct predictions drive the loss toward zero") {
  const std::size_t n = 5;
  Tensor obs({n, n});
  obs(0, 3) = obs(3, 0) = 1.0;
  Tensor probs({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      probs(i, j) = obs(i, j) == 1.0 ? 1.0 - 1e-12 : 1e-12;
  REQUIRE(contact_loss(probs, obs, 2) < 1e-10);
}

TEST_CASE("contact loss values") {
  Rng rng(5);
  ContactHeadParams head;
  head.init({4}, 2, rng);
  head.W.value.zero();
  head.b.value.zero();
  head.filt.value.zero();
  head.filt_b.value.zero();
  Tensor Z({6, 2});
  init_uniform(Z, rng, 1.0);
  const Tensor probs = contact_probabilities(head, Z);
  Tensor obs({6, 6});  // all zeros
  // p = 0.5 everywhere -> ln 2 per scored pair
  REQUIRE_THAT(contact_loss(probs, obs, 2),
               Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));
  // empty mask: n=2 with separation 2 scores nothing, loss defined as 0
  Tensor p2({2, 2});
  p2.fill(0.9);
  Tensor o2({2, 2});
  REQUIRE(contact_loss(p2, o2, 2) == 0.0);
  REQUIRE(contact_mask_count(2, 2) == 0);

  Tensor bad({6, 6});
  bad.fill(0.5);
  REQUIRE_THROWS_AS(contact_loss(probs, bad, 2), DataError);
}

TEST_CASE("contact head gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Rng rng(40 + seed);
    ContactHeadParams head;
    head.init({3}, 2, rng);
    Tensor Z({5, 2});
    init_uniform(Z, rng, 1.0);
    Tensor obs({5, 5});
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        obs(i, j) = (i + j) % 2 == 0 ? 1.0 : 0.0;

    auto f = [&]() {
      const ContactTrace tr = contact_forward(head, Z);
      return contact_loss(tr.probs, obs, 2);
    };

    zero_grads(head.params());
    Tensor dZ;
    {
      const ContactTrace tr = contact_forward(head, Z);
      contact_loss_backward(head, Z, tr, obs, 2, 1.0, dZ);
    }
    REQUIRE(grad_check(f, Z, dZ).max_rel_err <= 1e-4);
    for (Parameter* p : head.params())
      REQUIRE(grad_check(f, p->value, p->grad).max_rel_err <= 1e-4);
  }
}

TEST_CASE("metrics on perfect predictions") {
  const std::size_t n = 6;
  Tensor obs({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      obs(i, j) = (i == j || (i > j ? i - j : j - i) == 3) ? 1.0 : 0.0;
  const ContactMetrics m = contact_metrics(obs, obs, 2);
  REQUIRE(m.precision.value() == 1.0);
  REQUIRE(m.recall.value() == 1.0);
  REQUIRE(m.f1.value() == 1.0);
  REQUIRE_THAT(m.aupr.value(), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("all-0.5 predictions with the strict threshold") {
  const std::size_t n = 5;
  Tensor probs({n, n});
  probs.fill(0.5);
  Tensor obs({n, n});
  obs(0, 3) = obs(3, 0) = 1.0;
  const ContactMetrics m = contact_metrics(probs, obs, 2);
  REQUIRE_FALSE(m.precision.has_value());  // no predicted positives
  REQUIRE(m.recall.value() == 0.0);
  REQUIRE_FALSE(m.f1.has_value());
}

TEST_CASE("no positive pairs reports absent recall and aupr") {
  Tensor probs({4, 4});
  probs.fill(0.9);
  Tensor obs({4, 4});
  const ContactMetrics m = contact_metrics(probs, obs, 2);
  REQUIRE_FALSE(m.recall.has_value());
  REQUIRE_FALSE(m.aupr.has_value());
  REQUIRE(m.precision.has_value());
}

namespace {

// All-cutpoint oracle: precision-recall pairs at every distinct threshold,
// area by recall increments.
double brute_force_aupr(const std::vector<double>& scores,
                        const std::vector<int>& labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return scores[a] > scores[b];
  });
  std::size_t positives = 0;
  for (int y : labels) positives += y ? 1u : 0u;
  double area = 0.0;
  std::size_t tp = 0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (labels[order[k]]) {
      ++tp;
      const double recall = static_cast<double>(tp) / positives;
      const double precision = static_cast<double>(tp) / (k + 1);
      area += (recall - prev_recall) * precision;
      prev_recall = recall;
    }
  }
  return area;
}

}  // namespace

TEST_CASE("aupr matches exhaustive cut-point oracle on a tiny case") {
  // 4 residues -> 3 scored pairs at separation 2; craft a known ranking
  const std::size_t n = 4;
  Tensor probs({n, n});
  Tensor obs({n, n});
  auto set = [&](std::size_t i, std::size_t j, double p, double y) {
    probs(i, j) = probs(j, i) = p;
    obs(i, j) = obs(j, i) = y;
  };
  set(0, 2, 0.9, 1.0);
  set(0, 3, 0.8, 0.0);
  set(1, 3, 0.7, 1.0);
  const ContactMetrics m = contact_metrics(probs, obs, 2);
  const double oracle =
      brute_force_aupr({0.9, 0.8, 0.7}, {1, 0, 1});
  REQUIRE_THAT(m.aupr.value(), Catch::Matchers::WithinAbs(oracle, 1e-12));
  REQUIRE_THAT(m.aupr.value(), Catch::Matchers::WithinAbs(5.0 / 6.0, 1e-12));

  // randomized instances stay within the oracle
  Rng rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t nn = 5 + rng.uniform_index(3);
    Tensor P({nn, nn}), O({nn, nn});
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t i = 0; i < nn; ++i)
      for (std::size_t j = i + 2; j < nn; ++j) {
        const double p = rng.uniform();
        const int label = rng.bernoulli(0.4) ? 1 : 0;
        P(i, j) = P(j, i) = p;
        O(i, j) = O(j, i) = label;
        s.push_back(p);
        y.push_back(label);
      }
    const ContactMetrics mm = contact_metrics(P, O, 2);
    bool any = false;
    for (int v : y) any = any || v;
    if (!any) {
      REQUIRE_FALSE(mm.aupr.has_value());
      continue;
    }
    REQUIRE_THAT(mm.aupr.value(),
                 Catch::Matchers::WithinAbs(brute_force_aupr(s, y), 1e-12));
  }
}

TEST_CASE("evaluation view symmetrizes raw predictions") {
  const std::size_t n = 5;
  Rng rng(12);
  Tensor probs({n, n});
  init_uniform(probs, rng, 0.4);
  for (double& v : probs.values()) v += 0.5;
  Tensor obs({n, n});
  // metric path averages (i,j) and (j,i); verify against manual average
  const ContactMetrics m1 = contact_metrics(probs, obs, 2);
  Tensor sym({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      sym(i, j) = 0.5 * (probs(i, j) + probs(j, i));
  const ContactMetrics m2 = contact_metrics(sym, obs, 2);
  REQUIRE(m1.precision == m2.precision);
  REQUIRE(m1.pairs == m2.pairs);
}
