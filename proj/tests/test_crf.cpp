#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>

#include "pse/core/grad_check.hpp"
#include "pse/data/synthetic.hpp"
#include "pse/tm/crf.hpp"

using namespace pse;

namespace {

// Unconstrained k-state chain grammar for oracle comparisons.
StateGrammar free_grammar(std::size_t k) {
  StateGrammar g;
  for (std::size_t s = 0; s < k; ++s)
    g.states.push_back({"s" + std::to_string(s), TmRegionKind::Globular, true,
                        true});
  g.allowed.assign(k, std::vector<bool>(k, true));
  g.validate();
  return g;
}

void enumerate_paths(std::size_t n, std::size_t S,
                     const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> path(n, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t t) {
    if (t == n) {
      fn(path);
      return;
    }
    for (std::size_t s = 0; s < S; ++s) {
      path[t] = static_cast<int>(s);
      rec(t + 1);
    }
  };
  rec(0);
}

bool path_allowed(const CrfParams& crf, const std::vector<int>& path) {
  if (!crf.grammar.states[static_cast<std::size_t>(path.front())].start)
    return false;
  if (!crf.grammar.states[static_cast<std::size_t>(path.back())].end)
    return false;
  for (std::size_t t = 1; t < path.size(); ++t)
    if (!crf.grammar.allowed[static_cast<std::size_t>(path[t - 1])]
                            [static_cast<std::size_t>(path[t])])
      return false;
  return true;
}

double brute_path_score(const CrfParams& crf, const Tensor& emit,
                        const std::vector<int>& path) {
  double score = crf.start_w.value[static_cast<std::size_t>(path[0])];
  for (std::size_t t = 0; t < path.size(); ++t) {
    score += emit(t, static_cast<std::size_t>(path[t]));
    if (t > 0)
      score += crf.trans.value(static_cast<std::size_t>(path[t - 1]),
                               static_cast<std::size_t>(path[t]));
  }
  score += crf.end_w.value[static_cast<std::size_t>(path.back())];
  return score;
}

CrfParams random_crf(const StateGrammar& g, std::size_t feat_dim,
                     std::uint64_t seed) {
  Rng rng(seed);
  CrfParams crf;
  crf.init(g, feat_dim, {3}, rng);
  init_uniform(crf.trans.value, rng, 1.0);
  init_uniform(crf.start_w.value, rng, 1.0);
  init_uniform(crf.end_w.value, rng, 1.0);
  return crf;
}

}  // namespace

TEST_CASE("single-state grammar gives log-likelihood zero") {
  StateGrammar g = free_grammar(1);
  CrfParams crf = random_crf(g, 2, 1);
  Tensor features({4, 2});
  Rng rng(3);
  init_uniform(features, rng, 1.0);
  const std::vector<int> path(4, 0);
  REQUIRE_THAT(crf_log_likelihood(crf, features, path),
               Catch::Matchers::WithinAbs(0.0, 1e-12));
  REQUIRE(viterbi_decode(crf, features) == path);
}

TEST_CASE("uniform potentials give -n log k per path") {
  const std::size_t k = 3, n = 5;
  StateGrammar g = free_grammar(k);
  Rng rng(0);
  CrfParams crf;
  crf.init(g, 2, {2}, rng);
  // zero potentials: zero the emission network output by zeroing its params
  crf.emit_W.value.zero();
  crf.emit_b.value.zero();
  Tensor features({n, 2});
  init_uniform(features, rng, 1.0);
  std::vector<int> path{0, 2, 1, 1, 0};
  REQUIRE_THAT(
      crf_log_likelihood(crf, features, path),
      Catch::Matchers::WithinAbs(-static_cast<double>(n) * std::log(3.0),
                                 1e-10));
}

TEST_CASE("logZ matches brute-force path sums on small instances") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const std::size_t S = 2 + seed % 3;  // 2..4 states
    const std::size_t n = 3 + seed % 4;  // 3..6 positions
    StateGrammar g = free_grammar(S);
    if (seed % 2 == 1) {
      // impose some structure: forbid a transition, restrict start/end
      if (S >= 3) {
        g.allowed[0][S - 1] = false;
        g.states[0].end = false;
      } else {
        g.states[1].start = false;
      }
      g.validate();
    }
    CrfParams crf = random_crf(g, 2, 10 + seed);
    Tensor features({n, 2});
    Rng rng(99 + seed);
    init_uniform(features, rng, 1.0);
    const CrfEmissionTrace tr = crf_emissions(crf, features);

    double z = 0.0;
    double best = -1e300;
    std::vector<int> best_path;
    enumerate_paths(n, S, [&](const std::vector<int>& path) {
      if (!path_allowed(crf, path)) return;
      const double s = brute_path_score(crf, tr.potentials, path);
      z += std::exp(s);
      if (s > best) {
        best = s;
        best_path = path;
      }
    });
    REQUIRE_THAT(crf_partition(crf, tr.potentials),
                 Catch::Matchers::WithinAbs(std::log(z), 1e-8));
    // viterbi equals the brute-force argmax (tie rule: lowest indices; random
    // potentials make ties measure-zero)
    REQUIRE(viterbi_decode(crf, features) == best_path);
    // exp(log-likelihood) sums to 1 over all allowed paths
    double mass = 0.0;
    enumerate_paths(n, S, [&](const std::vector<int>& path) {
      if (!path_allowed(crf, path)) return;
      mass += std::exp(crf_log_likelihood(crf, features, path));
    });
    REQUIRE_THAT(mass, Catch::Matchers::WithinAbs(1.0, 1e-8));
  }
}

TEST_CASE("decoded paths never use forbidden transitions") {
  StateGrammar g = StateGrammar::topology_default(3);
  Rng rng(5);
  for (int rep = 0; rep < 1000; ++rep) {
    CrfParams crf = random_crf(g, 1, 1000 + static_cast<std::uint64_t>(rep));
    // random raw potentials; bypass the lstm for speed
    Tensor emit({6, g.size()});
    init_uniform(emit, rng, 3.0);
    const std::vector<int> path = viterbi_decode_potentials(crf, emit);
    REQUIRE(path_allowed(crf, path));
  }
}

TEST_CASE("grammar path violations are reported as errors") {
  StateGrammar g = StateGrammar::topology_default(3);
  CrfParams crf = random_crf(g, 2, 77);
  Tensor features({3, 2});
  Rng rng(1);
  init_uniform(features, rng, 1.0);
  const int glob = g.find("glob");
  const int inside = g.find("in");
  // glob -> in is forbidden in the default topology
  REQUIRE_THROWS_AS(
      crf_log_likelihood(crf, features, {glob, glob, inside}), DataError);
}

TEST_CASE("crf log-likelihood gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    StateGrammar g = seed % 2 == 0 ? free_grammar(3)
                                   : StateGrammar::topology_default(2);
    CrfParams crf = random_crf(g, 2, 400 + seed);
    const std::size_t n = 5;
    Tensor features({n, 2});
    Rng rng(500 + seed);
    init_uniform(features, rng, 1.0);
    // a feasible gold path
    std::vector<int> path;
    if (seed % 2 == 0) {
      path = {0, 2, 1, 0, 1};
    } else {
      const int out = g.find("out");
      std::vector<int> p{out, out, out, out, out};
      path = p;
    }

    auto f = [&]() { return crf_log_likelihood(crf, features, path); };
    zero_grads(crf.params());
    Tensor d_features;
    crf_log_likelihood_backward(crf, features, path, 1.0, &d_features);
    REQUIRE(grad_check(f, features, d_features).max_rel_err <= 1e-4);
    for (Parameter* p : crf.params()) {
      if (p == &crf.trans) continue;  // handled below with masking
      REQUIRE(grad_check(f, p->value, p->grad).max_rel_err <= 1e-4);
    }
    // masked transitions: probe only allowed entries (forbidden ones are
    // ignored by the model, their gradient is identically zero)
    const std::size_t S = g.size();
    for (std::size_t a = 0; a < S; ++a)
      for (std::size_t b = 0; b < S; ++b) {
        if (!g.allowed[a][b]) {
          REQUIRE(crf.trans.grad(a, b) == 0.0);
          continue;
        }
        auto fe = [&]() { return crf_log_likelihood(crf, features, path); };
        double* cell = &crf.trans.value(a, b);
        const double analytic = crf.trans.grad(a, b);
        REQUIRE(grad_check(fe, cell, &analytic, 1).max_rel_err <= 1e-4);
      }
  }
}

TEST_CASE("states_to_regions collapses chains") {
  StateGrammar g = StateGrammar::topology_default(3);
  const int sp = g.find("sp");
  const int out = g.find("out");
  const int in = g.find("in");
  const int glob = g.find("glob");
  const int oi1 = g.find("tm_oi1"), oi2 = g.find("tm_oi2"),
            oi3 = g.find("tm_oi3");
  const int io1 = g.find("tm_io1"), io2 = g.find("tm_io2"),
            io3 = g.find("tm_io3");

  auto regions = states_to_regions(std::vector<int>(6, glob), g);
  REQUIRE(regions.size() == 1);
  REQUIRE(regions[0].kind == TmRegionKind::Globular);
  REQUIRE(regions[0].begin == 0);
  REQUIRE(regions[0].end == 6);

  regions = states_to_regions({sp, sp, sp, out, out}, g);
  REQUIRE(regions.size() == 2);
  REQUIRE(regions[0].kind == TmRegionKind::SignalPeptide);
  REQUIRE(regions[1].kind == TmRegionKind::Outside);

  // two membrane crossings: out -> oi chain -> in -> io chain -> out
  const std::vector<int> path{out, oi1, oi2, oi3, oi3, in,
                              io1, io2, io3, out};
  regions = states_to_regions(path, g);
  std::size_t tm_count = 0;
  for (const auto& r : regions)
    tm_count += r.kind == TmRegionKind::TmHelix ? 1 : 0;
  REQUIRE(tm_count == 2);
}

TEST_CASE("regions_to_states infers helix direction from loops") {
  StateGrammar g = StateGrammar::topology_default(3);
  std::vector<TmRegion> regions{{TmRegionKind::Outside, 0, 3},
                                {TmRegionKind::TmHelix, 3, 8},
                                {TmRegionKind::Inside, 8, 11}};
  const std::vector<int> path = regions_to_states(regions, g);
  REQUIRE(path.size() == 11);
  REQUIRE(g.states[static_cast<std::size_t>(path[0])].kind ==
          TmRegionKind::Outside);
  REQUIRE(g.states[static_cast<std::size_t>(path[4])].name.substr(0, 5) ==
          "tm_oi");
  // round trip through the region view
  const auto back = states_to_regions(path, g);
  REQUIRE(back.size() == 3);
  REQUIRE(back[1].kind == TmRegionKind::TmHelix);
  REQUIRE(back[1].begin == 3);
  REQUIRE(back[1].end == 8);

  // a 2-position helix cannot satisfy the 3-chain minimum
  std::vector<TmRegion> tiny{{TmRegionKind::Outside, 0, 3},
                             {TmRegionKind::TmHelix, 3, 5},
                             {TmRegionKind::Inside, 5, 8}};
  REQUIRE_THROWS_AS(regions_to_states(tiny, g), DataError);
}

TEST_CASE("tm category scoring rules") {
  auto mk = [](std::initializer_list<TmRegion> rs) {
    return std::vector<TmRegion>(rs);
  };
  const auto truth = mk({{TmRegionKind::Outside, 0, 10},
                         {TmRegionKind::TmHelix, 10, 30},
                         {TmRegionKind::Inside, 30, 40}});
  // exact match
  REQUIRE(tm_category_score(truth, truth).correct);
  REQUIRE(tm_category_score(truth, truth).category == TmCategory::Tm);

  // overlap of exactly 4 positions is not enough
  const auto off4 = mk({{TmRegionKind::Outside, 0, 26},
                        {TmRegionKind::TmHelix, 26, 46},
                        {TmRegionKind::Inside, 46, 50}});
  REQUIRE_FALSE(tm_category_score(off4, truth).correct);
  // overlap of exactly 5 positions passes
  const auto off5 = mk({{TmRegionKind::Outside, 0, 25},
                        {TmRegionKind::TmHelix, 25, 45},
                        {TmRegionKind::Inside, 45, 50}});
  REQUIRE(tm_category_score(off5, truth).correct);

  // an extra predicted helix breaks the count rule
  const auto extra = mk({{TmRegionKind::Outside, 0, 10},
                         {TmRegionKind::TmHelix, 10, 30},
                         {TmRegionKind::Inside, 30, 35},
                         {TmRegionKind::TmHelix, 35, 40}});
  REQUIRE_FALSE(tm_category_score(extra, truth).correct);

  // a predicted signal peptide disqualifies a TM protein
  const auto with_sp = mk({{TmRegionKind::SignalPeptide, 0, 10},
                           {TmRegionKind::TmHelix, 10, 30},
                           {TmRegionKind::Inside, 30, 40}});
  REQUIRE_FALSE(tm_category_score(with_sp, truth).correct);

  // SP+TM requires the prediction to start with a signal peptide
  const auto sp_truth = mk({{TmRegionKind::SignalPeptide, 0, 12},
                            {TmRegionKind::Outside, 12, 20},
                            {TmRegionKind::TmHelix, 20, 40},
                            {TmRegionKind::Inside, 40, 50}});
  REQUIRE(tm_category_score(sp_truth, sp_truth).correct);
  REQUIRE(tm_category_score(sp_truth, sp_truth).category ==
          TmCategory::SpTm);
  const auto no_sp = mk({{TmRegionKind::Outside, 0, 20},
                         {TmRegionKind::TmHelix, 20, 40},
                         {TmRegionKind::Inside, 40, 50}});
  REQUIRE_FALSE(tm_category_score(no_sp, sp_truth).correct);

  // globular: correct iff nothing membrane-like is predicted
  const auto glob_truth = mk({{TmRegionKind::Globular, 0, 50}});
  REQUIRE(tm_category_score(mk({{TmRegionKind::Inside, 0, 50}}), glob_truth)
              .correct);
  REQUIRE_FALSE(tm_category_score(no_sp, glob_truth).correct);

  // globular+SP: only a leading signal peptide
  const auto gsp_truth = mk({{TmRegionKind::SignalPeptide, 0, 14},
                             {TmRegionKind::Globular, 14, 60}});
  REQUIRE(tm_category_score(mk({{TmRegionKind::SignalPeptide, 0, 10},
                                {TmRegionKind::Outside, 10, 60}}),
                            gsp_truth)
              .correct);
  REQUIRE_FALSE(
      tm_category_score(mk({{TmRegionKind::Outside, 0, 60}}), gsp_truth)
          .correct);
}

TEST_CASE("oracle emissions give perfect cross-validation accuracy") {
  // features are the one-hot true region letters; an emission head can read
  // them directly, so the CRF should become near-perfect quickly
  StateGrammar g = StateGrammar::topology_default(5);
  SyntheticTmConfig tm_cfg;
  tm_cfg.proteins_per_category = 3;
  Rng rng(8);
  Dataset ds = generate_synthetic_tm_corpus(tm_cfg, rng);
  auto featurize = [&](const ProteinRecord& rec) {
    Tensor f({rec.length(), 5});
    for (const TmRegion& r : *rec.tm_regions)
      for (std::size_t t = r.begin; t < r.end; ++t)
        f(t, static_cast<std::size_t>(r.kind)) = 1.0;
    return f;
  };
  CrfTrainConfig cfg;
  cfg.model.hidden = 8;
  cfg.epochs = 20;
  cfg.seed = 4;
  const TmCvReport report = crossvalidate_tm(ds, 3, featurize, g, cfg);
  REQUIRE(report.overall >= 0.99);
}

TEST_CASE("grammar json round trip") {
  StateGrammar g = StateGrammar::topology_default(4);
  const nlohmann::json j = g.to_json();
  StateGrammar back = StateGrammar::from_json(j);
  REQUIRE(back.size() == g.size());
  for (std::size_t a = 0; a < g.size(); ++a) {
    REQUIRE(back.states[a].name == g.states[a].name);
    REQUIRE(back.states[a].kind == g.states[a].kind);
    for (std::size_t b = 0; b < g.size(); ++b)
      REQUIRE(back.allowed[a][b] == g.allowed[a][b]);
  }
  // malformed grammars are rejected
  StateGrammar bad = g;
  bad.states[0].start = false;  // "sp" unreachable: nothing enters it
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
}
