#pragma once

#include <string>
#include <vector>

#include "pse/core/grad_check.hpp"
#include "pse/core/lstm.hpp"
#include "pse/model/contact.hpp"
#include "pse/model/encoder.hpp"
#include "pse/model/similarity.hpp"
#include "pse/tm/crf.hpp"

namespace pse {

struct GradCheckCase {
  std::string op;
  double max_rel_err = 0.0;

  bool pass(double tol = 1e-4) const { return max_rel_err <= tol; }
};

namespace gradcheck_detail {

inline void spread_coordinates(Tensor& Z, Rng& rng, double margin = 2e-3) {
  // keep all coordinate pairs off the L1 kinks seen by the probes
  bool ok = false;
  while (!ok) {
    init_uniform(Z, rng, 2.0);
    ok = true;
    for (std::size_t i = 0; i < Z.dim(0) && ok; ++i)
      for (std::size_t j = i + 1; j < Z.dim(0) && ok; ++j)
        for (std::size_t k = 0; k < Z.dim(1); ++k)
          if (std::fabs(Z(i, k) - Z(j, k)) < margin) {
            ok = false;
            break;
          }
  }
}

inline void spread_pair(Tensor& Z, Tensor& Zp, Rng& rng,
                        double margin = 2e-3) {
  bool ok = false;
  while (!ok) {
    spread_coordinates(Z, rng, margin);
    spread_coordinates(Zp, rng, margin);
    ok = true;
    for (std::size_t i = 0; i < Z.dim(0) && ok; ++i)
      for (std::size_t j = 0; j < Zp.dim(0) && ok; ++j)
        for (std::size_t k = 0; k < Z.dim(1); ++k)
          if (std::fabs(Z(i, k) - Zp(j, k)) < margin) {
            ok = false;
            break;
          }
  }
}

inline double worst(double acc, const GradCheckResult& r) {
  return std::max(acc, r.max_rel_err);
}

}  // namespace gradcheck_detail

// Randomized finite-difference checks for every differentiable operation,
// one small instance per op per seed. Returns the worst relative error per
// op; 1e-4 is the pass bar everywhere.
inline std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed) {
  using gradcheck_detail::spread_coordinates;
  using gradcheck_detail::spread_pair;
  using gradcheck_detail::worst;
  std::vector<GradCheckCase> cases;
  Rng rng(seed * 0x9e3779b9ull + 17);

  {  // input fusion (through a linear encoder with LM inputs)
    EncoderConfig cfg;
    cfg.arch = EncoderArch::Linear;
    cfg.fusion_dim = 5;
    cfg.embed_dim = 3;
    cfg.lm_fusion = true;
    cfg.lm_dim = 4;
    EncoderParams enc;
    enc.init(cfg, rng);
    const std::vector<int> tokens{static_cast<int>(rng.uniform_index(20)),
                                  static_cast<int>(rng.uniform_index(20)),
                                  static_cast<int>(rng.uniform_index(20))};
    Tensor lm_states({3, 4});
    init_uniform(lm_states, rng, 1.0);
    Tensor w({3, 3});
    init_uniform(w, rng, 1.0);
    auto f = [&]() {
      const EncoderTrace tr = encode(enc, tokens, &lm_states);
      double acc = 0.0;
      for (std::size_t k = 0; k < tr.z.size(); ++k) acc += tr.z[k] * w[k];
      return acc;
    };
    zero_grads(enc.params());
    {
      const EncoderTrace tr = encode(enc, tokens, &lm_states);
      Tensor dZ(tr.z.shape());
      for (std::size_t k = 0; k < dZ.size(); ++k) dZ[k] = w[k];
      encode_backward(enc, tr, dZ);
    }
    double err = 0.0;
    for (Parameter* p : enc.params())
      err = worst(err, grad_check(f, p->value, p->grad));
    cases.push_back({"fusion", err});
  }

  {  // lstm cell, all parameter and input groups
    LstmCellParams cell;
    cell.init("cell", 3, 2, rng);
    Tensor x({1, 3});
    init_uniform(x, rng, 1.0);
    Tensor probe({2, 2});
    init_uniform(probe, rng, 1.0);
    auto f = [&]() {
      const LstmRunTrace tr = lstm_run(cell, x, false);
      double acc = 0.0;
      for (std::size_t k = 0; k < 2; ++k)
        acc += tr.hs(1, k) * probe(1, k) + tr.cs(1, k) * probe(0, k);
      return acc;
    };
    zero_grads(cell.params());
    Tensor dx({1, 3});
    {
      const LstmRunTrace tr = lstm_run(cell, x, false);
      std::vector<double> dh{probe(1, 0), probe(1, 1)};
      std::vector<double> dc{probe(0, 0), probe(0, 1)};
      std::vector<double> dh0(2, 0.0), dc0(2, 0.0);
      lstm_cell_backward(cell, x.data(), tr.hs.data(), tr.cs.data(),
                         tr.steps[0], dh.data(), dc.data(), dx.data(),
                         dh0.data(), dc0.data());
      for (std::size_t k = 0; k < 2; ++k) {
        cell.h0.grad[k] += dh0[k];
        cell.c0.grad[k] += dc0[k];
      }
    }
    double err = grad_check(f, x, dx).max_rel_err;
    for (Parameter* p : cell.params())
      err = worst(err, grad_check(f, p->value, p->grad));
    cases.push_back({"lstm_cell", err});
  }

  {  // two-layer bilstm stack
    BiLstmStack stack;
    stack.init("s", 3, 2, 2, rng);
    Tensor in({4, 3});
    init_uniform(in, rng, 1.0);
    Tensor w({4, 4});
    init_uniform(w, rng, 1.0);
    auto f = [&]() {
      const BiLstmStackTrace tr = bilstm_stack_forward(stack, in);
      double acc = 0.0;
      for (std::size_t k = 0; k < tr.top().size(); ++k)
        acc += tr.top()[k] * w[k];
      return acc;
    };
    zero_grads(stack.params());
    Tensor d_in;
    {
      const BiLstmStackTrace tr = bilstm_stack_forward(stack, in);
      Tensor d_top(tr.top().shape());
      for (std::size_t k = 0; k < d_top.size(); ++k) d_top[k] = w[k];
      bilstm_stack_backward(stack, in, tr, d_top, d_in);
    }
    double err = grad_check(f, in, d_in, 1e-4).max_rel_err;
    for (Parameter* p : stack.params())
      err = worst(err, grad_check(f, p->value, p->grad, 1e-4));
    cases.push_back({"bilstm_stack", err});
  }

  {  // ssa score
    Tensor Z({3, 3}), Zp({4, 3});
    spread_pair(Z, Zp, rng);
    auto f = [&]() { return ssa_score(Z, Zp).s_hat; };
    Tensor dZ, dZp;
    ssa_backward(ssa_score(Z, Zp), Z, Zp, 1.0, dZ, dZp);
    double err = grad_check(f, Z, dZ).max_rel_err;
    err = worst(err, grad_check(f, Zp, dZp));
    cases.push_back({"ssa_score", err});
  }

  {  // ua score (odd lengths: keeps sign sums away from exact zeros)
    Tensor Z({3, 3}), Zp({5, 3});
    spread_pair(Z, Zp, rng);
    auto f = [&]() { return ua_score(Z, Zp); };
    Tensor dZ, dZp;
    ua_backward(Z, Zp, 1.0, dZ, dZp);
    double err = grad_check(f, Z, dZ).max_rel_err;
    err = worst(err, grad_check(f, Zp, dZp));
    cases.push_back({"ua_score", err});
  }

  {  // me score
    Tensor Z({3, 3}), Zp({4, 3});
    spread_pair(Z, Zp, rng);
    auto f = [&]() { return me_score(Z, Zp); };
    Tensor dZ, dZp;
    me_backward(Z, Zp, 1.0, dZ, dZp);
    double err = grad_check(f, Z, dZ).max_rel_err;
    err = worst(err, grad_check(f, Zp, dZp));
    cases.push_back({"me_score", err});
  }

  {  // ordinal similarity loss
    OrdinalHead head;
    head.init();
    init_uniform(head.u.value, rng, 1.0);
    init_uniform(head.b.value, rng, 2.0);
    std::vector<double> scores;
    std::vector<int> levels;
    for (int k = 0; k < 5; ++k) {
      scores.push_back(rng.uniform(-4.0, 0.0));
      levels.push_back(static_cast<int>(rng.uniform_index(5)));
    }
    auto f = [&]() { return similarity_loss(scores, levels, head); };
    zero_grads(head.params());
    const std::vector<double> ds =
        similarity_loss_backward(scores, levels, head);
    Tensor s = Tensor::from_vector(scores);
    Tensor dst = Tensor::from_vector(ds);
    auto fs = [&]() {
      return similarity_loss(s.values(), levels, head);
    };
    double err = grad_check(fs, s, dst).max_rel_err;
    err = worst(err, grad_check(f, head.u.value, head.u.grad));
    err = worst(err, grad_check(f, head.b.value, head.b.grad));
    cases.push_back({"ordinal_loss", err});
  }

  {  // contact head through features, hidden layer and convolution
    ContactHeadParams head;
    head.init({3}, 2, rng);
    Tensor Z({5, 2});
    spread_coordinates(Z, rng);
    Tensor obs({5, 5});
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        obs(i, j) = (i * 3 + j) % 2 == 0 ? 1.0 : 0.0;
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
    double err = grad_check(f, Z, dZ, 1e-4).max_rel_err;
    for (Parameter* p : head.params())
      err = worst(err, grad_check(f, p->value, p->grad, 1e-4));
    cases.push_back({"contact_head", err});
  }

  {  // crf log-likelihood through the emission bilstm
    StateGrammar g;
    for (int s = 0; s < 3; ++s)
      g.states.push_back({"s" + std::to_string(s), TmRegionKind::Globular,
                          true, true});
    g.allowed.assign(3, std::vector<bool>(3, true));
    g.allowed[0][2] = false;
    g.validate();
    CrfParams crf;
    crf.init(g, 2, {2}, rng);
    init_uniform(crf.trans.value, rng, 1.0);
    init_uniform(crf.start_w.value, rng, 1.0);
    init_uniform(crf.end_w.value, rng, 1.0);
    Tensor features({5, 2});
    init_uniform(features, rng, 1.0);
    const std::vector<int> path{0, 1, 2, 0, 1};
    auto f = [&]() { return crf_log_likelihood(crf, features, path); };
    zero_grads(crf.params());
    Tensor d_features;
    crf_log_likelihood_backward(crf, features, path, 1.0, &d_features);
    double err = grad_check(f, features, d_features, 1e-4).max_rel_err;
    for (Parameter* p : crf.params()) {
      if (p == &crf.trans) continue;
      err = worst(err, grad_check(f, p->value, p->grad, 1e-4));
    }
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 3; ++b) {
        if (!g.allowed[a][b]) continue;
        const double analytic = crf.trans.grad(a, b);
        err = worst(err, grad_check(f, &crf.trans.value(a, b), &analytic, 1,
                                    1e-4));
      }
    cases.push_back({"crf_log_likelihood", err});
  }

  return cases;
}

}  // namespace pse
