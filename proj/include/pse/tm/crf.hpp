#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pse/core/adam.hpp"
#include "pse/core/checkpoint.hpp"
#include "pse/core/lstm.hpp"
#include "pse/core/ops.hpp"
#include "pse/tm/grammar.hpp"
#include "pse/util/parallel.hpp"

namespace pse {

constexpr double kCrfNegInf = -1e30;

struct CrfConfig {
  std::size_t hidden = 64;  // emission biLSTM units per direction
};

// Linear-chain CRF over the grammar. Per-position state potentials come from
// a single biLSTM over the input features; transition/start/end scores are
// learned on top of the grammar mask and forbidden moves stay at -inf.
struct CrfParams {
  StateGrammar grammar;
  CrfConfig cfg;
  std::size_t feature_dim = 0;
  BiLstmLayer lstm;
  Parameter emit_W;   // (S, 2H)
  Parameter emit_b;   // (S)
  Parameter trans;    // (S, S)
  Parameter start_w;  // (S)
  Parameter end_w;    // (S)

  void init(const StateGrammar& g, std::size_t features, const CrfConfig& c,
            Rng& rng) {
    grammar = g;
    grammar.validate();
    cfg = c;
    feature_dim = features;
    const std::size_t S = grammar.size();
    lstm.init("crf.lstm", features, cfg.hidden, rng);
    emit_W = Parameter("crf.emit_W", Tensor({S, 2 * cfg.hidden}));
    emit_b = Parameter("crf.emit_b", Tensor({S}));
    trans = Parameter("crf.trans", Tensor({S, S}));
    start_w = Parameter("crf.start_w", Tensor({S}));
    end_w = Parameter("crf.end_w", Tensor({S}));
    init_uniform_glorot(emit_W.value, rng);
  }

  ParamRefs params() {
    ParamRefs out = lstm.params();
    out.push_back(&emit_W);
    out.push_back(&emit_b);
    out.push_back(&trans);
    out.push_back(&start_w);
    out.push_back(&end_w);
    return out;
  }

  double trans_score(std::size_t a, std::size_t b) const {
    return grammar.allowed[a][b] ? trans.value(a, b) : kCrfNegInf;
  }
  double start_score(std::size_t s) const {
    return grammar.states[s].start ? start_w.value[s] : kCrfNegInf;
  }
  double end_score(std::size_t s) const {
    return grammar.states[s].end ? end_w.value[s] : kCrfNegInf;
  }

  void save(const std::string& path) {
    Checkpoint ck;
    ck.kind = "crf";
    ck.meta["crf.hidden"] = static_cast<std::int64_t>(cfg.hidden);
    ck.meta["crf.feature_dim"] = static_cast<std::int64_t>(feature_dim);
    ck.smeta["crf.grammar"] = grammar.to_json().dump();
    checkpoint_put_params(ck, params());
    ck.save(path);
  }

  static CrfParams load(const std::string& path) {
    Checkpoint ck = Checkpoint::load(path);
    if (ck.kind != "crf")
      throw CheckpointError("expected a crf checkpoint, got '" + ck.kind +
                            "'");
    CrfParams crf;
    CrfConfig cfg;
    cfg.hidden = static_cast<std::size_t>(ck.meta_required("crf.hidden"));
    Rng scratch(0);
    crf.init(StateGrammar::from_json(
                 nlohmann::json::parse(ck.smeta.at("crf.grammar"))),
             static_cast<std::size_t>(ck.meta_required("crf.feature_dim")),
             cfg, scratch);
    checkpoint_get_params(ck, crf.params());
    return crf;
  }
};

struct CrfEmissionTrace {
  BiLstmTrace lstm;
  Tensor potentials;  // (n, S)
};

inline CrfEmissionTrace crf_emissions(const CrfParams& crf,
                                      const Tensor& features) {
  CrfEmissionTrace tr;
  tr.lstm = bilstm_forward(crf.lstm, features);
  tr.potentials = linear_forward(tr.lstm.out, crf.emit_W.value,
                                 crf.emit_b.value);
  return tr;
}

inline void crf_emissions_backward(CrfParams& crf, const Tensor& features,
                                   const CrfEmissionTrace& tr,
                                   const Tensor& d_potentials,
                                   Tensor* d_features_out = nullptr) {
  Tensor d_lstm_out;
  linear_backward(tr.lstm.out, crf.emit_W.value, d_potentials, d_lstm_out,
                  crf.emit_W.grad, crf.emit_b.grad);
  Tensor d_features;
  bilstm_backward(crf.lstm, features, tr.lstm, d_lstm_out, d_features);
  if (d_features_out) *d_features_out = d_features;
}

namespace crf_detail {

// alpha[t][s] = emit[t][s] + LSE_a(alpha[t-1][a] + trans[a][s])
inline Tensor forward_alphas(const CrfParams& crf, const Tensor& emit) {
  const std::size_t n = emit.dim(0), S = emit.dim(1);
  Tensor alpha({n, S});
  for (std::size_t s = 0; s < S; ++s)
    alpha(0, s) = emit(0, s) + crf.start_score(s);
  std::vector<double> buf(S);
  for (std::size_t t = 1; t < n; ++t)
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < S; ++a)
        buf[a] = alpha(t - 1, a) + crf.trans_score(a, s);
      alpha(t, s) = emit(t, s) + logsumexp(buf.data(), S);
    }
  return alpha;
}

inline double partition_from_alphas(const CrfParams& crf,
                                    const Tensor& alpha) {
  const std::size_t n = alpha.dim(0), S = alpha.dim(1);
  std::vector<double> fin(S);
  for (std::size_t s = 0; s < S; ++s)
    fin[s] = alpha(n - 1, s) + crf.end_score(s);
  return logsumexp(fin.data(), S);
}

}  // namespace crf_detail

inline double crf_partition(const CrfParams& crf, const Tensor& emit) {
  const Tensor alpha = crf_detail::forward_alphas(crf, emit);
  return crf_detail::partition_from_alphas(crf, alpha);
}

inline double crf_path_score(const CrfParams& crf, const Tensor& emit,
                             const std::vector<int>& path) {
  const std::size_t n = emit.dim(0);
  if (path.size() != n) throw DataError("crf: path length mismatch");
  double score = crf.start_score(static_cast<std::size_t>(path[0]));
  for (std::size_t t = 0; t < n; ++t) {
    score += emit(t, static_cast<std::size_t>(path[t]));
    if (t > 0)
      score += crf.trans_score(static_cast<std::size_t>(path[t - 1]),
                               static_cast<std::size_t>(path[t]));
  }
  score += crf.end_score(static_cast<std::size_t>(path[n - 1]));
  if (score <= kCrfNegInf / 2)
    throw DataError("crf: label path violates the grammar");
  return score;
}

// log p(path | features) = score(path) - logZ.
inline double crf_log_likelihood(const CrfParams& crf, const Tensor& features,
                                 const std::vector<int>& path) {
  const CrfEmissionTrace tr = crf_emissions(crf, features);
  return crf_path_score(crf, tr.potentials, path) -
         crf_partition(crf, tr.potentials);
}

// Accumulates gradients of `upstream * log-likelihood` into the parameters;
// optionally reports d/d features.
inline double crf_log_likelihood_backward(CrfParams& crf,
                                          const Tensor& features,
                                          const std::vector<int>& path,
                                          double upstream = 1.0,
                                          Tensor* d_features_out = nullptr) {
  const CrfEmissionTrace tr = crf_emissions(crf, features);
  const Tensor& emit = tr.potentials;
  const std::size_t n = emit.dim(0), S = emit.dim(1);
  const Tensor alpha = crf_detail::forward_alphas(crf, emit);
  const double logZ = crf_detail::partition_from_alphas(crf, alpha);
  const double score = crf_path_score(crf, emit, path);

  Tensor d_emit({n, S});
  // path part: +upstream along the labeled path
  crf.start_w.grad[static_cast<std::size_t>(path[0])] += upstream;
  crf.end_w.grad[static_cast<std::size_t>(path[n - 1])] += upstream;
  for (std::size_t t = 0; t < n; ++t) {
    d_emit(t, static_cast<std::size_t>(path[t])) += upstream;
    if (t > 0)
      crf.trans.grad(static_cast<std::size_t>(path[t - 1]),
                     static_cast<std::size_t>(path[t])) += upstream;
  }
  // -upstream * dlogZ via backprop through the recursion
  Tensor dalpha({n, S});
  {
    std::vector<double> fin(S);
    for (std::size_t s = 0; s < S; ++s)
      fin[s] = alpha(n - 1, s) + crf.end_score(s);
    const double mx = logZ;
    for (std::size_t s = 0; s < S; ++s) {
      const double w = std::exp(fin[s] - mx);
      dalpha(n - 1, s) = -upstream * w;
      crf.end_w.grad[s] += -upstream * w;
    }
  }
  std::vector<double> buf(S);
  for (std::size_t t = n; t-- > 1;) {
    for (std::size_t s = 0; s < S; ++s) {
      const double w = dalpha(t, s);
      d_emit(t, s) += w;
      if (w == 0.0) continue;
      double mx = kCrfNegInf;
      for (std::size_t a = 0; a < S; ++a) {
        buf[a] = alpha(t - 1, a) + crf.trans_score(a, s);
        mx = std::max(mx, buf[a]);
      }
      double z = 0.0;
      for (std::size_t a = 0; a < S; ++a) {
        buf[a] = std::exp(buf[a] - mx);
        z += buf[a];
      }
      for (std::size_t a = 0; a < S; ++a) {
        const double p = buf[a] / z;
        if (p == 0.0) continue;
        dalpha(t - 1, a) += w * p;
        crf.trans.grad(a, s) += w * p;
      }
    }
  }
  for (std::size_t s = 0; s < S; ++s) {
    d_emit(0, s) += dalpha(0, s);
    crf.start_w.grad[s] += dalpha(0, s);
  }
  crf_emissions_backward(crf, features, tr, d_emit, d_features_out);
  return score - logZ;
}

// Max-score grammar-respecting path; ties break toward the lower state
// index at every step.
inline std::vector<int> viterbi_decode_potentials(const CrfParams& crf,
                                                  const Tensor& emit) {
  const std::size_t n = emit.dim(0), S = emit.dim(1);
  Tensor best({n, S});
  std::vector<std::vector<int>> back(n, std::vector<int>(S, -1));
  for (std::size_t s = 0; s < S; ++s)
    best(0, s) = emit(0, s) + crf.start_score(s);
  for (std::size_t t = 1; t < n; ++t)
    for (std::size_t s = 0; s < S; ++s) {
      double bv = kCrfNegInf * 2;
      int ba = -1;
      for (std::size_t a = 0; a < S; ++a) {
        const double v = best(t - 1, a) + crf.trans_score(a, s);
        if (v > bv) {  // strict: first (lowest) index wins ties
          bv = v;
          ba = static_cast<int>(a);
        }
      }
      best(t, s) = emit(t, s) + bv;
      back[t][s] = ba;
    }
  double bv = kCrfNegInf * 2;
  int bs = -1;
  for (std::size_t s = 0; s < S; ++s) {
    const double v = best(n - 1, s) + crf.end_score(s);
    if (v > bv) {
      bv = v;
      bs = static_cast<int>(s);
    }
  }
  if (bs < 0 || bv <= kCrfNegInf / 2)
    throw DataError("viterbi: no feasible path under the grammar");
  std::vector<int> path(n);
  path[n - 1] = bs;
  for (std::size_t t = n; t-- > 1;)
    path[t - 1] = back[t][static_cast<std::size_t>(path[t])];
  return path;
}

inline std::vector<int> viterbi_decode(const CrfParams& crf,
                                       const Tensor& features) {
  const CrfEmissionTrace tr = crf_emissions(crf, features);
  return viterbi_decode_potentials(crf, tr.potentials);
}

// Gold state path for an annotation: any grammar-feasible path whose region
// kinds match the per-position annotation (lowest state indices on ties).
// Helix direction is therefore inferred from the surrounding loops.
inline std::vector<int> regions_to_states(const std::vector<TmRegion>& regions,
                                          const StateGrammar& grammar) {
  std::size_t n = 0;
  for (const TmRegion& r : regions) n = std::max(n, r.end);
  const std::size_t S = grammar.size();
  Tensor emit({n, S});
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t s = 0; s < S; ++s) emit(t, s) = kCrfNegInf;
  for (const TmRegion& r : regions)
    for (std::size_t t = r.begin; t < r.end; ++t)
      for (std::size_t s = 0; s < S; ++s)
        if (grammar.states[s].kind == r.kind) emit(t, s) = 0.0;
  // feasibility-only decode over a zero-scored CRF
  CrfParams probe;
  probe.grammar = grammar;
  probe.trans = Parameter("probe.trans", Tensor({S, S}));
  probe.start_w = Parameter("probe.start", Tensor({S}));
  probe.end_w = Parameter("probe.end", Tensor({S}));
  try {
    return viterbi_decode_potentials(probe, emit);
  } catch (const DataError&) {
    throw DataError("annotation is not representable by the grammar");
  }
}

enum class TmCategory { Tm, SpTm, Globular, GlobularSp };

inline const char* tm_category_name(TmCategory c) {
  switch (c) {
    case TmCategory::Tm: return "TM";
    case TmCategory::SpTm: return "SP+TM";
    case TmCategory::Globular: return "Globular";
    case TmCategory::GlobularSp: return "Globular+SP";
  }
  return "?";
}

inline TmCategory tm_category_of(const std::vector<TmRegion>& regions) {
  bool sp = false, tm = false;
  for (const TmRegion& r : regions) {
    sp = sp || r.kind == TmRegionKind::SignalPeptide;
    tm = tm || r.kind == TmRegionKind::TmHelix;
  }
  if (tm) return sp ? TmCategory::SpTm : TmCategory::Tm;
  return sp ? TmCategory::GlobularSp : TmCategory::Globular;
}

// TOPCONS-style scoring: a TM protein is correct when no signal peptide is
// predicted, the predicted TM-region count matches, and each true region
// overlaps a distinct predicted one by at least 5 positions (greedy
// left-to-right). SP+TM additionally requires a leading predicted SP;
// globular categories require the absence of the respective features.
struct TmScore {
  TmCategory category;
  bool correct;
};

inline TmScore tm_category_score(const std::vector<TmRegion>& predicted,
                                 const std::vector<TmRegion>& truth) {
  const TmCategory cat = tm_category_of(truth);
  auto collect = [](const std::vector<TmRegion>& rs, TmRegionKind kind) {
    std::vector<TmRegion> out;
    for (const TmRegion& r : rs)
      if (r.kind == kind) out.push_back(r);
    return out;
  };
  const auto pred_tm = collect(predicted, TmRegionKind::TmHelix);
  const auto true_tm = collect(truth, TmRegionKind::TmHelix);
  const bool pred_sp =
      !collect(predicted, TmRegionKind::SignalPeptide).empty();
  const bool pred_leading_sp =
      !predicted.empty() &&
      predicted.front().kind == TmRegionKind::SignalPeptide;

  auto tm_regions_match = [&]() {
    if (pred_tm.size() != true_tm.size()) return false;
    std::size_t next = 0;
    for (const TmRegion& t : true_tm) {
      bool matched = false;
      while (next < pred_tm.size()) {
        const TmRegion& p = pred_tm[next];
        ++next;
        const std::size_t lo = std::max(p.begin, t.begin);
        const std::size_t hi = std::min(p.end, t.end);
        if (hi > lo && hi - lo >= 5) {
          matched = true;
          break;
        }
      }
      if (!matched) return false;
    }
    return true;
  };

  bool correct = false;
  switch (cat) {
    case TmCategory::Tm:
      correct = !pred_sp && tm_regions_match();
      break;
    case TmCategory::SpTm:
      correct = pred_leading_sp && tm_regions_match();
      break;
    case TmCategory::Globular:
      correct = !pred_sp && pred_tm.empty();
      break;
    case TmCategory::GlobularSp:
      correct = pred_leading_sp && pred_tm.empty();
      break;
  }
  return {cat, correct};
}

struct CrfTrainConfig {
  CrfConfig model;
  std::size_t epochs = 12;
  double lr = 0.01;
  std::uint64_t seed = 0;
};

// Maximum-likelihood training over annotated records.
inline void train_crf(CrfParams& crf,
                      const std::vector<const ProteinRecord*>& records,
                      const std::function<Tensor(const ProteinRecord&)>&
                          featurize,
                      const CrfTrainConfig& cfg) {
  if (records.empty()) throw DataError("train_crf: no records");
  Adam adam({cfg.lr});
  const ParamRefs params = crf.params();
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::vector<int>> gold;
  std::vector<Tensor> feats;
  for (const ProteinRecord* r : records) {
    if (!r->tm_regions) throw DataError("train_crf: record lacks tm labels");
    gold.push_back(regions_to_states(*r->tm_regions, crf.grammar));
    feats.push_back(featurize(*r));
  }
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i-- > 1;) {
      const std::size_t j = rng.uniform_index(i + 1);
      std::swap(order[i], order[j]);
    }
    for (std::size_t k : order) {
      zero_grads(params);
      // minimize negative log likelihood
      crf_log_likelihood_backward(crf, feats[k], gold[k], -1.0);
      adam.step(params);
    }
  }
}

struct TmCvReport {
  std::map<TmCategory, std::pair<std::size_t, std::size_t>>
      per_category;  // correct, total
  double overall = 0.0;

  double category_accuracy(TmCategory c) const {
    auto it = per_category.find(c);
    if (it == per_category.end() || it->second.second == 0) return 0.0;
    return static_cast<double>(it->second.first) /
           static_cast<double>(it->second.second);
  }
};

// Stratified k-fold cross validation; one CRF trained per fold. Folds are
// independent (own rng streams) and may run on parallel workers without
// changing the result.
inline TmCvReport crossvalidate_tm(
    const Dataset& ds, std::size_t folds,
    const std::function<Tensor(const ProteinRecord&)>& featurize,
    const StateGrammar& grammar, const CrfTrainConfig& cfg,
    std::size_t workers = 1) {
  if (folds < 2) throw ConfigError("crossvalidate_tm: folds must be >= 2");
  std::map<TmCategory, std::vector<std::size_t>> by_cat;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.records[i].tm_regions)
      throw DataError("crossvalidate_tm: record lacks tm labels");
    by_cat[tm_category_of(*ds.records[i].tm_regions)].push_back(i);
  }
  Rng rng(cfg.seed);
  std::vector<std::size_t> fold_of(ds.size(), 0);
  for (auto& [cat, ids] : by_cat) {
    for (std::size_t i = ids.size(); i-- > 1;) {
      const std::size_t j = rng.uniform_index(i + 1);
      std::swap(ids[i], ids[j]);
    }
    for (std::size_t k = 0; k < ids.size(); ++k) fold_of[ids[k]] = k % folds;
  }
  std::vector<std::vector<TmScore>> fold_scores(folds);
  parallel_for(folds, workers, [&](std::size_t f) {
    std::vector<const ProteinRecord*> train;
    std::vector<std::size_t> heldout;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (fold_of[i] == f)
        heldout.push_back(i);
      else
        train.push_back(&ds.records[i]);
    }
    if (heldout.empty()) return;
    Rng init_rng(cfg.seed ^ (0x5151u + f));
    CrfParams crf;
    crf.init(grammar, featurize(ds.records[0]).dim(1), cfg.model, init_rng);
    CrfTrainConfig fold_cfg = cfg;
    fold_cfg.seed = cfg.seed ^ (f * 977u);
    train_crf(crf, train, featurize, fold_cfg);
    for (std::size_t i : heldout) {
      const std::vector<int> path =
          viterbi_decode(crf, featurize(ds.records[i]));
      fold_scores[f].push_back(tm_category_score(
          states_to_regions(path, grammar), *ds.records[i].tm_regions));
    }
  });
  TmCvReport report;
  std::size_t correct_total = 0, total = 0;
  for (const auto& scores : fold_scores)
    for (const TmScore& score : scores) {
      auto& slot = report.per_category[score.category];
      slot.second += 1;
      slot.first += score.correct ? 1u : 0u;
      ++total;
      correct_total += score.correct ? 1u : 0u;
    }
  report.overall =
      total == 0 ? 0.0
                 : static_cast<double>(correct_total) /
                       static_cast<double>(total);
  return report;
}

}  // namespace pse
