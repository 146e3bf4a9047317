#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pse/core/adam.hpp"
#include "pse/core/checkpoint.hpp"
#include "pse/data/sampler.hpp"
#include "pse/eval/metrics.hpp"
#include "pse/lm/language_model.hpp"
#include "pse/model/contact.hpp"
#include "pse/model/encoder.hpp"
#include "pse/model/similarity.hpp"

namespace pse {

enum class PairScorer { Ssa, Ua, Me };

inline const char* pair_scorer_name(PairScorer s) {
  switch (s) {
    case PairScorer::Ssa: return "ssa";
    case PairScorer::Ua: return "ua";
    case PairScorer::Me: return "me";
  }
  return "?";
}

inline PairScorer pair_scorer_from_name(const std::string& s) {
  if (s == "ssa") return PairScorer::Ssa;
  if (s == "ua") return PairScorer::Ua;
  if (s == "me") return PairScorer::Me;
  throw ConfigError("unknown scorer: " + s + " (expected ssa|ua|me)");
}

// Encoder + ordinal head + contact head. The language model rides along as a
// frozen input transform and is never part of the trainable set.
struct FullModel {
  EncoderParams encoder;
  OrdinalHead head;
  ContactHeadParams contact;

  void init(const EncoderConfig& enc_cfg, const ContactHeadConfig& con_cfg,
            Rng& rng) {
    encoder.init(enc_cfg, rng);
    head.init();
    contact.init(con_cfg, enc_cfg.embed_dim, rng);
  }

  ParamRefs trainable() {
    ParamRefs out = encoder.params();
    for (Parameter* p : head.params()) out.push_back(p);
    for (Parameter* p : contact.params()) out.push_back(p);
    return out;
  }

  void save(const std::string& path, PairScorer scorer = PairScorer::Ssa) {
    Checkpoint ck;
    ck.kind = "model";
    ck.meta["model.scorer"] = static_cast<std::int64_t>(scorer);
    encoder.save(ck);
    contact.save(ck);
    checkpoint_put_params(ck, head.params());
    ck.save(path);
  }

  static FullModel load_from(const Checkpoint& ck) {
    if (ck.kind != "model")
      throw CheckpointError("expected a model checkpoint, got '" + ck.kind +
                            "'");
    FullModel m;
    m.encoder = EncoderParams::load(ck);
    m.contact = ContactHeadParams::load(ck);
    m.head.init();
    checkpoint_get_params(ck, m.head.params());
    return m;
  }

  static FullModel load(const std::string& path) {
    return load_from(Checkpoint::load(path));
  }
};

inline PairScorer scorer_of(const Checkpoint& ck) {
  return static_cast<PairScorer>(ck.meta_or("model.scorer", 0));
}

// Embed a token sequence, computing frozen LM states when the encoder was
// built with fusion.
inline Tensor embed_tokens(const EncoderParams& enc,
                           const LanguageModelParams* lm,
                           const std::vector<int>& tokens) {
  if (enc.cfg.lm_fusion) {
    if (lm == nullptr)
      throw ConfigError("encoder expects a language model checkpoint");
    const Tensor states = lm_hidden_states(*lm, tokens);
    return encode(enc, tokens, &states).z;
  }
  return encode(enc, tokens, nullptr).z;
}

inline double score_embeddings(PairScorer scorer, const Tensor& a,
                               const Tensor& b) {
  switch (scorer) {
    case PairScorer::Ssa: return ssa_score(a, b).s_hat;
    case PairScorer::Ua: return ua_score(a, b);
    case PairScorer::Me: return me_score(a, b);
  }
  throw ConfigError("bad scorer");
}

struct TrainConfig {
  double lambda = 0.1;
  std::size_t pair_batch = 64;
  std::size_t contact_batch = 10;
  std::size_t epochs = 100;
  std::size_t epoch_size = 100000;
  double smoothing = 0.5;
  double perturb_prob = 0.05;
  double lr = 0.001;
  std::uint64_t seed = 0;
  PairScorer scorer = PairScorer::Ssa;
  std::size_t contact_min_sep = 2;

  void validate() const {
    if (lambda < 0.0 || lambda > 1.0)
      throw ConfigError("lambda must be in [0,1]");
    if (pair_batch < 1 || contact_batch < 1)
      throw ConfigError("batch sizes must be >= 1");
    if (perturb_prob < 0.0 || perturb_prob > 1.0)
      throw ConfigError("perturbation probability must be in [0,1]");
  }
};

struct StepLosses {
  double similarity = 0.0;
  double contact = 0.0;
  double combined = 0.0;
};

struct TrainLog {
  struct Step {
    std::size_t epoch = 0;
    std::size_t step = 0;
    StepLosses losses;
  };
  struct Epoch {
    std::size_t epoch = 0;
    std::optional<EvalReport> validation;
  };
  std::vector<Step> steps;
  std::vector<Epoch> epochs;
};

struct PairExample {
  const std::vector<int>* a = nullptr;
  const std::vector<int>* b = nullptr;
  int level = 0;
};

struct ContactExample {
  const std::vector<int>* tokens = nullptr;
  const Tensor* observed = nullptr;
};

// One optimizer step over the interpolated objective
// lambda * L_similarity + (1 - lambda) * L_contact; with lambda at either
// extreme the other branch is skipped entirely, so its parameters (and their
// Adam moments) never move.
inline StepLosses multitask_step(FullModel& model,
                                 const LanguageModelParams* lm,
                                 const std::vector<PairExample>& pairs,
                                 const std::vector<ContactExample>& contacts,
                                 const TrainConfig& cfg, Adam& adam) {
  StepLosses losses;
  const ParamRefs params = model.trainable();
  zero_grads(params);

  if (cfg.lambda > 0.0) {
    if (pairs.empty()) throw ConfigError("multitask_step: no pair batch");
    struct PairTrace {
      Tensor lm_a, lm_b;
      EncoderTrace enc_a, enc_b;
      std::optional<AlignmentResult> align;
    };
    std::vector<PairTrace> traces(pairs.size());
    std::vector<double> scores(pairs.size());
    std::vector<int> levels(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      PairTrace& tr = traces[k];
      const Tensor* sa = nullptr;
      const Tensor* sb = nullptr;
      if (model.encoder.cfg.lm_fusion) {
        if (lm == nullptr)
          throw ConfigError("training with lm fusion needs an lm checkpoint");
        tr.lm_a = lm_hidden_states(*lm, *pairs[k].a);
        tr.lm_b = lm_hidden_states(*lm, *pairs[k].b);
        sa = &tr.lm_a;
        sb = &tr.lm_b;
      }
      tr.enc_a = encode(model.encoder, *pairs[k].a, sa);
      tr.enc_b = encode(model.encoder, *pairs[k].b, sb);
      switch (cfg.scorer) {
        case PairScorer::Ssa:
          tr.align = ssa_score(tr.enc_a.z, tr.enc_b.z);
          scores[k] = tr.align->s_hat;
          break;
        case PairScorer::Ua:
          scores[k] = ua_score(tr.enc_a.z, tr.enc_b.z);
          break;
        case PairScorer::Me:
          scores[k] = me_score(tr.enc_a.z, tr.enc_b.z);
          break;
      }
      levels[k] = pairs[k].level;
    }
    losses.similarity = similarity_loss(scores, levels, model.head);
    const std::vector<double> dscore =
        similarity_loss_backward(scores, levels, model.head, cfg.lambda);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      PairTrace& tr = traces[k];
      Tensor dZa(tr.enc_a.z.shape()), dZb(tr.enc_b.z.shape());
      switch (cfg.scorer) {
        case PairScorer::Ssa:
          ssa_backward(*tr.align, tr.enc_a.z, tr.enc_b.z, dscore[k], dZa,
                       dZb);
          break;
        case PairScorer::Ua:
          ua_backward(tr.enc_a.z, tr.enc_b.z, dscore[k], dZa, dZb);
          break;
        case PairScorer::Me:
          me_backward(tr.enc_a.z, tr.enc_b.z, dscore[k], dZa, dZb);
          break;
      }
      encode_backward(model.encoder, tr.enc_a, dZa);
      encode_backward(model.encoder, tr.enc_b, dZb);
    }
  }

  if (cfg.lambda < 1.0) {
    if (contacts.empty())
      throw ConfigError(
          "multitask_step: lambda < 1 requires a contact batch");
    const double upstream =
        (1.0 - cfg.lambda) / static_cast<double>(contacts.size());
    for (const ContactExample& ex : contacts) {
      Tensor lm_states;
      const Tensor* states = nullptr;
      if (model.encoder.cfg.lm_fusion) {
        if (lm == nullptr)
          throw ConfigError("training with lm fusion needs an lm checkpoint");
        lm_states = lm_hidden_states(*lm, *ex.tokens);
        states = &lm_states;
      }
      EncoderTrace enc = encode(model.encoder, *ex.tokens, states);
      const ContactTrace tr = contact_forward(model.contact, enc.z);
      Tensor dZ;
      const double seq_loss = contact_loss_backward(
          model.contact, enc.z, tr, *ex.observed, cfg.contact_min_sep,
          upstream, dZ);
      losses.contact += seq_loss / static_cast<double>(contacts.size());
      encode_backward(model.encoder, enc, dZ);
    }
  }

  losses.combined =
      cfg.lambda * losses.similarity + (1.0 - cfg.lambda) * losses.contact;
  if (!std::isfinite(losses.combined))
    throw NumericError(
        "multitask_step: non-finite loss (similarity=" +
        std::to_string(losses.similarity) +
        ", contact=" + std::to_string(losses.contact) + ")");
  adam.step(params);
  return losses;
}

// Score heldout pairs with the model's own level rule.
inline EvalReport validate(const FullModel& model,
                           const LanguageModelParams* lm,
                           const Dataset& heldout, PairScorer scorer) {
  const auto buckets = pairs_by_level(heldout);
  std::vector<ScoredPair> scored;
  std::vector<Tensor> embeddings(heldout.size());
  std::vector<bool> have(heldout.size(), false);
  auto embed_cached = [&](std::size_t i) -> const Tensor& {
    if (!have[i]) {
      embeddings[i] = embed_tokens(model.encoder, lm, heldout.records[i].tokens);
      have[i] = true;
    }
    return embeddings[i];
  };
  for (std::size_t level = 0; level < 5; ++level)
    for (const auto& [i, j] : buckets[level]) {
      const double s =
          score_embeddings(scorer, embed_cached(i), embed_cached(j));
      scored.push_back(
          {s, predict_level(s, model.head), static_cast<int>(level)});
    }
  if (scored.empty()) throw DataError("validate: no labeled heldout pairs");
  return evaluate_pairs(scored);
}

struct TrainResult {
  TrainLog log;
  std::vector<std::string> checkpoints;
};

// Full multitask loop: smoothed pair sampling with sequence perturbation,
// interleaved contact batches, one checkpoint per epoch.
inline TrainResult train(FullModel& model, const LanguageModelParams* lm,
                         const Dataset& dataset, const Dataset* heldout,
                         const TrainConfig& cfg,
                         const std::string& out_dir = "") {
  cfg.validate();
  PairSamplerConfig scfg;
  scfg.smoothing = cfg.smoothing;
  scfg.batch_size = cfg.pair_batch;
  scfg.epoch_size = cfg.epoch_size;
  PairSampler sampler(dataset, scfg);

  std::vector<std::size_t> contact_pool;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (dataset.records[i].contact_map) contact_pool.push_back(i);
  if (cfg.lambda < 1.0 && contact_pool.empty())
    throw ConfigError("train: lambda < 1 but no records carry contact maps");

  Rng rng(cfg.seed);
  Adam adam({cfg.lr});
  TrainResult result;
  const std::size_t steps_per_epoch =
      std::max<std::size_t>(1, cfg.epoch_size / cfg.pair_batch);

  std::size_t contact_cursor = 0;
  std::vector<std::size_t> contact_order = contact_pool;
  auto next_contact_batch = [&]() {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < cfg.contact_batch; ++k) {
      if (contact_cursor == 0 && !contact_order.empty()) {
        for (std::size_t i = contact_order.size(); i-- > 1;) {
          const std::size_t j = rng.uniform_index(i + 1);
          std::swap(contact_order[i], contact_order[j]);
        }
      }
      if (contact_order.empty()) break;
      out.push_back(contact_order[contact_cursor]);
      contact_cursor = (contact_cursor + 1) % contact_order.size();
    }
    return out;
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      // sample and perturb the pair batch
      std::vector<SampledPair> raw = sampler.sample_batch(rng);
      std::vector<std::vector<int>> storage;
      storage.reserve(2 * raw.size() + cfg.contact_batch);
      std::vector<PairExample> pairs;
      for (const SampledPair& sp : raw) {
        storage.push_back(perturb_sequence(dataset.records[sp.a].tokens,
                                           cfg.perturb_prob, rng));
        storage.push_back(perturb_sequence(dataset.records[sp.b].tokens,
                                           cfg.perturb_prob, rng));
        pairs.push_back({&storage[storage.size() - 2],
                         &storage[storage.size() - 1], sp.level});
      }
      std::vector<ContactExample> contacts;
      if (cfg.lambda < 1.0) {
        for (std::size_t idx : next_contact_batch()) {
          storage.push_back(perturb_sequence(dataset.records[idx].tokens,
                                             cfg.perturb_prob, rng));
          contacts.push_back(
              {&storage.back(), &*dataset.records[idx].contact_map});
        }
      }
      const StepLosses losses =
          multitask_step(model, lm, pairs, contacts, cfg, adam);
      result.log.steps.push_back({epoch, step, losses});
    }
    TrainLog::Epoch ep;
    ep.epoch = epoch;
    if (heldout != nullptr && !heldout->empty())
      ep.validation = validate(model, lm, *heldout, cfg.scorer);
    result.log.epochs.push_back(ep);
    if (!out_dir.empty()) {
      const std::string path =
          out_dir + "/model_epoch" + std::to_string(epoch + 1) + ".ckpt";
      model.save(path, cfg.scorer);
      result.checkpoints.push_back(path);
    }
  }
  return result;
}

}  // namespace pse
