#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "pse/data/synthetic.hpp"
#include "pse/io/tsv.hpp"
#include "pse/train/trainer.hpp"

using namespace pse;

namespace {

SyntheticCorpusConfig small_corpus_cfg() {
  SyntheticCorpusConfig cfg;
  cfg.classes = 2;
  cfg.folds_per_class = 2;
  cfg.superfamilies_per_fold = 1;
  cfg.families_per_superfamily = 2;
  cfg.sequences_per_family = 2;
  cfg.min_length = 30;
  cfg.max_length = 30;
  return cfg;
}

FullModel small_model(std::uint64_t seed) {
  EncoderConfig enc;
  enc.arch = EncoderArch::BiLstm1;
  enc.hidden = 8;
  enc.embed_dim = 6;
  enc.fusion_dim = 12;
  ContactHeadConfig con;
  con.hidden = 4;
  Rng rng(seed);
  FullModel m;
  m.init(enc, con, rng);
  return m;
}

TrainConfig small_train_cfg() {
  TrainConfig cfg;
  cfg.lambda = 0.5;
  cfg.pair_batch = 8;
  cfg.contact_batch = 2;
  cfg.epochs = 2;
  cfg.epoch_size = 16;
  cfg.seed = 5;
  return cfg;
}

std::vector<double> snapshot(ParamRefs params) {
  std::vector<double> out;
  for (const Parameter* p : params)
    out.insert(out.end(), p->value.values().begin(),
               p->value.values().end());
  return out;
}

}  // namespace

TEST_CASE("combined loss is linear in lambda for fixed batches") {
  Rng rng(1);
  Dataset ds = generate_synthetic_corpus(small_corpus_cfg(), rng);
  std::vector<PairExample> pairs{
      {&ds.records[0].tokens, &ds.records[1].tokens, 4},
      {&ds.records[0].tokens, &ds.records[5].tokens, 1}};
  std::vector<ContactExample> contacts{
      {&ds.records[2].tokens, &*ds.records[2].contact_map}};

  auto run = [&](double lambda) {
    FullModel m = small_model(3);
    TrainConfig cfg = small_train_cfg();
    cfg.lambda = lambda;
    Adam adam({cfg.lr});
    return multitask_step(m, nullptr, pairs, contacts, cfg, adam);
  };
  const StepLosses l_half = run(0.5);
  REQUIRE_THAT(l_half.combined,
               Catch::Matchers::WithinAbs(
                   0.5 * l_half.similarity + 0.5 * l_half.contact, 1e-12));
  const StepLosses l_03 = run(0.3);
  // identical model/batches: branch losses agree, only the mix changes
  REQUIRE_THAT(l_03.similarity,
               Catch::Matchers::WithinAbs(l_half.similarity, 1e-12));
  REQUIRE_THAT(l_03.contact,
               Catch::Matchers::WithinAbs(l_half.contact, 1e-12));
  REQUIRE_THAT(l_03.combined,
               Catch::Matchers::WithinAbs(
                   0.3 * l_03.similarity + 0.7 * l_03.contact, 1e-12));
}

TEST_CASE("lambda=1 training leaves the contact head bitwise unchanged") {
  Rng rng(2);
  Dataset ds = generate_synthetic_corpus(small_corpus_cfg(), rng);
  FullModel m = small_model(7);
  const std::vector<double> contact_before = snapshot(m.contact.params());
  const std::vector<double> head_before = snapshot(m.head.params());
  TrainConfig cfg = small_train_cfg();
  cfg.lambda = 1.0;
  train(m, nullptr, ds, nullptr, cfg);
  REQUIRE(snapshot(m.contact.params()) == contact_before);
  REQUIRE(snapshot(m.head.params()) != head_before);
}

TEST_CASE("lambda=0 training leaves the ordinal head bitwise unchanged") {
  Rng rng(3);
  Dataset ds = generate_synthetic_corpus(small_corpus_cfg(), rng);
  FullModel m = small_model(8);
  const std::vector<double> head_before = snapshot(m.head.params());
  const std::vector<double> contact_before = snapshot(m.contact.params());
  TrainConfig cfg = small_train_cfg();
  cfg.lambda = 0.0;
  train(m, nullptr, ds, nullptr, cfg);
  REQUIRE(snapshot(m.head.params()) == head_before);
  REQUIRE(snapshot(m.contact.params()) != contact_before);
}

TEST_CASE("language model parameters are frozen through training") {
  Rng rng(4);
  Dataset ds = generate_synthetic_corpus(small_corpus_cfg(), rng);
  Rng lm_rng(11);
  LanguageModelParams lm;
  lm.init({6, 2}, lm_rng);
  const std::vector<double> lm_before = snapshot(lm.params());

  EncoderConfig enc;
  enc.arch = EncoderArch::BiLstm1;
  enc.hidden = 6;
  enc.embed_dim = 4;
  enc.fusion_dim = 8;
  enc.lm_fusion = true;
  enc.lm_dim = lm.state_dim();
  ContactHeadConfig con;
  con.hidden = 4;
  Rng mrng(12);
  FullModel m;
  m.init(enc, con, mrng);

  TrainConfig cfg = small_train_cfg();
  cfg.epochs = 1;
  train(m, &lm, ds, nullptr, cfg);
  REQUIRE(snapshot(lm.params()) == lm_before);
}

TEST_CASE("training is reproducible under a fixed seed") {
  Rng rng(5);
  Dataset ds = generate_synthetic_corpus(small_corpus_cfg(), rng);
  TrainConfig cfg = small_train_cfg();
  FullModel a = small_model(9);
  FullModel b = small_model(9);
  const TrainResult ra = train(a, nullptr, ds, nullptr, cfg);
  const TrainResult rb = train(b, nullptr, ds, nullptr, cfg);
  REQUIRE(snapshot(a.trainable()) == snapshot(b.trainable()));
  REQUIRE(ra.log.steps.size() == rb.log.steps.size());
  for (std::size_t k = 0; k < ra.log.steps.size(); ++k)
    REQUIRE(ra.log.steps[k].losses.combined ==
            rb.log.steps[k].losses.combined);
}

TEST_CASE("missing contact maps with lambda<1 is a configuration error") {
  Rng rng(6);
  Dataset ds = generate_synthetic_corpus(small_corpus_cfg(), rng);
  for (auto& r : ds.records) r.contact_map.reset();
  FullModel m = small_model(10);
  TrainConfig cfg = small_train_cfg();
  cfg.lambda = 0.5;
  REQUIRE_THROWS_AS(train(m, nullptr, ds, nullptr, cfg), ConfigError);
  cfg.lambda = 1.0;  // similarity-only training is fine without contacts
  REQUIRE_NOTHROW(train(m, nullptr, ds, nullptr, cfg));
}

TEST_CASE("validation produces a full report and rejects empty sets") {
  Rng rng(7);
  Dataset ds = generate_synthetic_corpus(small_corpus_cfg(), rng);
  FullModel m = small_model(11);
  const EvalReport report = validate(m, nullptr, ds, PairScorer::Ssa);
  REQUIRE(report.pair_count == ds.size() * (ds.size() - 1) / 2);
  REQUIRE(report.accuracy >= 0.0);
  // an untrained model cannot materially beat the majority-level baseline
  const auto buckets = pairs_by_level(ds);
  std::size_t biggest = 0;
  for (const auto& b : buckets) biggest = std::max(biggest, b.size());
  const double majority =
      static_cast<double>(biggest) / static_cast<double>(report.pair_count);
  REQUIRE(report.accuracy <= majority + 0.1);
  Dataset empty;
  REQUIRE_THROWS_AS(validate(m, nullptr, empty, PairScorer::Ssa), DataError);
}

TEST_CASE("short multitask run reduces the similarity loss") {
  SyntheticCorpusConfig ccfg = small_corpus_cfg();
  ccfg.sequences_per_family = 3;
  Rng rng(8);
  Dataset ds = generate_synthetic_corpus(ccfg, rng);
  FullModel m = small_model(13);
  TrainConfig cfg;
  cfg.lambda = 0.5;
  cfg.pair_batch = 16;
  cfg.contact_batch = 2;
  cfg.epochs = 8;
  cfg.epoch_size = 64;
  cfg.seed = 21;
  const TrainResult res = train(m, nullptr, ds, nullptr, cfg);
  double first = 0.0, last = 0.0;
  const std::size_t k = 4;
  for (std::size_t i = 0; i < k; ++i) {
    first += res.log.steps[i].losses.similarity;
    last += res.log.steps[res.log.steps.size() - 1 - i].losses.similarity;
  }
  REQUIRE(last < first);
}

TEST_CASE("model checkpoints reload to identical predictions") {
  Rng rng(9);
  Dataset ds = generate_synthetic_corpus(small_corpus_cfg(), rng);
  FullModel m = small_model(14);
  TrainConfig cfg = small_train_cfg();
  cfg.epochs = 1;
  train(m, nullptr, ds, nullptr, cfg);

  const auto dir = std::filesystem::temp_directory_path();
  const std::string p1 = (dir / "model1.ckpt").string();
  const std::string p2 = (dir / "model2.ckpt").string();
  m.save(p1, cfg.scorer);
  FullModel re = FullModel::load(p1);
  re.save(p2, scorer_of(Checkpoint::load(p1)));
  REQUIRE(read_file(p1) == read_file(p2));

  const Tensor za = embed_tokens(m.encoder, nullptr, ds.records[0].tokens);
  const Tensor zb = embed_tokens(re.encoder, nullptr, ds.records[0].tokens);
  REQUIRE(za.values() == zb.values());
  const double sa = score_embeddings(PairScorer::Ssa, za,
                                     embed_tokens(m.encoder, nullptr,
                                                  ds.records[1].tokens));
  REQUIRE(predict_level(sa, m.head) == predict_level(sa, re.head));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}
