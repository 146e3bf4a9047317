// Command-line front end: data synthesis, language-model pretraining,
// multitask training, embedding, pairwise comparison and the evaluation
// harnesses. Every run writes a manifest next to its outputs; with
// --workers 1 and a fixed --seed all outputs are byte-reproducible.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pse/core/checkpoint.hpp"
#include "pse/data/records.hpp"
#include "pse/data/sampler.hpp"
#include "pse/data/synthetic.hpp"
#include "pse/eval/metrics.hpp"
#include "pse/eval/nw_align.hpp"
#include "pse/eval/ss_probe.hpp"
#include "pse/gradcheck_suite.hpp"
#include "pse/io/embeddings.hpp"
#include "pse/io/manifest.hpp"
#include "pse/io/tsv.hpp"
#include "pse/lm/language_model.hpp"
#include "pse/model/contact.hpp"
#include "pse/tm/crf.hpp"
#include "pse/train/trainer.hpp"
#include "pse/util/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pse;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::string na_or(const std::optional<double>& v) {
  return v ? fmt_double(*v) : "NA";
}

Dataset load_dataset(RunManifest& manifest, const std::string& fasta,
                     const std::string& labels = "",
                     const std::string& coords = "",
                     const std::string& ss = "", const std::string& tm = "") {
  auto in = open_input(fasta);
  manifest.add_input(fasta);
  Dataset ds = dataset_from_fasta(in);
  if (!labels.empty()) {
    auto f = open_input(labels);
    manifest.add_input(labels);
    load_labels_tsv(f, ds);
  }
  if (!coords.empty()) {
    auto f = open_input(coords);
    manifest.add_input(coords);
    load_coords_tsv(f, ds);
  }
  if (!ss.empty()) {
    auto f = open_input(ss);
    manifest.add_input(ss);
    load_ss_tsv(f, ds);
  }
  if (!tm.empty()) {
    auto f = open_input(tm);
    manifest.add_input(tm);
    load_tm_tsv(f, ds);
  }
  ds.validate();
  return ds;
}

std::optional<LanguageModelParams> maybe_load_lm(RunManifest& manifest,
                                                 const std::string& path) {
  if (path.empty()) return std::nullopt;
  manifest.add_input(path);
  return LanguageModelParams::load(path);
}

const LanguageModelParams* lm_ptr(
    const std::optional<LanguageModelParams>& lm) {
  return lm ? &*lm : nullptr;
}

void check_lm_pairing(const EncoderParams& enc,
                      const std::optional<LanguageModelParams>& lm) {
  if (enc.cfg.lm_fusion) {
    if (!lm)
      throw ConfigError(
          "this checkpoint was trained with language-model fusion; pass "
          "--lm");
    if (lm->state_dim() != enc.cfg.lm_dim)
      throw ConfigError("language model state dim " +
                        std::to_string(lm->state_dim()) +
                        " does not match the encoder's " +
                        std::to_string(enc.cfg.lm_dim));
  }
}

// ---------------------------------------------------------------- synth-data

struct SynthArgs {
  std::string kind = "scop";
  std::string out_dir;
  std::uint64_t seed = 0;
  SyntheticCorpusConfig scop;
  SyntheticTmConfig tm;
};

int cmd_synth_data(const SynthArgs& a) {
  RunManifest manifest("synth-data", a.seed);
  fs::create_directories(a.out_dir);
  Rng rng(a.seed);
  json cfg{{"kind", a.kind}, {"out", a.out_dir}, {"seed", a.seed}};
  if (a.kind == "scop") {
    SyntheticCorpusConfig c = a.scop;
    c.seed = a.seed;
    cfg["classes"] = c.classes;
    cfg["folds_per_class"] = c.folds_per_class;
    cfg["superfamilies_per_fold"] = c.superfamilies_per_fold;
    cfg["families_per_superfamily"] = c.families_per_superfamily;
    cfg["sequences_per_family"] = c.sequences_per_family;
    cfg["mutation_rates"] = c.mutation_rates;
    cfg["min_length"] = c.min_length;
    cfg["max_length"] = c.max_length;
    const Dataset ds = generate_synthetic_corpus(c, rng);

    std::vector<FastaRecord> fasta;
    for (const auto& r : ds.records) fasta.push_back({r.id, r.sequence()});
    auto fa = open_output(a.out_dir + "/sequences.fasta");
    write_fasta(fa, fasta);

    auto labels = open_output(a.out_dir + "/labels.tsv");
    labels << "# id\tclass.fold.superfamily.family\n";
    for (const auto& r : ds.records)
      labels << r.id << '\t' << r.hierarchy->str() << '\n';

    auto coords = open_output(a.out_dir + "/coords.tsv");
    coords << "# id\tposition\tx\ty\tz\n";
    for (const auto& r : ds.records)
      for (std::size_t i = 0; i < r.coords->size(); ++i) {
        const Point3& p = (*r.coords)[i];
        coords << r.id << '\t' << i << '\t' << fmt_double(p[0]) << '\t'
               << fmt_double(p[1]) << '\t' << fmt_double(p[2]) << '\n';
      }

    auto ss = open_output(a.out_dir + "/ss.tsv");
    ss << "# id\tposition\tlabel\n";
    for (const auto& r : ds.records)
      for (std::size_t i = 0; i < r.ss_labels->size(); ++i)
        ss << r.id << '\t' << i << '\t' << (*r.ss_labels)[i] << '\n';
  } else if (a.kind == "tm") {
    SyntheticTmConfig c = a.tm;
    c.seed = a.seed;
    cfg["proteins_per_category"] = c.proteins_per_category;
    cfg["min_tm_helices"] = c.min_tm_helices;
    cfg["max_tm_helices"] = c.max_tm_helices;
    const Dataset ds = generate_synthetic_tm_corpus(c, rng);
    std::vector<FastaRecord> fasta;
    for (const auto& r : ds.records) fasta.push_back({r.id, r.sequence()});
    auto fa = open_output(a.out_dir + "/sequences.fasta");
    write_fasta(fa, fasta);
    auto tm = open_output(a.out_dir + "/tm.tsv");
    tm << "# id\tposition\tregion\n";
    for (const auto& r : ds.records)
      for (const TmRegion& reg : *r.tm_regions)
        for (std::size_t i = reg.begin; i < reg.end; ++i)
          tm << r.id << '\t' << i << '\t' << tm_region_letter(reg.kind)
             << '\n';
  } else {
    throw ConfigError("synth-data: --kind must be scop or tm");
  }
  manifest.set_config(cfg);
  manifest.write(a.out_dir + "/manifest.json");
  return 0;
}

// --------------------------------------------------------------- pretrain-lm

struct PretrainArgs {
  std::string corpus;
  std::string out = "lm.ckpt";
  std::size_t hidden = 128;
  std::size_t layers = 2;
  std::size_t epochs = 1;
  std::size_t batch = 32;
  double lr = 0.001;
  std::uint64_t seed = 0;
};

int cmd_pretrain_lm(const PretrainArgs& a) {
  RunManifest manifest("pretrain-lm", a.seed);
  auto in = open_input(a.corpus);
  manifest.add_input(a.corpus);
  const Dataset ds = dataset_from_fasta(in);
  std::vector<std::vector<int>> corpus;
  for (const auto& r : ds.records) corpus.push_back(r.tokens);

  LmPretrainConfig cfg;
  cfg.model.hidden = a.hidden;
  cfg.model.layers = a.layers;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.lr = a.lr;
  cfg.seed = a.seed;

  Rng rng(a.seed);
  LanguageModelParams lm;
  lm.init(cfg.model, rng);
  const double initial = lm_loss(lm, corpus);
  const LmPretrainLog log = pretrain_lm(lm, corpus, cfg);
  lm.save(a.out);

  std::cerr << "pretrain-lm: initial loss " << fmt_double(initial)
            << ", final " << fmt_double(log.final_loss) << " ("
            << corpus.size() << " sequences)\n";
  manifest.set_config(json{{"corpus", a.corpus},
                           {"out", a.out},
                           {"hidden", a.hidden},
                           {"layers", a.layers},
                           {"epochs", a.epochs},
                           {"batch", a.batch},
                           {"lr", a.lr},
                           {"seed", a.seed},
                           {"initial_loss", initial},
                           {"final_loss", log.final_loss}});
  manifest.write(a.out + ".manifest.json");
  return 0;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
  std::string fasta, labels, coords;
  std::string val_fasta, val_labels;
  std::string lm;
  std::string out_dir = "run";
  std::string arch = "bilstm3";
  std::size_t hidden = 64;
  std::size_t embed_dim = 32;
  std::size_t fusion_dim = 64;
  std::size_t contact_hidden = 16;
  TrainConfig train;
  std::string scorer = "ssa";
};

int cmd_train(const TrainArgs& a) {
  RunManifest manifest("train", a.train.seed);
  fs::create_directories(a.out_dir);
  TrainConfig cfg = a.train;
  cfg.scorer = pair_scorer_from_name(a.scorer);
  cfg.validate();

  Dataset ds = load_dataset(manifest, a.fasta, a.labels,
                            cfg.lambda < 1.0 ? a.coords : "");
  std::optional<Dataset> val;
  if (!a.val_fasta.empty())
    val = load_dataset(manifest, a.val_fasta, a.val_labels);

  std::optional<LanguageModelParams> lm = maybe_load_lm(manifest, a.lm);
  EncoderConfig enc_cfg;
  enc_cfg.arch = encoder_arch_from_name(a.arch);
  enc_cfg.hidden = a.hidden;
  enc_cfg.embed_dim = a.embed_dim;
  enc_cfg.fusion_dim = a.fusion_dim;
  if (lm) {
    enc_cfg.lm_fusion = true;
    enc_cfg.lm_dim = lm->state_dim();
  }

  Rng rng(cfg.seed);
  FullModel model;
  model.init(enc_cfg, {a.contact_hidden}, rng);

  const TrainResult result =
      train(model, lm_ptr(lm), ds, val ? &*val : nullptr, cfg, a.out_dir);
  model.save(a.out_dir + "/model.ckpt", cfg.scorer);

  {
    auto log = open_output(a.out_dir + "/train_log.tsv");
    TsvWriter w(log, {"epoch", "step", "similarity_loss", "contact_loss",
                      "combined_loss"});
    for (const auto& s : result.log.steps)
      w.write_row_strings({std::to_string(s.epoch), std::to_string(s.step),
                           fmt_double(s.losses.similarity),
                           fmt_double(s.losses.contact),
                           fmt_double(s.losses.combined)});
  }
  if (val) {
    auto log = open_output(a.out_dir + "/val_log.tsv");
    TsvWriter w(log, {"epoch", "pairs", "accuracy", "pearson_r",
                      "spearman_rho", "ap_class", "ap_fold", "ap_superfamily",
                      "ap_family"});
    for (const auto& e : result.log.epochs) {
      if (!e.validation) continue;
      const EvalReport& r = *e.validation;
      w.write_row_strings(
          {std::to_string(e.epoch), std::to_string(r.pair_count),
           fmt_double(r.accuracy), na_or(r.pearson_r), na_or(r.spearman_rho),
           na_or(r.ap_at_level[0]), na_or(r.ap_at_level[1]),
           na_or(r.ap_at_level[2]), na_or(r.ap_at_level[3])});
    }
  }

  manifest.set_config(json{{"fasta", a.fasta},
                           {"labels", a.labels},
                           {"coords", a.coords},
                           {"val_fasta", a.val_fasta},
                           {"lm", a.lm},
                           {"out", a.out_dir},
                           {"arch", a.arch},
                           {"hidden", a.hidden},
                           {"embed_dim", a.embed_dim},
                           {"fusion_dim", a.fusion_dim},
                           {"contact_hidden", a.contact_hidden},
                           {"lambda", cfg.lambda},
                           {"pair_batch", cfg.pair_batch},
                           {"contact_batch", cfg.contact_batch},
                           {"epochs", cfg.epochs},
                           {"epoch_size", cfg.epoch_size},
                           {"smoothing", cfg.smoothing},
                           {"perturb_prob", cfg.perturb_prob},
                           {"lr", cfg.lr},
                           {"seed", cfg.seed},
                           {"scorer", a.scorer},
                           {"contact_min_sep", cfg.contact_min_sep}});
  manifest.write(a.out_dir + "/manifest.json");
  return 0;
}

// --------------------------------------------------------------------- embed

struct EmbedArgs {
  std::string fasta, ckpt, lm, out = "embeddings.tsv";
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

int cmd_embed(const EmbedArgs& a) {
  RunManifest manifest("embed", a.seed);
  Dataset ds = load_dataset(manifest, a.fasta);
  manifest.add_input(a.ckpt);
  FullModel model = FullModel::load(a.ckpt);
  std::optional<LanguageModelParams> lm = maybe_load_lm(manifest, a.lm);
  check_lm_pairing(model.encoder, lm);

  std::vector<std::pair<std::string, Tensor>> out(ds.size());
  parallel_for(ds.size(), a.workers, [&](std::size_t i) {
    out[i] = {ds.records[i].id,
              embed_tokens(model.encoder, lm_ptr(lm), ds.records[i].tokens)};
  });
  auto f = open_output(a.out);
  write_embeddings(f, out);
  manifest.set_config(json{{"fasta", a.fasta},
                           {"ckpt", a.ckpt},
                           {"lm", a.lm},
                           {"out", a.out},
                           {"workers", a.workers},
                           {"seed", a.seed}});
  manifest.write(a.out + ".manifest.json");
  return 0;
}

// ------------------------------------------------------------------- compare

struct CompareArgs {
  std::string a_fasta, b_fasta, ckpt, lm, out = "compare.tsv";
  std::string scorer = "ssa";
  bool all_pairs = false;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

int cmd_compare(const CompareArgs& a) {
  RunManifest manifest("compare", a.seed);
  Dataset da = load_dataset(manifest, a.a_fasta);
  std::optional<Dataset> db;
  if (!a.b_fasta.empty()) db = load_dataset(manifest, a.b_fasta);
  if (!db && !a.all_pairs)
    throw ConfigError("compare: pass --b or --all-pairs");

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (db) {
    for (std::size_t i = 0; i < da.size(); ++i)
      for (std::size_t j = 0; j < db->size(); ++j) pairs.push_back({i, j});
  } else {
    for (std::size_t i = 0; i < da.size(); ++i)
      for (std::size_t j = i + 1; j < da.size(); ++j) pairs.push_back({i, j});
  }

  const bool use_nw = a.scorer == "nw";
  std::optional<FullModel> model;
  std::optional<LanguageModelParams> lm;
  PairScorer scorer = PairScorer::Ssa;
  std::vector<Tensor> za, zb;
  if (!use_nw) {
    scorer = pair_scorer_from_name(a.scorer);
    if (a.ckpt.empty()) throw ConfigError("compare: --ckpt required");
    manifest.add_input(a.ckpt);
    model = FullModel::load(a.ckpt);
    lm = maybe_load_lm(manifest, a.lm);
    check_lm_pairing(model->encoder, lm);
    za.resize(da.size());
    parallel_for(da.size(), a.workers, [&](std::size_t i) {
      za[i] = embed_tokens(model->encoder, lm_ptr(lm), da.records[i].tokens);
    });
    if (db) {
      zb.resize(db->size());
      parallel_for(db->size(), a.workers, [&](std::size_t i) {
        zb[i] =
            embed_tokens(model->encoder, lm_ptr(lm), db->records[i].tokens);
      });
    }
  }

  struct Row {
    double score = 0.0;
    int level = -1;
    std::array<double, 4> p_ge{};
  };
  std::vector<Row> rows(pairs.size());
  parallel_for(pairs.size(), a.workers, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const ProteinRecord& ra = da.records[i];
    const ProteinRecord& rb = db ? db->records[j] : da.records[j];
    Row row;
    if (use_nw) {
      row.score = nw_align_score(ra.tokens, rb.tokens);
    } else {
      const Tensor& ea = za[i];
      const Tensor& eb = db ? zb[j] : za[j];
      row.score = score_embeddings(scorer, ea, eb);
      row.level = predict_level(row.score, model->head);
      row.p_ge = ordinal_probabilities(row.score, model->head).p_ge;
    }
    rows[k] = row;
  });

  auto f = open_output(a.out);
  TsvWriter w(f, {"id_a", "id_b", "score", "predicted_level", "p_ge_1",
                  "p_ge_2", "p_ge_3", "p_ge_4"});
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    const Row& r = rows[k];
    std::vector<std::string> cells{
        da.records[i].id, db ? db->records[j].id : da.records[j].id,
        fmt_double(r.score)};
    if (use_nw) {
      cells.insert(cells.end(), {"NA", "NA", "NA", "NA", "NA"});
    } else {
      cells.push_back(std::to_string(r.level));
      for (double p : r.p_ge) cells.push_back(fmt_double(p));
    }
    w.write_row_strings(cells);
  }
  manifest.set_config(json{{"a", a.a_fasta},
                           {"b", a.b_fasta},
                           {"ckpt", a.ckpt},
                           {"lm", a.lm},
                           {"scorer", a.scorer},
                           {"all_pairs", a.all_pairs},
                           {"out", a.out},
                           {"workers", a.workers},
                           {"seed", a.seed}});
  manifest.write(a.out + ".manifest.json");
  return 0;
}

// ------------------------------------------------------------------ eval-scop

struct EvalScopArgs {
  std::string fasta, labels, pairs_file, ckpt, lm;
  std::string calib_fasta, calib_labels;
  std::string scorer = "model";
  std::string out = "scop_report.tsv";
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

int cmd_eval_scop(const EvalScopArgs& a) {
  RunManifest manifest("eval-scop", a.seed);
  Dataset ds = load_dataset(manifest, a.fasta, a.labels);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (!a.pairs_file.empty()) {
    auto f = open_input(a.pairs_file);
    manifest.add_input(a.pairs_file);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ds.size(); ++i) index[ds.records[i].id] = i;
    for_each_tsv_row(f, [&](const std::vector<std::string>& cells,
                            std::size_t line_no) {
      if (cells.size() < 2)
        throw FormatError("pairs tsv line " + std::to_string(line_no) +
                          ": expected 2 columns");
      const auto ia = index.find(cells[0]);
      const auto ib = index.find(cells[1]);
      if (ia == index.end() || ib == index.end())
        throw DataError("pairs tsv references unknown id at line " +
                        std::to_string(line_no));
      pairs.push_back({ia->second, ib->second});
    });
  } else {
    for (std::size_t i = 0; i < ds.size(); ++i)
      for (std::size_t j = i + 1; j < ds.size(); ++j) pairs.push_back({i, j});
  }
  if (pairs.empty()) throw DataError("eval-scop: no pairs to score");

  const bool use_nw = a.scorer == "nw";
  std::optional<FullModel> model;
  std::optional<LanguageModelParams> lm;
  std::vector<Tensor> z(ds.size());
  PairScorer ps = PairScorer::Ssa;
  if (!use_nw) {
    if (a.ckpt.empty()) throw ConfigError("eval-scop: --ckpt required");
    manifest.add_input(a.ckpt);
    model = FullModel::load(a.ckpt);
    lm = maybe_load_lm(manifest, a.lm);
    check_lm_pairing(model->encoder, lm);
    ps = a.scorer == "model" ? scorer_of(Checkpoint::load(a.ckpt))
                             : pair_scorer_from_name(a.scorer);
    parallel_for(ds.size(), a.workers, [&](std::size_t i) {
      z[i] = embed_tokens(model->encoder, lm_ptr(lm), ds.records[i].tokens);
    });
  }

  auto truth_of = [&](std::size_t i, std::size_t j) {
    if (!ds.records[i].hierarchy || !ds.records[j].hierarchy)
      throw DataError("eval-scop: record without a hierarchy label");
    return hierarchy_level(*ds.records[i].hierarchy, *ds.records[j].hierarchy);
  };

  std::vector<double> scores(pairs.size());
  parallel_for(pairs.size(), a.workers, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    scores[k] = use_nw
                    ? nw_align_score(ds.records[i].tokens, ds.records[j].tokens)
                    : score_embeddings(ps, z[i], z[j]);
  });

  std::vector<ScoredPair> scored(pairs.size());
  if (use_nw) {
    // raw scores bin into levels through fitted thresholds
    ThresholdSet ts;
    if (!a.calib_fasta.empty()) {
      Dataset calib =
          load_dataset(manifest, a.calib_fasta, a.calib_labels);
      std::vector<double> cs;
      std::vector<int> cl;
      const auto buckets = pairs_by_level(calib);
      for (std::size_t level = 0; level < 5; ++level)
        for (const auto& [i, j] : buckets[level]) {
          cs.push_back(nw_align_score(calib.records[i].tokens,
                                      calib.records[j].tokens));
          cl.push_back(static_cast<int>(level));
        }
      ts = fit_thresholds(cs, cl);
    } else {
      std::cerr << "eval-scop: no calibration set given; fitting thresholds "
                   "on the evaluated pairs themselves\n";
      std::vector<int> levels(pairs.size());
      for (std::size_t k = 0; k < pairs.size(); ++k)
        levels[k] = truth_of(pairs[k].first, pairs[k].second);
      ts = fit_thresholds(scores, levels);
    }
    for (std::size_t k = 0; k < pairs.size(); ++k)
      scored[k] = {scores[k], ts.assign(scores[k]),
                   truth_of(pairs[k].first, pairs[k].second)};
  } else {
    for (std::size_t k = 0; k < pairs.size(); ++k)
      scored[k] = {scores[k], predict_level(scores[k], model->head),
                   truth_of(pairs[k].first, pairs[k].second)};
  }

  const EvalReport report = evaluate_pairs(scored);
  auto f = open_output(a.out);
  TsvWriter w(f, {"scorer", "pairs", "accuracy", "pearson_r", "spearman_rho",
                  "ap_class", "ap_fold", "ap_superfamily", "ap_family"});
  w.write_row_strings({a.scorer, std::to_string(report.pair_count),
                       fmt_double(report.accuracy), na_or(report.pearson_r),
                       na_or(report.spearman_rho),
                       na_or(report.ap_at_level[0]),
                       na_or(report.ap_at_level[1]),
                       na_or(report.ap_at_level[2]),
                       na_or(report.ap_at_level[3])});
  manifest.set_config(json{{"fasta", a.fasta},
                           {"labels", a.labels},
                           {"pairs", a.pairs_file},
                           {"ckpt", a.ckpt},
                           {"lm", a.lm},
                           {"scorer", a.scorer},
                           {"calib_fasta", a.calib_fasta},
                           {"out", a.out},
                           {"workers", a.workers},
                           {"seed", a.seed}});
  manifest.write(a.out + ".manifest.json");
  return 0;
}

// -------------------------------------------------------------- eval-contacts

struct EvalContactsArgs {
  std::string fasta, coords, ckpt, lm;
  std::string out = "contact_metrics.tsv";
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

int cmd_eval_contacts(const EvalContactsArgs& a) {
  RunManifest manifest("eval-contacts", a.seed);
  Dataset ds = load_dataset(manifest, a.fasta, "", a.coords);
  manifest.add_input(a.ckpt);
  FullModel model = FullModel::load(a.ckpt);
  std::optional<LanguageModelParams> lm = maybe_load_lm(manifest, a.lm);
  check_lm_pairing(model.encoder, lm);

  std::vector<std::size_t> with_contacts;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.records[i].contact_map) with_contacts.push_back(i);
  if (with_contacts.empty())
    throw DataError("eval-contacts: no records carry coordinates");

  std::vector<Tensor> probs(with_contacts.size());
  parallel_for(with_contacts.size(), a.workers, [&](std::size_t k) {
    const ProteinRecord& rec = ds.records[with_contacts[k]];
    const Tensor z = embed_tokens(model.encoder, lm_ptr(lm), rec.tokens);
    probs[k] = contact_probabilities(model.contact, z);
  });

  auto f = open_output(a.out);
  TsvWriter w(f, {"separation", "metric", "value"});
  for (std::size_t sep : {std::size_t{2}, std::size_t{12}}) {
    // dataset-level metrics pool the symmetrized pairs across proteins;
    // Pr@L averages per protein (L is each protein's length)
    std::vector<double> pooled_scores;
    std::vector<int> pooled_labels;
    double prl = 0.0, prl2 = 0.0, prl5 = 0.0;
    std::size_t prl_count = 0;
    std::size_t positives = 0, scored_pairs = 0;
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t k = 0; k < with_contacts.size(); ++k) {
      const ProteinRecord& rec = ds.records[with_contacts[k]];
      const ContactMetrics m =
          contact_metrics(probs[k], *rec.contact_map, sep);
      const std::size_t n = rec.length();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + sep; j < n; ++j) {
          const double p = 0.5 * (probs[k](i, j) + probs[k](j, i));
          const int y = (*rec.contact_map)(i, j) != 0.0 ? 1 : 0;
          pooled_scores.push_back(p);
          pooled_labels.push_back(y);
          positives += y ? 1u : 0u;
          ++scored_pairs;
          const bool pred = p > 0.5;
          if (pred && y) ++tp;
          if (pred && !y) ++fp;
          if (!pred && y) ++fn;
        }
      if (m.pr_at_l) {
        prl += *m.pr_at_l;
        prl2 += *m.pr_at_l2;
        prl5 += *m.pr_at_l5;
        ++prl_count;
      }
    }
    const std::string s = std::to_string(sep);
    w.write_row_strings({s, "pairs", std::to_string(scored_pairs)});
    w.write_row_strings({s, "positives", std::to_string(positives)});
    w.write_row_strings(
        {s, "precision",
         tp + fp > 0 ? fmt_double(static_cast<double>(tp) /
                                  static_cast<double>(tp + fp))
                     : "NA"});
    w.write_row_strings(
        {s, "recall",
         positives > 0 ? fmt_double(static_cast<double>(tp) /
                                    static_cast<double>(tp + fn))
                       : "NA"});
    std::string f1 = "NA";
    if (tp + fp > 0 && positives > 0) {
      const double prec =
          static_cast<double>(tp) / static_cast<double>(tp + fp);
      const double rec = static_cast<double>(tp) / static_cast<double>(tp + fn);
      f1 = fmt_double(prec + rec == 0.0 ? 0.0
                                        : 2.0 * prec * rec / (prec + rec));
    }
    w.write_row_strings({s, "f1", f1});
    w.write_row_strings(
        {s, "aupr", na_or(average_precision(pooled_scores, pooled_labels))});
    auto avg = [&](double total) {
      return prl_count > 0
                 ? fmt_double(total / static_cast<double>(prl_count))
                 : std::string("NA");
    };
    w.write_row_strings({s, "pr_at_L", avg(prl)});
    w.write_row_strings({s, "pr_at_L2", avg(prl2)});
    w.write_row_strings({s, "pr_at_L5", avg(prl5)});
  }
  manifest.set_config(json{{"fasta", a.fasta},
                           {"coords", a.coords},
                           {"ckpt", a.ckpt},
                           {"lm", a.lm},
                           {"out", a.out},
                           {"workers", a.workers},
                           {"seed", a.seed}});
  manifest.write(a.out + ".manifest.json");
  return 0;
}

// ----------------------------------------------------------------- probe-ss

struct ProbeArgs {
  std::string features = "embed";
  std::string embeddings, fasta, ss;
  std::size_t k = 3;
  double train_frac = 0.75;
  std::size_t hidden = 256;
  std::size_t epochs = 10;
  std::size_t batch = 256;
  double lr = 0.001;
  std::uint64_t seed = 0;
  std::string out = "ss_probe.tsv";
};

int cmd_probe_ss(const ProbeArgs& a) {
  RunManifest manifest("probe-ss", a.seed);
  std::vector<std::pair<std::string, Tensor>> feats;
  Dataset ds;
  if (a.features == "embed") {
    if (a.embeddings.empty())
      throw ConfigError("probe-ss: --features embed needs --embeddings");
    auto f = open_input(a.embeddings);
    manifest.add_input(a.embeddings);
    feats = read_embeddings(f);
    for (const auto& [id, z] : feats) {
      ProteinRecord rec;
      rec.id = id;
      rec.tokens.assign(z.dim(0), 0);  // placeholder tokens; labels attach by id
      ds.records.push_back(rec);
    }
  } else if (a.features == "kmer") {
    if (a.fasta.empty())
      throw ConfigError("probe-ss: --features kmer needs --fasta");
    ds = load_dataset(manifest, a.fasta);
    for (const auto& rec : ds.records)
      feats.emplace_back(rec.id, kmer_onehot_features(rec.tokens, a.k));
  } else {
    throw ConfigError("probe-ss: --features must be embed or kmer");
  }
  {
    auto f = open_input(a.ss);
    manifest.add_input(a.ss);
    load_ss_tsv(f, ds);
  }

  // record-level split keeps positions of one protein on one side
  Rng rng(a.seed);
  std::vector<std::size_t> order(feats.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i-- > 1;) {
    const std::size_t j = rng.uniform_index(i + 1);
    std::swap(order[i], order[j]);
  }
  const std::size_t train_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(static_cast<double>(order.size()) *
                                  a.train_frac));
  if (train_count >= order.size())
    throw DataError("probe-ss: train fraction leaves no test records");

  auto gather = [&](std::size_t begin, std::size_t end, Tensor& x,
                    std::vector<int>& y) {
    std::size_t rows = 0;
    const std::size_t dim = feats[0].second.dim(1);
    for (std::size_t k2 = begin; k2 < end; ++k2)
      rows += feats[order[k2]].second.dim(0);
    x = Tensor({rows, dim});
    std::size_t cursor = 0;
    for (std::size_t k2 = begin; k2 < end; ++k2) {
      const auto& [id, z] = feats[order[k2]];
      const ProteinRecord& rec = ds.require(id);
      if (!rec.ss_labels)
        throw DataError("probe-ss: record '" + id + "' lacks ss labels");
      if (rec.ss_labels->size() != z.dim(0))
        throw DataError("probe-ss: feature/label length mismatch for '" + id +
                        "'");
      for (std::size_t i = 0; i < z.dim(0); ++i) {
        for (std::size_t c = 0; c < dim; ++c) x(cursor, c) = z(i, c);
        y.push_back((*rec.ss_labels)[i]);
        ++cursor;
      }
    }
  };
  Tensor train_x, test_x;
  std::vector<int> train_y, test_y;
  gather(0, train_count, train_x, train_y);
  gather(train_count, order.size(), test_x, test_y);

  SsProbeConfig cfg;
  cfg.hidden = a.hidden;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.lr = a.lr;
  cfg.seed = a.seed;
  const SsProbeResult r = ss_probe(train_x, train_y, test_x, test_y, cfg);
  for (const std::string& warn : r.warnings)
    std::cerr << "probe-ss: warning: " << warn << '\n';

  auto f = open_output(a.out);
  TsvWriter w(f, {"split", "metric", "value"});
  w.write_row_strings({"test", "accuracy", fmt_double(r.accuracy)});
  w.write_row_strings({"test", "perplexity", fmt_double(r.perplexity)});
  w.write_row_strings({"train", "accuracy", fmt_double(r.train_accuracy)});
  w.write_row_strings({"train", "perplexity", fmt_double(r.train_perplexity)});
  manifest.set_config(json{{"features", a.features},
                           {"embeddings", a.embeddings},
                           {"fasta", a.fasta},
                           {"ss", a.ss},
                           {"k", a.k},
                           {"train_frac", a.train_frac},
                           {"hidden", a.hidden},
                           {"epochs", a.epochs},
                           {"batch", a.batch},
                           {"lr", a.lr},
                           {"seed", a.seed},
                           {"out", a.out}});
  manifest.write(a.out + ".manifest.json");
  return 0;
}

// ------------------------------------------------------------ train/eval tm

StateGrammar load_grammar(RunManifest& manifest, const std::string& path) {
  if (path.empty()) return StateGrammar::topology_default();
  manifest.add_input(path);
  return StateGrammar::from_json(json::parse(read_file(path)));
}

struct TmFeatureSetup {
  std::string kind;  // "onehot" or "embed"
  std::optional<FullModel> model;
  std::optional<LanguageModelParams> lm;

  std::function<Tensor(const ProteinRecord&)> featurize() const {
    if (kind == "onehot")
      return [](const ProteinRecord& rec) {
        return one_hot_tokens(rec.tokens);
      };
    const FullModel* m = &*model;
    const LanguageModelParams* l = lm ? &*lm : nullptr;
    return [m, l](const ProteinRecord& rec) {
      return embed_tokens(m->encoder, l, rec.tokens);
    };
  }
};

TmFeatureSetup tm_features(RunManifest& manifest, const std::string& kind,
                           const std::string& ckpt, const std::string& lm) {
  TmFeatureSetup setup;
  setup.kind = kind;
  if (kind == "onehot") return setup;
  if (kind != "embed")
    throw ConfigError("--features must be embed or onehot");
  if (ckpt.empty()) throw ConfigError("--features embed needs --ckpt");
  manifest.add_input(ckpt);
  setup.model = FullModel::load(ckpt);
  setup.lm = maybe_load_lm(manifest, lm);
  check_lm_pairing(setup.model->encoder, setup.lm);
  return setup;
}

struct TrainTmArgs {
  std::string fasta, tm, ckpt, lm, grammar;
  std::string features = "onehot";
  std::string out = "crf.ckpt";
  std::size_t hidden = 64;
  std::size_t epochs = 12;
  double lr = 0.01;
  std::uint64_t seed = 0;
};

int cmd_train_tm(const TrainTmArgs& a) {
  RunManifest manifest("train-tm", a.seed);
  Dataset ds = load_dataset(manifest, a.fasta, "", "", "", a.tm);
  const StateGrammar grammar = load_grammar(manifest, a.grammar);
  const TmFeatureSetup setup = tm_features(manifest, a.features, a.ckpt, a.lm);
  auto featurize = setup.featurize();

  std::vector<const ProteinRecord*> records;
  for (const auto& r : ds.records)
    if (r.tm_regions) records.push_back(&r);
  if (records.empty()) throw DataError("train-tm: no annotated records");

  CrfTrainConfig cfg;
  cfg.model.hidden = a.hidden;
  cfg.epochs = a.epochs;
  cfg.lr = a.lr;
  cfg.seed = a.seed;
  Rng rng(a.seed);
  CrfParams crf;
  crf.init(grammar, featurize(*records[0]).dim(1), cfg.model, rng);
  train_crf(crf, records, featurize, cfg);
  crf.save(a.out);
  {
    // stamp the feature source so eval-tm can check consistency
    Checkpoint ck = Checkpoint::load(a.out);
    ck.smeta["crf.features"] = a.features;
    ck.save(a.out);
  }
  manifest.set_config(json{{"fasta", a.fasta},
                           {"tm", a.tm},
                           {"ckpt", a.ckpt},
                           {"lm", a.lm},
                           {"grammar", a.grammar},
                           {"features", a.features},
                           {"hidden", a.hidden},
                           {"epochs", a.epochs},
                           {"lr", a.lr},
                           {"seed", a.seed},
                           {"out", a.out}});
  manifest.write(a.out + ".manifest.json");
  return 0;
}

struct EvalTmArgs {
  std::string fasta, tm, crf, ckpt, lm, grammar;
  std::string features = "onehot";
  std::string out = "tm_report.tsv";
  std::size_t folds = 0;  // 0: evaluate --crf directly
  std::size_t hidden = 64;
  std::size_t epochs = 12;
  double lr = 0.01;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

void write_tm_report(const std::string& path, const TmCvReport& report) {
  auto f = open_output(path);
  TsvWriter w(f, {"category", "correct", "total", "accuracy"});
  std::size_t correct = 0, total = 0;
  for (const TmCategory cat :
       {TmCategory::Tm, TmCategory::SpTm, TmCategory::Globular,
        TmCategory::GlobularSp}) {
    const auto it = report.per_category.find(cat);
    if (it == report.per_category.end()) {
      w.write_row_strings({tm_category_name(cat), "0", "0", "NA"});
      continue;
    }
    correct += it->second.first;
    total += it->second.second;
    w.write_row_strings({tm_category_name(cat),
                         std::to_string(it->second.first),
                         std::to_string(it->second.second),
                         fmt_double(report.category_accuracy(cat))});
  }
  w.write_row_strings({"Overall", std::to_string(correct),
                       std::to_string(total), fmt_double(report.overall)});
}

int cmd_eval_tm(const EvalTmArgs& a) {
  RunManifest manifest("eval-tm", a.seed);
  Dataset ds = load_dataset(manifest, a.fasta, "", "", "", a.tm);

  TmCvReport report;
  if (a.folds >= 2) {
    const StateGrammar grammar = load_grammar(manifest, a.grammar);
    const TmFeatureSetup setup =
        tm_features(manifest, a.features, a.ckpt, a.lm);
    CrfTrainConfig cfg;
    cfg.model.hidden = a.hidden;
    cfg.epochs = a.epochs;
    cfg.lr = a.lr;
    cfg.seed = a.seed;
    report = crossvalidate_tm(ds, a.folds, setup.featurize(), grammar, cfg,
                              a.workers);
  } else {
    if (a.crf.empty())
      throw ConfigError("eval-tm: pass --crf or --folds >= 2");
    manifest.add_input(a.crf);
    const Checkpoint ck = Checkpoint::load(a.crf);
    CrfParams crf = CrfParams::load(a.crf);
    const std::string feature_kind =
        ck.smeta.count("crf.features") ? ck.smeta.at("crf.features")
                                       : a.features;
    const TmFeatureSetup setup =
        tm_features(manifest, feature_kind, a.ckpt, a.lm);
    auto featurize = setup.featurize();
    std::size_t correct_total = 0, total = 0;
    for (const auto& rec : ds.records) {
      if (!rec.tm_regions) continue;
      const std::vector<int> path = viterbi_decode(crf, featurize(rec));
      const TmScore score = tm_category_score(
          states_to_regions(path, crf.grammar), *rec.tm_regions);
      auto& slot = report.per_category[score.category];
      slot.second += 1;
      slot.first += score.correct ? 1u : 0u;
      ++total;
      correct_total += score.correct ? 1u : 0u;
    }
    if (total == 0) throw DataError("eval-tm: no annotated records");
    report.overall = static_cast<double>(correct_total) /
                     static_cast<double>(total);
  }
  write_tm_report(a.out, report);
  manifest.set_config(json{{"fasta", a.fasta},
                           {"tm", a.tm},
                           {"crf", a.crf},
                           {"ckpt", a.ckpt},
                           {"lm", a.lm},
                           {"grammar", a.grammar},
                           {"features", a.features},
                           {"folds", a.folds},
                           {"hidden", a.hidden},
                           {"epochs", a.epochs},
                           {"lr", a.lr},
                           {"out", a.out},
                           {"workers", a.workers},
                           {"seed", a.seed}});
  manifest.write(a.out + ".manifest.json");
  return 0;
}

// ----------------------------------------------------------------- grad-check

struct GradCheckArgs {
  std::uint64_t seed = 0;
  std::size_t seeds = 20;
  double tol = 1e-4;
  std::string op;  // optional filter
  bool all = true;
};

int cmd_grad_check(const GradCheckArgs& a) {
  std::map<std::string, double> worst;
  for (std::uint64_t s = a.seed; s < a.seed + a.seeds; ++s)
    for (const GradCheckCase& c : run_gradcheck_suite(s)) {
      if (!a.op.empty() && c.op != a.op) continue;
      worst[c.op] = std::max(worst[c.op], c.max_rel_err);
    }
  if (worst.empty()) throw ConfigError("grad-check: unknown --op filter");
  bool ok = true;
  for (const auto& [op, err] : worst) {
    const bool pass = err <= a.tol;
    ok = ok && pass;
    std::cout << (pass ? "PASS" : "FAIL") << '\t' << op << '\t'
              << fmt_double(err) << '\n';
  }
  if (!ok) throw NumericError("grad-check: at least one operation failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"protein sequence embeddings: multitask training and "
               "evaluation toolkit"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  // precedence: command-line flags > config file > built-in defaults
  app.set_config("--config", "", "read options from an ini/toml file");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand(
      "synth-data", "generate a synthetic hierarchy or membrane corpus");
  synth_cmd->add_option("--kind", synth.kind, "scop|tm")->default_val("scop");
  synth_cmd->add_option("--out", synth.out_dir, "output directory")
      ->required();
  synth_cmd->add_option("--seed", synth.seed, "rng seed");
  synth_cmd->add_option("--classes", synth.scop.classes, "class count");
  synth_cmd->add_option("--folds", synth.scop.folds_per_class,
                        "folds per class");
  synth_cmd->add_option("--superfamilies",
                        synth.scop.superfamilies_per_fold,
                        "superfamilies per fold");
  synth_cmd->add_option("--families", synth.scop.families_per_superfamily,
                        "families per superfamily");
  synth_cmd->add_option("--seqs-per-family",
                        synth.scop.sequences_per_family,
                        "sequences per family");
  synth_cmd->add_option("--mutation-rates", synth.scop.mutation_rates,
                        "fold superfamily family leaf substitution rates");
  synth_cmd->add_option("--min-length", synth.scop.min_length,
                        "minimum ancestor length");
  synth_cmd->add_option("--max-length", synth.scop.max_length,
                        "maximum ancestor length");
  synth_cmd->add_option("--per-category", synth.tm.proteins_per_category,
                        "tm corpus: proteins per category");
  synth_cmd->add_option("--min-helices", synth.tm.min_tm_helices,
                        "tm corpus: minimum membrane helices");
  synth_cmd->add_option("--max-helices", synth.tm.max_tm_helices,
                        "tm corpus: maximum membrane helices");

  PretrainArgs pre;
  auto* pre_cmd = app.add_subcommand(
      "pretrain-lm", "pretrain the bidirectional language model");
  pre_cmd->add_option("--corpus", pre.corpus, "fasta corpus")->required();
  pre_cmd->add_option("--out", pre.out, "checkpoint path");
  pre_cmd->add_option("--hidden", pre.hidden, "lstm units per layer");
  pre_cmd->add_option("--layers", pre.layers, "lstm layers");
  pre_cmd->add_option("--epochs", pre.epochs, "training epochs");
  pre_cmd->add_option("--batch", pre.batch, "minibatch size");
  pre_cmd->add_option("--lr", pre.lr, "learning rate");
  pre_cmd->add_option("--seed", pre.seed, "rng seed");

  TrainArgs tr;
  auto* tr_cmd =
      app.add_subcommand("train", "multitask similarity + contact training");
  tr_cmd->add_option("--fasta", tr.fasta, "training sequences")->required();
  tr_cmd->add_option("--labels", tr.labels, "hierarchy labels tsv")
      ->required();
  tr_cmd->add_option("--coords", tr.coords,
                     "coordinates tsv (required when lambda < 1)");
  tr_cmd->add_option("--val-fasta", tr.val_fasta, "validation sequences");
  tr_cmd->add_option("--val-labels", tr.val_labels,
                     "validation hierarchy labels");
  tr_cmd->add_option("--lm", tr.lm, "pretrained language model checkpoint");
  tr_cmd->add_option("--out", tr.out_dir, "output directory")->required();
  tr_cmd->add_option("--arch", tr.arch, "linear|fc|bilstm1|bilstm3");
  tr_cmd->add_option("--hidden", tr.hidden, "encoder lstm units");
  tr_cmd->add_option("--embed-dim", tr.embed_dim, "embedding dimension");
  tr_cmd->add_option("--fusion-dim", tr.fusion_dim, "input fusion width");
  tr_cmd->add_option("--contact-hidden", tr.contact_hidden,
                     "contact head hidden width");
  tr_cmd->add_option("--lambda", tr.train.lambda,
                     "similarity loss weight in [0,1]");
  tr_cmd->add_option("--pair-batch", tr.train.pair_batch, "pairs per step");
  tr_cmd->add_option("--contact-batch", tr.train.contact_batch,
                     "contact sequences per step");
  tr_cmd->add_option("--epochs", tr.train.epochs, "training epochs");
  tr_cmd->add_option("--epoch-size", tr.train.epoch_size,
                     "pair draws per epoch");
  tr_cmd->add_option("--smoothing", tr.train.smoothing,
                     "level distribution smoothing exponent");
  tr_cmd->add_option("--perturb", tr.train.perturb_prob,
                     "residue resampling probability");
  tr_cmd->add_option("--lr", tr.train.lr, "learning rate");
  tr_cmd->add_option("--seed", tr.train.seed, "rng seed");
  tr_cmd->add_option("--scorer", tr.scorer, "ssa|ua|me");
  tr_cmd->add_option("--contact-min-sep", tr.train.contact_min_sep,
                     "|i-j| separation entering the contact loss");

  EmbedArgs em;
  auto* em_cmd =
      app.add_subcommand("embed", "emit per-position embeddings for a fasta");
  em_cmd->add_option("--fasta", em.fasta, "input sequences")->required();
  em_cmd->add_option("--ckpt", em.ckpt, "model checkpoint")->required();
  em_cmd->add_option("--lm", em.lm, "language model checkpoint");
  em_cmd->add_option("--out", em.out, "output embeddings file");
  em_cmd->add_option("--workers", em.workers, "parallel workers");
  em_cmd->add_option("--seed", em.seed, "rng seed (manifest only)");

  CompareArgs cp;
  auto* cp_cmd = app.add_subcommand("compare", "score sequence pairs");
  cp_cmd->add_option("--a", cp.a_fasta, "first fasta")->required();
  cp_cmd->add_option("--b", cp.b_fasta, "second fasta (cross pairs)");
  cp_cmd->add_flag("--all-pairs", cp.all_pairs,
                   "score all pairs within --a");
  cp_cmd->add_option("--ckpt", cp.ckpt, "model checkpoint");
  cp_cmd->add_option("--lm", cp.lm, "language model checkpoint");
  cp_cmd->add_option("--scorer", cp.scorer, "ssa|ua|me|nw");
  cp_cmd->add_option("--out", cp.out, "output tsv");
  cp_cmd->add_option("--workers", cp.workers, "parallel workers");
  cp_cmd->add_option("--seed", cp.seed, "rng seed (manifest only)");

  EvalScopArgs es;
  auto* es_cmd = app.add_subcommand(
      "eval-scop", "structural similarity benchmark over labeled pairs");
  es_cmd->add_option("--fasta", es.fasta, "sequences")->required();
  es_cmd->add_option("--labels", es.labels, "hierarchy labels tsv")
      ->required();
  es_cmd->add_option("--pairs", es.pairs_file, "explicit pairs tsv");
  es_cmd->add_option("--ckpt", es.ckpt, "model checkpoint");
  es_cmd->add_option("--lm", es.lm, "language model checkpoint");
  es_cmd->add_option("--scorer", es.scorer, "model|ssa|ua|me|nw");
  es_cmd->add_option("--calib-fasta", es.calib_fasta,
                     "calibration sequences (nw thresholds)");
  es_cmd->add_option("--calib-labels", es.calib_labels,
                     "calibration labels");
  es_cmd->add_option("--out", es.out, "report tsv");
  es_cmd->add_option("--workers", es.workers, "parallel workers");
  es_cmd->add_option("--seed", es.seed, "rng seed (manifest only)");

  EvalContactsArgs ec;
  auto* ec_cmd =
      app.add_subcommand("eval-contacts", "contact prediction metrics");
  ec_cmd->add_option("--fasta", ec.fasta, "sequences")->required();
  ec_cmd->add_option("--coords", ec.coords, "coordinates tsv")->required();
  ec_cmd->add_option("--ckpt", ec.ckpt, "model checkpoint")->required();
  ec_cmd->add_option("--lm", ec.lm, "language model checkpoint");
  ec_cmd->add_option("--out", ec.out, "metrics tsv");
  ec_cmd->add_option("--workers", ec.workers, "parallel workers");
  ec_cmd->add_option("--seed", ec.seed, "rng seed (manifest only)");

  ProbeArgs pb;
  auto* pb_cmd = app.add_subcommand(
      "probe-ss", "per-position secondary structure probe");
  pb_cmd->add_option("--features", pb.features, "embed|kmer");
  pb_cmd->add_option("--embeddings", pb.embeddings,
                     "embeddings file (embed features)");
  pb_cmd->add_option("--fasta", pb.fasta, "sequences (kmer features)");
  pb_cmd->add_option("--ss", pb.ss, "per-position labels tsv")->required();
  pb_cmd->add_option("--k", pb.k, "kmer window width (odd)");
  pb_cmd->add_option("--train-frac", pb.train_frac,
                     "record-level training fraction");
  pb_cmd->add_option("--hidden", pb.hidden, "mlp hidden width");
  pb_cmd->add_option("--epochs", pb.epochs, "training epochs");
  pb_cmd->add_option("--batch", pb.batch, "minibatch size");
  pb_cmd->add_option("--lr", pb.lr, "learning rate");
  pb_cmd->add_option("--seed", pb.seed, "rng seed");
  pb_cmd->add_option("--out", pb.out, "report tsv");

  TrainTmArgs tt;
  auto* tt_cmd = app.add_subcommand(
      "train-tm", "train the transmembrane tagger on annotated sequences");
  tt_cmd->add_option("--fasta", tt.fasta, "sequences")->required();
  tt_cmd->add_option("--tm", tt.tm, "per-position region letters tsv")
      ->required();
  tt_cmd->add_option("--features", tt.features, "embed|onehot");
  tt_cmd->add_option("--ckpt", tt.ckpt, "model checkpoint (embed features)");
  tt_cmd->add_option("--lm", tt.lm, "language model checkpoint");
  tt_cmd->add_option("--grammar", tt.grammar, "grammar json (default built-in)");
  tt_cmd->add_option("--hidden", tt.hidden, "emission bilstm units");
  tt_cmd->add_option("--epochs", tt.epochs, "training epochs");
  tt_cmd->add_option("--lr", tt.lr, "learning rate");
  tt_cmd->add_option("--seed", tt.seed, "rng seed");
  tt_cmd->add_option("--out", tt.out, "crf checkpoint path");

  EvalTmArgs et;
  auto* et_cmd = app.add_subcommand(
      "eval-tm", "evaluate the tagger (fixed checkpoint or cross-validation)");
  et_cmd->add_option("--fasta", et.fasta, "sequences")->required();
  et_cmd->add_option("--tm", et.tm, "per-position region letters tsv")
      ->required();
  et_cmd->add_option("--crf", et.crf, "crf checkpoint (direct evaluation)");
  et_cmd->add_option("--folds", et.folds,
                     "cross-validation folds (>= 2 enables cv)");
  et_cmd->add_option("--features", et.features, "embed|onehot (cv mode)");
  et_cmd->add_option("--ckpt", et.ckpt, "model checkpoint (embed features)");
  et_cmd->add_option("--lm", et.lm, "language model checkpoint");
  et_cmd->add_option("--grammar", et.grammar, "grammar json");
  et_cmd->add_option("--hidden", et.hidden, "emission bilstm units (cv)");
  et_cmd->add_option("--epochs", et.epochs, "training epochs (cv)");
  et_cmd->add_option("--lr", et.lr, "learning rate (cv)");
  et_cmd->add_option("--out", et.out, "report tsv");
  et_cmd->add_option("--workers", et.workers, "parallel workers");
  et_cmd->add_option("--seed", et.seed, "rng seed");

  GradCheckArgs gc;
  auto* gc_cmd = app.add_subcommand(
      "grad-check", "finite-difference checks for every trainable op");
  gc_cmd->add_flag("--all", gc.all, "check every registered op (default)");
  gc_cmd->add_option("--op", gc.op, "check a single op by name");
  gc_cmd->add_option("--seed", gc.seed, "first rng seed");
  gc_cmd->add_option("--seeds", gc.seeds, "number of seeds");
  gc_cmd->add_option("--tol", gc.tol, "relative error tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth_data(synth);
    if (pre_cmd->parsed()) return cmd_pretrain_lm(pre);
    if (tr_cmd->parsed()) return cmd_train(tr);
    if (em_cmd->parsed()) return cmd_embed(em);
    if (cp_cmd->parsed()) return cmd_compare(cp);
    if (es_cmd->parsed()) return cmd_eval_scop(es);
    if (ec_cmd->parsed()) return cmd_eval_contacts(ec);
    if (pb_cmd->parsed()) return cmd_probe_ss(pb);
    if (tt_cmd->parsed()) return cmd_train_tm(tt);
    if (et_cmd->parsed()) return cmd_eval_tm(et);
    if (gc_cmd->parsed()) return cmd_grad_check(gc);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
