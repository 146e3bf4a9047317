#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pse/core/errors.hpp"
#include "pse/core/rng.hpp"
#include "pse/data/alphabet.hpp"
#include "pse/data/geometry.hpp"
#include "pse/data/records.hpp"

namespace pse {

// Desk-scale stand-in for a curated structural hierarchy. Each class draws an
// ancestor sequence and a structure plan (segments of helix/strand separated
// by turn caps); descendants mutate the sequence at per-level rates and
// perturb the plan slightly, so contact maps are family-specific while
// sequence similarity grades with the number of shared levels. Coordinates
// are laid out as a serpentine chain; contacts (band plus cross-strand pairs)
// and secondary-structure labels both derive from the plan.
struct SyntheticCorpusConfig {
  std::size_t classes = 2;
  std::size_t folds_per_class = 2;
  std::size_t superfamilies_per_fold = 2;
  std::size_t families_per_superfamily = 2;
  std::size_t sequences_per_family = 2;
  // substitution rates applied at fold, superfamily, family, leaf level
  std::array<double, 4> mutation_rates{0.30, 0.18, 0.10, 0.05};
  std::size_t min_length = 64;
  std::size_t max_length = 64;
  std::uint64_t seed = 0;

  void validate() const {
    if (classes < 1 || folds_per_class < 1 || superfamilies_per_fold < 1 ||
        families_per_superfamily < 1 || sequences_per_family < 1)
      throw ConfigError("synthetic corpus: all counts must be >= 1");
    for (double r : mutation_rates)
      if (r < 0.0 || r > 1.0)
        throw ConfigError("synthetic corpus: mutation rates must be in [0,1]");
    if (min_length < 12 || max_length < min_length)
      throw ConfigError("synthetic corpus: bad length range (min 12)");
  }
};

namespace synth_detail {

enum class SegmentType { Helix, Strand };

struct PlanSegment {
  SegmentType type;
  std::size_t length;
};

struct StructurePlan {
  std::vector<PlanSegment> segments;

  std::size_t total_length() const {
    std::size_t n = 0;
    for (const PlanSegment& s : segments) n += s.length;
    return n;
  }
};

enum class Role { HelixCore, StrandCore, Turn };

inline std::vector<Role> plan_roles(const StructurePlan& plan) {
  std::vector<Role> roles;
  for (const PlanSegment& seg : plan.segments) {
    for (std::size_t t = 0; t < seg.length; ++t) {
      const bool cap = t < 2 || t + 2 >= seg.length;
      if (cap)
        roles.push_back(Role::Turn);
      else
        roles.push_back(seg.type == SegmentType::Helix ? Role::HelixCore
                                                       : Role::StrandCore);
    }
  }
  return roles;
}

inline StructurePlan draw_plan(std::size_t length, Rng& rng) {
  StructurePlan plan;
  std::size_t remaining = length;
  while (remaining > 0) {
    std::size_t len = 8 + rng.uniform_index(7);  // 8..14
    if (remaining < len + 6) len = remaining;    // absorb the tail
    plan.segments.push_back(
        {rng.bernoulli(0.5) ? SegmentType::Helix : SegmentType::Strand, len});
    remaining -= len;
  }
  return plan;
}

// Small structural modification: toggle one segment type and shift one
// boundary by a position. Total length is preserved.
inline StructurePlan tweak_plan(const StructurePlan& base, Rng& rng) {
  StructurePlan plan = base;
  if (plan.segments.empty()) return plan;
  auto& seg = plan.segments[rng.uniform_index(plan.segments.size())];
  seg.type =
      seg.type == SegmentType::Helix ? SegmentType::Strand : SegmentType::Helix;
  if (plan.segments.size() >= 2) {
    const std::size_t k = rng.uniform_index(plan.segments.size() - 1);
    PlanSegment& a = plan.segments[k];
    PlanSegment& b = plan.segments[k + 1];
    if (rng.bernoulli(0.5)) {
      if (a.length > 6) {
        --a.length;
        ++b.length;
      }
    } else if (b.length > 6) {
      ++a.length;
      --b.length;
    }
  }
  return plan;
}

// Residue draws conditioned on structural role; helix cores hydrophobic,
// turns hydrophilic, strands in between. Indices follow Alphabet::residues()
// ("ACDEFGHIKLMNPQRSTVWY").
inline const std::vector<double>& role_weights(Role role) {
  //                         A    C    D    E    F    G    H    I    K    L
  //                         M    N    P    Q    R    S    T    V    W    Y
  static const std::vector<double> helix = {
      6.0, 2.0, 0.5, 0.5, 4.0, 1.0, 0.5, 6.0, 0.5, 7.0,
      4.0, 0.5, 0.3, 0.5, 0.5, 1.0, 1.0, 6.0, 2.0, 1.5};
  static const std::vector<double> strand = {
      2.0, 1.5, 0.7, 0.7, 3.5, 1.0, 0.8, 4.5, 0.8, 3.0,
      1.5, 0.8, 0.4, 0.8, 0.8, 1.5, 3.0, 5.0, 1.5, 3.0};
  static const std::vector<double> turn = {
      1.0, 0.3, 4.0, 4.0, 0.4, 5.0, 1.5, 0.4, 3.5, 0.5,
      0.4, 3.5, 4.0, 2.5, 2.5, 3.5, 2.0, 0.5, 0.2, 0.5};
  switch (role) {
    case Role::HelixCore: return helix;
    case Role::StrandCore: return strand;
    case Role::Turn: return turn;
  }
  return turn;
}

inline std::vector<int> draw_ancestor(const std::vector<Role>& roles,
                                      Rng& rng) {
  std::vector<int> tokens;
  tokens.reserve(roles.size());
  for (Role role : roles)
    tokens.push_back(static_cast<int>(rng.categorical(role_weights(role))));
  return tokens;
}

inline std::vector<int> mutate(const std::vector<int>& tokens, double rate,
                               Rng& rng) {
  std::vector<int> out = tokens;
  for (int& t : out)
    if (rng.bernoulli(rate))
      t = static_cast<int>(rng.uniform_index(Alphabet::kCanonical));
  return out;
}

// Serpentine backbone: strand segments run straight at 3.8 A per residue,
// helix segments coil with a 1.5 A rise, rows sit 5 A apart. Adjacent rows
// give the long-range contact pairs; within-row spacing gives the band.
inline std::vector<Point3> build_coordinates(const StructurePlan& plan) {
  std::vector<Point3> coords;
  double x = 0.0, y = 0.0;
  double dir = 1.0;
  for (const PlanSegment& seg : plan.segments) {
    if (seg.type == SegmentType::Strand) {
      for (std::size_t t = 0; t < seg.length; ++t)
        coords.push_back({x + dir * 3.8 * static_cast<double>(t), y, 0.0});
      x += dir * 3.8 * static_cast<double>(seg.length - 1);
    } else {
      constexpr double kTwoPi = 6.283185307179586;
      for (std::size_t t = 0; t < seg.length; ++t) {
        const double phase = kTwoPi * static_cast<double>(t) / 3.6;
        coords.push_back({x + dir * 1.5 * static_cast<double>(t),
                          y + 2.3 * std::sin(phase),
                          2.3 * std::cos(phase) - 2.3});
      }
      x += dir * 1.5 * static_cast<double>(seg.length - 1);
    }
    y += 5.0;
    dir = -dir;
  }
  return coords;
}

inline std::vector<int> plan_ss_labels(const std::vector<Role>& roles) {
  std::vector<int> labels;
  labels.reserve(roles.size());
  for (Role role : roles) {
    switch (role) {
      case Role::HelixCore: labels.push_back(0); break;
      case Role::StrandCore: labels.push_back(2); break;
      case Role::Turn: labels.push_back(7); break;
    }
  }
  return labels;
}

}  // namespace synth_detail

inline Dataset generate_synthetic_corpus(const SyntheticCorpusConfig& cfg,
                                         Rng& rng) {
  using namespace synth_detail;
  cfg.validate();
  Dataset ds;
  std::size_t serial = 0;
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    const std::size_t length =
        cfg.min_length + rng.uniform_index(cfg.max_length - cfg.min_length + 1);
    const StructurePlan class_plan = draw_plan(length, rng);
    const std::vector<int> class_seq =
        draw_ancestor(plan_roles(class_plan), rng);
    for (std::size_t f = 0; f < cfg.folds_per_class; ++f) {
      const StructurePlan fold_plan = tweak_plan(class_plan, rng);
      const std::vector<int> fold_seq =
          mutate(class_seq, cfg.mutation_rates[0], rng);
      for (std::size_t s = 0; s < cfg.superfamilies_per_fold; ++s) {
        const StructurePlan sf_plan = tweak_plan(fold_plan, rng);
        const std::vector<int> sf_seq =
            mutate(fold_seq, cfg.mutation_rates[1], rng);
        for (std::size_t m = 0; m < cfg.families_per_superfamily; ++m) {
          const StructurePlan fam_plan = tweak_plan(sf_plan, rng);
          const std::vector<int> fam_seq =
              mutate(sf_seq, cfg.mutation_rates[2], rng);
          const std::vector<Point3> coords = build_coordinates(fam_plan);
          const std::vector<int> ss = plan_ss_labels(plan_roles(fam_plan));
          for (std::size_t l = 0; l < cfg.sequences_per_family; ++l) {
            ProteinRecord rec;
            rec.id = "p" + std::to_string(serial++);
            rec.tokens = mutate(fam_seq, cfg.mutation_rates[3], rng);
            rec.hierarchy = HierarchyLabel{
                {std::to_string(c), std::to_string(f), std::to_string(s),
                 std::to_string(m)}};
            rec.coords = coords;
            rec.contact_map = contacts_from_coordinates(coords);
            rec.ss_labels = ss;
            ds.records.push_back(std::move(rec));
          }
        }
      }
    }
  }
  return ds;
}

// Synthetic membrane-protein corpus for the transmembrane tagger. Regions
// follow the usual topology grammar: optional leading signal peptide, then
// alternating loops and hydrophobic membrane helices, or a globular body.
struct SyntheticTmConfig {
  std::size_t proteins_per_category = 12;
  std::size_t min_tm_helices = 1;
  std::size_t max_tm_helices = 3;
  std::uint64_t seed = 0;

  void validate() const {
    if (proteins_per_category < 1)
      throw ConfigError("tm corpus: proteins_per_category must be >= 1");
    if (min_tm_helices < 1 || max_tm_helices < min_tm_helices)
      throw ConfigError("tm corpus: bad helix count range");
  }
};

namespace synth_detail {

// Membrane stretches and signal peptides draw from the helix-core residue
// distribution of the structural corpus; every loop kind (inside, outside,
// globular) shares the turn distribution. Per-position statistics therefore
// separate membrane from loop but nothing else: topology has to come from
// run lengths and chain position, and a signal peptide looks exactly like a
// short leading membrane helix.
inline const std::vector<double>& tm_weights(TmRegionKind kind) {
  switch (kind) {
    case TmRegionKind::TmHelix:
    case TmRegionKind::SignalPeptide: return role_weights(Role::HelixCore);
    case TmRegionKind::Inside:
    case TmRegionKind::Outside:
    case TmRegionKind::Globular: return role_weights(Role::Turn);
  }
  return role_weights(Role::Turn);
}

inline void append_region(std::vector<int>& tokens,
                          std::vector<TmRegion>& regions, TmRegionKind kind,
                          std::size_t len, Rng& rng) {
  const std::size_t begin = tokens.size();
  for (std::size_t t = 0; t < len; ++t) {
    if (kind == TmRegionKind::SignalPeptide && t == 0) {
      tokens.push_back(Alphabet::standard().index_of('M'));
      continue;
    }
    tokens.push_back(static_cast<int>(rng.categorical(tm_weights(kind))));
  }
  regions.push_back({kind, begin, tokens.size()});
}

}  // namespace synth_detail

// Categories used by the benchmark: TM only, SP+TM, globular, globular+SP.
inline Dataset generate_synthetic_tm_corpus(const SyntheticTmConfig& cfg,
                                            Rng& rng) {
  using namespace synth_detail;
  cfg.validate();
  Dataset ds;
  std::size_t serial = 0;
  auto make = [&](bool with_sp, bool with_tm) {
    ProteinRecord rec;
    rec.id = "tm" + std::to_string(serial++);
    std::vector<int> tokens;
    std::vector<TmRegion> regions;
    if (with_sp)
      // shorter than a membrane helix; that and the leading position are
      // the only cues separating it from one
      append_region(tokens, regions, TmRegionKind::SignalPeptide,
                    8 + rng.uniform_index(6), rng);
    if (with_tm) {
      const std::size_t helices =
          cfg.min_tm_helices +
          rng.uniform_index(cfg.max_tm_helices - cfg.min_tm_helices + 1);
      // after a signal peptide the chain starts outside
      bool inside = with_sp ? false : rng.bernoulli(0.5);
      append_region(tokens, regions,
                    inside ? TmRegionKind::Inside : TmRegionKind::Outside,
                    8 + rng.uniform_index(15), rng);
      for (std::size_t h = 0; h < helices; ++h) {
        append_region(tokens, regions, TmRegionKind::TmHelix,
                      15 + rng.uniform_index(9), rng);
        inside = !inside;
        append_region(tokens, regions,
                      inside ? TmRegionKind::Inside : TmRegionKind::Outside,
                      8 + rng.uniform_index(15), rng);
      }
    } else {
      append_region(tokens, regions, TmRegionKind::Globular,
                    50 + rng.uniform_index(40), rng);
    }
    rec.tokens = std::move(tokens);
    rec.tm_regions = std::move(regions);
    ds.records.push_back(std::move(rec));
  };
  for (std::size_t k = 0; k < cfg.proteins_per_category; ++k) {
    make(false, true);   // TM
    make(true, true);    // SP+TM
    make(false, false);  // Globular
    make(true, false);   // Globular+SP
  }
  return ds;
}

}  // namespace pse
