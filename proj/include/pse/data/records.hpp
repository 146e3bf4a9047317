#pragma once

#include <array>
#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pse/core/errors.hpp"
#include "pse/core/tensor.hpp"
#include "pse/data/alphabet.hpp"
#include "pse/data/fasta.hpp"
#include "pse/data/geometry.hpp"
#include "pse/io/tsv.hpp"

namespace pse {

// (class, fold, superfamily, family) identifier tuple.
struct HierarchyLabel {
  std::array<std::string, 4> parts;

  bool operator==(const HierarchyLabel& o) const { return parts == o.parts; }

  std::string str() const {
    return parts[0] + "." + parts[1] + "." + parts[2] + "." + parts[3];
  }

  static HierarchyLabel parse(const std::string& s) {
    HierarchyLabel label;
    std::size_t start = 0;
    for (int k = 0; k < 4; ++k) {
      const std::size_t dot = s.find('.', start);
      if (k < 3) {
        if (dot == std::string::npos)
          throw FormatError("hierarchy label needs 4 dot-separated parts: " +
                            s);
        label.parts[static_cast<std::size_t>(k)] = s.substr(start, dot - start);
        start = dot + 1;
      } else {
        if (dot != std::string::npos)
          throw FormatError("hierarchy label has too many parts: " + s);
        label.parts[3] = s.substr(start);
      }
    }
    return label;
  }
};

// Number of shared levels, 0..4 (longest common prefix).
inline int hierarchy_level(const HierarchyLabel& a, const HierarchyLabel& b) {
  int level = 0;
  for (int k = 0; k < 4; ++k) {
    if (a.parts[static_cast<std::size_t>(k)] !=
        b.parts[static_cast<std::size_t>(k)])
      break;
    ++level;
  }
  return level;
}

enum class TmRegionKind { SignalPeptide, TmHelix, Inside, Outside, Globular };

inline char tm_region_letter(TmRegionKind k) {
  switch (k) {
    case TmRegionKind::SignalPeptide: return 'S';
    case TmRegionKind::TmHelix: return 'M';
    case TmRegionKind::Inside: return 'I';
    case TmRegionKind::Outside: return 'O';
    case TmRegionKind::Globular: return 'G';
  }
  return '?';
}

inline TmRegionKind tm_region_from_letter(char c, const char* what) {
  switch (c) {
    case 'S': return TmRegionKind::SignalPeptide;
    case 'M': return TmRegionKind::TmHelix;
    case 'I': return TmRegionKind::Inside;
    case 'O': return TmRegionKind::Outside;
    case 'G': return TmRegionKind::Globular;
  }
  throw FormatError(std::string(what) + ": unknown region letter '" +
                    std::string(1, c) + "'");
}

// Half-open position range [begin, end).
struct TmRegion {
  TmRegionKind kind;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - begin; }
};

struct ProteinRecord {
  std::string id;
  std::vector<int> tokens;
  std::optional<HierarchyLabel> hierarchy;
  std::optional<std::vector<Point3>> coords;
  std::optional<Tensor> contact_map;  // (n, n) binary, diagonal 1
  std::optional<std::vector<int>> ss_labels;  // per-position class 0..7
  std::optional<std::vector<TmRegion>> tm_regions;

  std::size_t length() const { return tokens.size(); }

  std::string sequence() const {
    return Alphabet::standard().decode(tokens);
  }

  void validate() const {
    if (tokens.empty()) throw DataError("record '" + id + "': empty sequence");
    const std::size_t n = tokens.size();
    if (coords && coords->size() != n)
      throw DataError("record '" + id + "': coordinate count " +
                      std::to_string(coords->size()) + " != length " +
                      std::to_string(n));
    if (contact_map) {
      if (contact_map->rank() != 2 || contact_map->dim(0) != n ||
          contact_map->dim(1) != n)
        throw DataError("record '" + id + "': contact map shape mismatch");
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double v = (*contact_map)(i, j);
          if (v != 0.0 && v != 1.0)
            throw DataError("record '" + id + "': non-binary contact map");
          if (v != (*contact_map)(j, i))
            throw DataError("record '" + id + "': asymmetric contact map");
        }
    }
    if (ss_labels && ss_labels->size() != n)
      throw DataError("record '" + id + "': ss label count mismatch");
    if (tm_regions) {
      std::size_t cursor = 0;
      for (const TmRegion& r : *tm_regions) {
        if (r.begin != cursor || r.end <= r.begin)
          throw DataError("record '" + id +
                          "': tm regions must be sorted, non-overlapping and "
                          "covering");
        cursor = r.end;
      }
      if (cursor != n)
        throw DataError("record '" + id + "': tm regions do not cover [0,n)");
    }
  }
};

class Dataset {
 public:
  std::vector<ProteinRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  ProteinRecord* find(const std::string& id) {
    for (ProteinRecord& r : records)
      if (r.id == id) return &r;
    return nullptr;
  }
  const ProteinRecord* find(const std::string& id) const {
    return const_cast<Dataset*>(this)->find(id);
  }

  ProteinRecord& require(const std::string& id) {
    ProteinRecord* r = find(id);
    if (!r) throw DataError("unknown record id: " + id);
    return *r;
  }

  void validate() const {
    for (const ProteinRecord& r : records) r.validate();
  }
};

inline Dataset dataset_from_fasta(std::istream& in) {
  Dataset ds;
  for (const FastaRecord& rec : parse_fasta(in)) {
    ProteinRecord r;
    r.id = rec.id;
    r.tokens = Alphabet::standard().encode(rec.sequence);
    if (r.tokens.empty())
      throw DataError("fasta record '" + rec.id + "' has empty sequence");
    ds.records.push_back(std::move(r));
  }
  return ds;
}

// `id<TAB>class.fold.superfamily.family`
inline void load_labels_tsv(std::istream& in, Dataset& ds) {
  for_each_tsv_row(in, [&](const std::vector<std::string>& cells,
                           std::size_t line_no) {
    if (cells.size() != 2)
      throw FormatError("labels tsv line " + std::to_string(line_no) +
                        ": expected 2 columns");
    ds.require(cells[0]).hierarchy = HierarchyLabel::parse(cells[1]);
  });
}

// `id<TAB>position<TAB>x<TAB>y<TAB>z`; positions 0-based and dense per id.
inline void load_coords_tsv(std::istream& in, Dataset& ds,
                            double contact_threshold = 8.0,
                            bool derive_contacts = true) {
  std::map<std::string, std::vector<std::pair<long long, Point3>>> staged;
  for_each_tsv_row(in, [&](const std::vector<std::string>& cells,
                           std::size_t line_no) {
    if (cells.size() != 5)
      throw FormatError("coords tsv line " + std::to_string(line_no) +
                        ": expected 5 columns");
    const long long pos = parse_int(cells[1], "coords tsv position");
    Point3 p{parse_double(cells[2], "coords tsv x"),
             parse_double(cells[3], "coords tsv y"),
             parse_double(cells[4], "coords tsv z")};
    staged[cells[0]].push_back({pos, p});
  });
  for (auto& [id, rows] : staged) {
    ProteinRecord& rec = ds.require(id);
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Point3> coords;
    coords.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].first != static_cast<long long>(k))
        throw DataError("coords for '" + id +
                        "': positions must be 0-based and dense");
      coords.push_back(rows[k].second);
    }
    if (coords.size() != rec.length())
      throw DataError("coords for '" + id + "': row count " +
                      std::to_string(coords.size()) + " != sequence length " +
                      std::to_string(rec.length()));
    rec.coords = std::move(coords);
    if (derive_contacts)
      rec.contact_map = contacts_from_coordinates(*rec.coords,
                                                  contact_threshold);
  }
}

// `id<TAB>position<TAB>label` with integer labels 0..7.
inline void load_ss_tsv(std::istream& in, Dataset& ds) {
  std::map<std::string, std::vector<std::pair<long long, int>>> staged;
  for_each_tsv_row(in, [&](const std::vector<std::string>& cells,
                           std::size_t line_no) {
    if (cells.size() != 3)
      throw FormatError("ss tsv line " + std::to_string(line_no) +
                        ": expected 3 columns");
    const long long pos = parse_int(cells[1], "ss tsv position");
    const long long label = parse_int(cells[2], "ss tsv label");
    if (label < 0 || label > 7)
      throw FormatError("ss tsv line " + std::to_string(line_no) +
                        ": label must be in 0..7");
    staged[cells[0]].push_back({pos, static_cast<int>(label)});
  });
  for (auto& [id, rows] : staged) {
    ProteinRecord& rec = ds.require(id);
    std::sort(rows.begin(), rows.end());
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].first != static_cast<long long>(k))
        throw DataError("ss labels for '" + id + "': positions not dense");
      labels.push_back(rows[k].second);
    }
    if (labels.size() != rec.length())
      throw DataError("ss labels for '" + id + "': count mismatch");
    rec.ss_labels = std::move(labels);
  }
}

inline std::vector<TmRegion> regions_from_letters(const std::string& letters,
                                                  const char* what) {
  std::vector<TmRegion> regions;
  for (std::size_t i = 0; i < letters.size(); ++i) {
    const TmRegionKind kind = tm_region_from_letter(letters[i], what);
    if (!regions.empty() && regions.back().kind == kind)
      regions.back().end = i + 1;
    else
      regions.push_back({kind, i, i + 1});
  }
  return regions;
}

// `id<TAB>position<TAB>letter` with letters S/M/I/O/G.
inline void load_tm_tsv(std::istream& in, Dataset& ds) {
  std::map<std::string, std::vector<std::pair<long long, char>>> staged;
  for_each_tsv_row(in, [&](const std::vector<std::string>& cells,
                           std::size_t line_no) {
    if (cells.size() != 3)
      throw FormatError("tm tsv line " + std::to_string(line_no) +
                        ": expected 3 columns");
    if (cells[2].size() != 1)
      throw FormatError("tm tsv line " + std::to_string(line_no) +
                        ": label must be a single letter");
    staged[cells[0]].push_back(
        {parse_int(cells[1], "tm tsv position"), cells[2][0]});
  });
  for (auto& [id, rows] : staged) {
    ProteinRecord& rec = ds.require(id);
    std::sort(rows.begin(), rows.end());
    std::string letters;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].first != static_cast<long long>(k))
        throw DataError("tm labels for '" + id + "': positions not dense");
      letters.push_back(rows[k].second);
    }
    if (letters.size() != rec.length())
      throw DataError("tm labels for '" + id + "': count mismatch");
    rec.tm_regions = regions_from_letters(letters, "tm tsv");
  }
}

// All unordered record pairs bucketed by shared hierarchy level.
inline std::array<std::vector<std::pair<std::size_t, std::size_t>>, 5>
pairs_by_level(const Dataset& ds) {
  std::array<std::vector<std::pair<std::size_t, std::size_t>>, 5> buckets;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    if (!ds.records[i].hierarchy) continue;
    for (std::size_t j = i + 1; j < ds.records.size(); ++j) {
      if (!ds.records[j].hierarchy) continue;
      const int level =
          hierarchy_level(*ds.records[i].hierarchy, *ds.records[j].hierarchy);
      buckets[static_cast<std::size_t>(level)].push_back({i, j});
    }
  }
  return buckets;
}

}  // namespace pse
