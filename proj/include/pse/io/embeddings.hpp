#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pse/core/tensor.hpp"
#include "pse/io/tsv.hpp"

namespace pse {

// Text embeddings container: ">id" line, then one row of tab-separated
// reals per position.
inline void write_embeddings(
    std::ostream& out,
    const std::vector<std::pair<std::string, Tensor>>& records) {
  for (const auto& [id, z] : records) {
    out << '>' << id << '\n';
    for (std::size_t i = 0; i < z.dim(0); ++i) {
      for (std::size_t k = 0; k < z.dim(1); ++k) {
        if (k) out << '\t';
        out << fmt_double(z(i, k));
      }
      out << '\n';
    }
  }
}

inline std::vector<std::pair<std::string, Tensor>> read_embeddings(
    std::istream& in) {
  std::vector<std::pair<std::string, Tensor>> out;
  std::string id;
  std::vector<std::vector<double>> rows;
  auto flush = [&]() {
    if (id.empty() && rows.empty()) return;
    if (id.empty()) throw FormatError("embeddings: rows before any header");
    if (rows.empty())
      throw FormatError("embeddings: record '" + id + "' has no rows");
    const std::size_t d = rows[0].size();
    Tensor z({rows.size(), d});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != d)
        throw FormatError("embeddings: ragged rows in record '" + id + "'");
      for (std::size_t k = 0; k < d; ++k) z(i, k) = rows[i][k];
    }
    out.emplace_back(id, std::move(z));
    rows.clear();
  };
  std::string line;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    if (line[0] == '>') {
      flush();
      id = line.substr(1);
      continue;
    }
    std::vector<double> row;
    for (const std::string& cell : split_tabs(line))
      row.push_back(parse_double(cell, "embeddings"));
    rows.push_back(std::move(row));
  }
  flush();
  return out;
}

}  // namespace pse
