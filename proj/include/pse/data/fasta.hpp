#pragma once

#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pse/core/errors.hpp"

namespace pse {

struct FastaRecord {
  std::string id;
  std::string sequence;
};

// Record ids are the first whitespace-delimited token of the header line.
inline std::vector<FastaRecord> parse_fasta(std::istream& in) {
  std::vector<FastaRecord> records;
  std::string line;
  bool have_record = false;
  std::size_t line_no = 0;
  auto finish = [&]() {
    if (have_record && records.back().sequence.empty())
      throw FormatError("fasta: empty sequence for record '" +
                        records.back().id + "'");
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      finish();
      std::string header = line.substr(1);
      const std::size_t ws = header.find_first_of(" \t");
      records.push_back({header.substr(0, ws), ""});
      have_record = true;
      continue;
    }
    if (!have_record)
      throw FormatError("fasta: sequence data before any header (line " +
                        std::to_string(line_no) + ")");
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c)))
        records.back().sequence.push_back(c);
  }
  finish();
  return records;
}

inline std::vector<FastaRecord> parse_fasta(const std::string& text) {
  std::istringstream ss(text);
  return parse_fasta(ss);
}

inline void write_fasta(std::ostream& out,
                        const std::vector<FastaRecord>& records,
                        std::size_t wrap = 60) {
  for (const FastaRecord& rec : records) {
    out << '>' << rec.id << '\n';
    for (std::size_t i = 0; i < rec.sequence.size(); i += wrap)
      out << rec.sequence.substr(i, wrap) << '\n';
  }
}

}  // namespace pse
