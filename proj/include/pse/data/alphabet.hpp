#pragma once

#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace pse {

// Fixed 20-residue alphabet plus one unknown token that absorbs every
// non-canonical symbol (X, B, Z, U, O, gaps, ...). Case-insensitive.
class Alphabet {
 public:
  static constexpr std::size_t kCanonical = 20;
  static constexpr int kUnknown = 20;
  static constexpr std::size_t kSize = 21;

  static const Alphabet& standard() {
    static const Alphabet inst;
    return inst;
  }

  // Canonical residues in fixed index order.
  static constexpr std::string_view residues() {
    return "ACDEFGHIKLMNPQRSTVWY";
  }

  int index_of(char c) const {
    return table_[static_cast<unsigned char>(c)];
  }

  char symbol(int idx) const {
    if (idx < 0 || idx >= static_cast<int>(kCanonical)) return 'X';
    return residues()[static_cast<std::size_t>(idx)];
  }

  std::vector<int> encode(std::string_view seq) const {
    std::vector<int> out;
    out.reserve(seq.size());
    for (char c : seq) out.push_back(index_of(c));
    return out;
  }

  std::string decode(const std::vector<int>& tokens) const {
    std::string out;
    out.reserve(tokens.size());
    for (int t : tokens) out.push_back(symbol(t));
    return out;
  }

 private:
  Alphabet() {
    table_.fill(kUnknown);
    const std::string_view res = residues();
    for (std::size_t i = 0; i < res.size(); ++i) {
      table_[static_cast<unsigned char>(res[i])] = static_cast<int>(i);
      table_[static_cast<unsigned char>(
          std::tolower(static_cast<unsigned char>(res[i])))] =
          static_cast<int>(i);
    }
  }

  std::array<int, 256> table_;
};

}  // namespace pse
