#pragma once

#include <array>
#include <sstream>
#include <string>

#include "pse/core/errors.hpp"
#include "pse/data/alphabet.hpp"

namespace pse {

namespace blosum_detail {

// Canonical NCBI BLOSUM62 block (20 residues plus B, Z, X, *). Kept in the
// original layout and re-indexed into our alphabet order at first use; the
// unknown token scores through the X column.
inline constexpr const char* kNcbiBlosum62 = R"(
   A  R  N  D  C  Q  E  G  H  I  L  K  M  F  P  S  T  W  Y  V  B  Z  X  *
A  4 -1 -2 -2  0 -1 -1  0 -2 -1 -1 -1 -1 -2 -1  1  0 -3 -2  0 -2 -1  0 -4
R -1  5  0 -2 -3  1  0 -2  0 -3 -2  2 -1 -3 -2 -1 -1 -3 -2 -3 -1  0 -1 -4
N -2  0  6  1 -3  0  0  0  1 -3 -3  0 -2 -3 -2  1  0 -4 -2 -3  3  0 -1 -4
D -2 -2  1  6 -3  0  2 -1 -1 -3 -4 -1 -3 -3 -1  0 -1 -4 -3 -3  4  1 -1 -4
C  0 -3 -3 -3  9 -3 -4 -3 -3 -1 -1 -3 -1 -2 -3 -1 -1 -2 -2 -1 -3 -3 -2 -4
Q -1  1  0  0 -3  5  2 -2  0 -3 -2  1  0 -3 -1  0 -1 -2 -1 -2  0  3 -1 -4
E -1  0  0  2 -4  2  5 -2  0 -3 -3  1 -2 -3 -1  0 -1 -3 -2 -2  1  4 -1 -4
G  0 -2  0 -1 -3 -2 -2  6 -2 -4 -4 -2 -3 -3 -2  0 -2 -2 -3 -3 -1 -2 -1 -4
H -2  0  1 -1 -3  0  0 -2  8 -3 -3 -1 -2 -1 -2 -1 -2 -2  2 -3  0  0 -1 -4
I -1 -3 -3 -3 -1 -3 -3 -4 -3  4  2 -3  1  0 -3 -2 -1 -3 -1  3 -3 -3 -1 -4
L -1 -2 -3 -4 -1 -2 -3 -4 -3  2  4 -2  2  0 -3 -2 -1 -2 -1  1 -4 -3 -1 -4
K -1  2  0 -1 -3  1  1 -2 -1 -3 -2  5 -1 -3 -1  0 -1 -3 -2 -2  0  1 -1 -4
M -1 -1 -2 -3 -1  0 -2 -3 -2  1  2 -1  5  0 -2 -1 -1 -1 -1  1 -3 -1 -1 -4
F -2 -3 -3 -3 -2 -3 -3 -3 -1  0  0 -3  0  6 -4 -2 -2  1  3 -1 -3 -3 -1 -4
P -1 -2 -2 -1 -3 -1 -1 -2 -2 -3 -3 -1 -2 -4  7 -1 -1 -4 -3 -2 -2 -1 -2 -4
S  1 -1  1  0 -1  0  0  0 -1 -2 -2  0 -1 -2 -1  4  1 -3 -2 -2  0  0  0 -4
T  0 -1  0 -1 -1 -1 -1 -2 -2 -1 -1 -1 -1 -2 -1  1  5 -2 -2  0 -1 -1  0 -4
W -3 -3 -4 -4 -2 -2 -3 -2 -2 -3 -2 -3 -1  1 -4 -3 -2 11  2 -3 -4 -3 -2 -4
Y -2 -2 -2 -3 -2 -1 -2 -3  2 -1 -1 -2 -1  3 -3 -2 -2  2  7 -1 -3 -2 -1 -4
V  0 -3 -3 -3 -1 -2 -2 -3 -3  3  1 -2  1 -1 -2 -2  0 -3 -1  4 -3 -2 -1 -4
B -2 -1  3  4 -3  0  1 -1  0 -3 -4  0 -3 -3 -2  0 -1 -4 -3 -3  4  1 -1 -4
Z -1  0  0  1 -3  3  4 -2  0 -3 -3  1 -1 -3 -1  0 -1 -3 -2 -2  1  4 -1 -4
X  0 -1 -1 -1 -2 -1 -1 -1 -1 -1 -1 -1 -1 -1 -2  0  0 -2 -1 -1 -1 -1 -1 -4
* -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4  1
)";

}  // namespace blosum_detail

// Substitution scores indexed by token (0..19 canonical, 20 unknown -> X).
class Blosum62 {
 public:
  static const Blosum62& table() {
    static const Blosum62 inst;
    return inst;
  }

  int score(int a, int b) const {
    return m_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  }

 private:
  Blosum62() {
    std::istringstream in(blosum_detail::kNcbiBlosum62);
    std::string header_line;
    // first non-empty line is the column header
    while (std::getline(in, header_line) && header_line.empty()) {
    }
    std::istringstream hdr(header_line);
    std::array<char, 24> cols{};
    for (auto& c : cols)
      if (!(hdr >> c)) throw DataError("blosum62: bad header");
    const Alphabet& ab = Alphabet::standard();
    auto token_of = [&](char c) -> int {
      if (c == 'X') return Alphabet::kUnknown;
      if (c == 'B' || c == 'Z' || c == '*') return -1;  // dropped
      return ab.index_of(c);
    };
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      char rc;
      row >> rc;
      const int ra = token_of(rc);
      for (char cc : cols) {
        int v;
        if (!(row >> v)) throw DataError("blosum62: short row");
        const int ca = token_of(cc);
        if (ra >= 0 && ca >= 0)
          m_[static_cast<std::size_t>(ra)][static_cast<std::size_t>(ca)] = v;
      }
    }
  }

  std::array<std::array<int, Alphabet::kSize>, Alphabet::kSize> m_{};
};

}  // namespace pse
