#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <string>

#include "pse/core/rng.hpp"
#include "pse/eval/nw_align.hpp"

using namespace pse;

TEST_CASE("blosum62 sanity") {
  const Blosum62& t = Blosum62::table();
  const Alphabet& ab = Alphabet::standard();
  auto s = [&](char a, char b) {
    return t.score(ab.index_of(a), ab.index_of(b));
  };
  // diagonal
  const std::string res(Alphabet::residues());
  const int diag[20] = {4, 9, 6, 5, 6, 6, 8, 4, 5, 4,
                        5, 6, 7, 5, 5, 4, 5, 4, 11, 7};
  for (int k = 0; k < 20; ++k) REQUIRE(s(res[k], res[k]) == diag[k]);
  // spot checks against the published table
  REQUIRE(s('A', 'R') == -1);
  REQUIRE(s('W', 'F') == 1);
  REQUIRE(s('I', 'V') == 3);
  REQUIRE(s('D', 'E') == 2);
  REQUIRE(s('K', 'R') == 2);
  REQUIRE(s('S', 'T') == 1);
  REQUIRE(s('Y', 'W') == 2);
  REQUIRE(s('P', 'G') == -2);
  REQUIRE(s('C', 'W') == -2);
  // unknown goes through the X column
  REQUIRE(t.score(Alphabet::kUnknown, ab.index_of('A')) == 0);
  REQUIRE(t.score(Alphabet::kUnknown, Alphabet::kUnknown) == -1);
  REQUIRE(t.score(Alphabet::kUnknown, ab.index_of('P')) == -2);
  // symmetry
  for (int a = 0; a < 21; ++a)
    for (int b = 0; b < 21; ++b) REQUIRE(t.score(a, b) == t.score(b, a));
}

TEST_CASE("nw fixtures") {
  REQUIRE(nw_align_score(std::string("A"), std::string("A")) == 4.0);
  REQUIRE(nw_align_score(std::string("A"), std::string("")) == -11.0);
  REQUIRE(nw_align_score(std::string(""), std::string("AAA")) == -13.0);
  REQUIRE(nw_align_score(std::string("W"), std::string("W")) == 11.0);
  // symmetric
  Rng rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    std::string a, b;
    for (int k = 0; k < 8; ++k)
      a.push_back(Alphabet::residues()[rng.uniform_index(20)]);
    for (int k = 0; k < 5; ++k)
      b.push_back(Alphabet::residues()[rng.uniform_index(20)]);
    REQUIRE(nw_align_score(a, b) == nw_align_score(b, a));
  }
}

namespace {

// Exhaustive alignment enumeration under the same convention: each maximal
// run of k gap positions costs open + (k-1)*extend.
double brute_force_nw(const std::vector<int>& a, const std::vector<int>& b) {
  const Blosum62& t = Blosum62::table();
  double best = -1e18;
  // state: (i, j, last op: 0 none/match, 1 gap-in-b, 2 gap-in-a)
  std::function<void(std::size_t, std::size_t, int, double)> rec =
      [&](std::size_t i, std::size_t j, int last, double score) {
        if (i == a.size() && j == b.size()) {
          best = std::max(best, score);
          return;
        }
        if (i < a.size() && j < b.size())
          rec(i + 1, j + 1, 0,
              score + static_cast<double>(t.score(a[i], b[j])));
        if (i < a.size())
          rec(i + 1, j, 1, score + (last == 1 ? -1.0 : -11.0));
        if (j < b.size())
          rec(i, j + 1, 2, score + (last == 2 ? -1.0 : -11.0));
      };
  rec(0, 0, -1, 0.0);
  return best;
}

}  // namespace

TEST_CASE("nw matches exhaustive enumeration for short sequences") {
  Rng rng(31);
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t n = 1 + rng.uniform_index(5);
    const std::size_t m = 1 + rng.uniform_index(5);
    std::vector<int> a, b;
    for (std::size_t k = 0; k < n; ++k)
      a.push_back(static_cast<int>(rng.uniform_index(20)));
    for (std::size_t k = 0; k < m; ++k)
      b.push_back(static_cast<int>(rng.uniform_index(20)));
    REQUIRE(nw_align_score(a, b) == brute_force_nw(a, b));
  }
}
