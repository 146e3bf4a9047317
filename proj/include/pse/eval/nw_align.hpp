#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "pse/core/errors.hpp"
#include "pse/eval/blosum62.hpp"

namespace pse {

// Global alignment with affine gaps (Gotoh). Convention: a gap of length k
// costs open + (k-1)*extend with the opening charge covering the first
// position, so "A" vs "" scores -11 under the defaults.
struct NwConfig {
  double gap_open = -11.0;
  double gap_extend = -1.0;
};

inline double nw_align_score(const std::vector<int>& a,
                             const std::vector<int>& b, NwConfig cfg = {}) {
  // an empty side degenerates to one pure gap ("A" vs "" -> gap_open)
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) {
    const std::size_t k = std::max(a.size(), b.size());
    return cfg.gap_open + cfg.gap_extend * static_cast<double>(k - 1);
  }
  const std::size_t n = a.size(), m = b.size();
  const Blosum62& sub = Blosum62::table();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  // three-state Gotoh over rows; Ix consumes a, Iy consumes b
  std::vector<double> M(m + 1), Ix(m + 1), Iy(m + 1);
  std::vector<double> pM(m + 1), pIx(m + 1), pIy(m + 1);
  pM[0] = 0.0;
  pIx[0] = kNegInf;
  pIy[0] = kNegInf;
  for (std::size_t j = 1; j <= m; ++j) {
    pM[j] = kNegInf;
    pIx[j] = kNegInf;
    pIy[j] = cfg.gap_open + cfg.gap_extend * static_cast<double>(j - 1);
  }
  for (std::size_t i = 1; i <= n; ++i) {
    M[0] = kNegInf;
    Iy[0] = kNegInf;
    Ix[0] = cfg.gap_open + cfg.gap_extend * static_cast<double>(i - 1);
    for (std::size_t j = 1; j <= m; ++j) {
      const double s =
          static_cast<double>(sub.score(a[i - 1], b[j - 1]));
      M[j] = s + std::max({pM[j - 1], pIx[j - 1], pIy[j - 1]});
      Ix[j] = std::max({pM[j] + cfg.gap_open, pIx[j] + cfg.gap_extend,
                        pIy[j] + cfg.gap_open});
      Iy[j] = std::max({M[j - 1] + cfg.gap_open, Iy[j - 1] + cfg.gap_extend,
                        Ix[j - 1] + cfg.gap_open});
    }
    std::swap(M, pM);
    std::swap(Ix, pIx);
    std::swap(Iy, pIy);
  }
  return std::max({pM[m], pIx[m], pIy[m]});
}

inline double nw_align_score(const std::string& a, const std::string& b,
                             NwConfig cfg = {}) {
  const Alphabet& ab = Alphabet::standard();
  return nw_align_score(ab.encode(a), ab.encode(b), cfg);
}

}  // namespace pse
