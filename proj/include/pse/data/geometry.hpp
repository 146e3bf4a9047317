#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "pse/core/errors.hpp"
#include "pse/core/tensor.hpp"

namespace pse {

using Point3 = std::array<double, 3>;

inline double distance(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Binary contact map: entry (i,j) = 1 iff dist < threshold (strict). The
// diagonal comes out 1 by zero distance; consumers mask it.
inline Tensor contacts_from_coordinates(const std::vector<Point3>& coords,
                                        double threshold = 8.0) {
  const std::size_t n = coords.size();
  for (const Point3& p : coords)
    for (double c : p)
      if (!std::isfinite(c))
        throw DataError("contacts_from_coordinates: non-finite coordinate");
  Tensor map({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    map(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = distance(coords[i], coords[j]) < threshold ? 1.0 : 0.0;
      map(i, j) = v;
      map(j, i) = v;
    }
  }
  return map;
}

}  // namespace pse
