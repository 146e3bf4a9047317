#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>

#include "pse/core/tensor.hpp"

namespace pse {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;

  bool ok(double tol = 1e-4) const { return max_rel_err <= tol; }
};

// Central finite differences against an analytic gradient. `forward` must
// re-evaluate the scalar objective from the current contents of `x`; the
// buffer is restored coordinatewise after probing. Relative error uses
// max(|analytic|, |numeric|, 1e-8) as denominator.
inline GradCheckResult grad_check(const std::function<double()>& forward,
                                  double* x, const double* analytic,
                                  std::size_t n, double h = 1e-5) {
  GradCheckResult res;
  for (std::size_t i = 0; i < n; ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double fp = forward();
    x[i] = keep - h;
    const double fm = forward();
    x[i] = keep;
    const double numeric = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric),
                                   1e-8});
    const double rel = std::fabs(analytic[i] - numeric) / denom;
    if (rel > res.max_rel_err) {
      res.max_rel_err = rel;
      res.worst_index = i;
      res.analytic_at_worst = analytic[i];
      res.numeric_at_worst = numeric;
    }
  }
  return res;
}

inline GradCheckResult grad_check(const std::function<double()>& forward,
                                  Tensor& x, const Tensor& analytic,
                                  double h = 1e-5) {
  return grad_check(forward, x.data(), analytic.data(), x.size(), h);
}

}  // namespace pse
