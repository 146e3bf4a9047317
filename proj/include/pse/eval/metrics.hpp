#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "pse/core/errors.hpp"

namespace pse {

// Product-moment correlation; absent for constant input or length < 2.
inline std::optional<double> pearson(const std::vector<double>& xs,
                                     const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw DataError("pearson: length mismatch");
  const std::size_t n = xs.size();
  if (n < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

// Average ranks (1-based); ties share the mean of their rank range.
inline std::vector<double> average_ranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) /
                                 2.0 +
                             1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

inline std::optional<double> spearman(const std::vector<double>& xs,
                                      const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw DataError("spearman: length mismatch");
  return pearson(average_ranks(xs), average_ranks(ys));
}

// AP = sum over ranked positives of (R_n - R_{n-1}) * P_n. Ties keep input
// order (stable sort); absent when there are no positives.
inline std::optional<double> average_precision(
    const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw DataError("average_precision: length mismatch");
  const std::size_t n = scores.size();
  std::size_t positives = 0;
  for (int y : labels) positives += y != 0 ? 1u : 0u;
  if (positives == 0) return std::nullopt;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return scores[a] > scores[b];
  });
  double ap = 0.0;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[order[k]] != 0) {
      ++tp;
      const double precision =
          static_cast<double>(tp) / static_cast<double>(k + 1);
      ap += precision / static_cast<double>(positives);
    }
  }
  return std::min(1.0, ap);  // accumulation can overshoot 1 by ~1e-15
}

// Four monotone cut points partitioning a scalar score into levels 0..4.
struct ThresholdSet {
  std::array<double, 4> cuts{};

  int assign(double score) const {
    int level = 0;
    for (double c : cuts)
      if (score >= c) ++level;
    return level;
  }
};

// Exhaustive-optimal monotone thresholds maximizing calibration accuracy.
// Split points are restricted to boundaries between distinct sorted scores;
// among optima the lexicographically smallest cut vector is returned.
inline ThresholdSet fit_thresholds(const std::vector<double>& scores,
                                   const std::vector<int>& levels) {
  if (scores.size() != levels.size() || scores.empty())
    throw DataError("fit_thresholds: bad input");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return scores[a] < scores[b];
  });
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (std::size_t k = 0; k < n; ++k) {
    s[k] = scores[order[k]];
    y[k] = levels[order[k]];
    if (y[k] < 0 || y[k] > 4) throw DataError("fit_thresholds: level not 0..4");
  }
  // prefix[t][p]: count of level-t examples among the first p
  std::array<std::vector<double>, 5> prefix;
  for (auto& v : prefix) v.assign(n + 1, 0.0);
  for (std::size_t p = 0; p < n; ++p)
    for (int t = 0; t < 5; ++t)
      prefix[static_cast<std::size_t>(t)][p + 1] =
          prefix[static_cast<std::size_t>(t)][p] +
          (y[p] == t ? 1.0 : 0.0);
  std::vector<bool> boundary(n + 1, false);
  boundary[0] = boundary[n] = true;
  for (std::size_t p = 1; p < n; ++p) boundary[p] = s[p - 1] < s[p];

  // G[t][p] = best correct count over levels t..4 when bin t starts at p.
  // Scanned right to left preferring smaller split points on ties.
  std::array<std::vector<double>, 5> G;
  std::array<std::vector<std::size_t>, 4> arg;
  for (auto& v : G) v.assign(n + 1, 0.0);
  for (auto& v : arg) v.assign(n + 1, n);
  for (std::size_t p = 0; p <= n; ++p)
    G[4][p] = prefix[4][n] - prefix[4][p];
  for (int t = 3; t >= 0; --t) {
    const auto tt = static_cast<std::size_t>(t);
    double best = -1.0;
    std::size_t best_q = n;
    for (std::size_t p = n + 1; p-- > 0;) {
      if (boundary[p]) {
        const double cand = prefix[tt][p] + G[tt + 1][p];
        if (cand >= best) {  // >=: later (smaller p) wins ties
          best = cand;
          best_q = p;
        }
      }
      G[tt][p] = best - prefix[tt][p];
      arg[tt][p] = best_q;
    }
  }
  std::array<std::size_t, 4> splits{};
  std::size_t p = 0;
  for (std::size_t t = 0; t < 4; ++t) {
    splits[t] = arg[t][p];
    p = splits[t];
  }
  ThresholdSet ts;
  for (std::size_t t = 0; t < 4; ++t) {
    const std::size_t k = splits[t];
    if (k == 0)
      ts.cuts[t] = s.front() - 1.0;
    else if (k == n)
      ts.cuts[t] = s.back() + 1.0;
    else
      ts.cuts[t] = 0.5 * (s[k - 1] + s[k]);
  }
  return ts;
}

struct EvalReport {
  double accuracy = 0.0;
  std::optional<double> pearson_r;
  std::optional<double> spearman_rho;
  // average precision for retrieving pairs with y >= 1 (class) .. >= 4
  // (family)
  std::array<std::optional<double>, 4> ap_at_level;
  std::size_t pair_count = 0;
};

struct ScoredPair {
  double score = 0.0;
  int predicted = 0;
  int truth = 0;
};

inline EvalReport evaluate_pairs(const std::vector<ScoredPair>& pairs) {
  if (pairs.empty()) throw DataError("evaluate_pairs: empty pair set");
  EvalReport report;
  report.pair_count = pairs.size();
  std::vector<double> scores(pairs.size());
  std::vector<double> truth_real(pairs.size());
  std::size_t correct = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    scores[k] = pairs[k].score;
    truth_real[k] = static_cast<double>(pairs[k].truth);
    if (pairs[k].predicted == pairs[k].truth) ++correct;
  }
  report.accuracy =
      static_cast<double>(correct) / static_cast<double>(pairs.size());
  report.pearson_r = pearson(scores, truth_real);
  report.spearman_rho = spearman(scores, truth_real);
  for (int t = 1; t <= 4; ++t) {
    std::vector<int> labels(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k)
      labels[k] = pairs[k].truth >= t ? 1 : 0;
    report.ap_at_level[static_cast<std::size_t>(t - 1)] =
        average_precision(scores, labels);
  }
  return report;
}

}  // namespace pse
