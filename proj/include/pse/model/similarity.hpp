#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "pse/core/ops.hpp"
#include "pse/core/tensor.hpp"

namespace pse {

// L1 distances between embedding rows: out(i,j) = ||Z_i - Z'_j||_1.
inline Tensor l1_distance_matrix(const Tensor& Z, const Tensor& Zp) {
  if (Z.rank() != 2 || Zp.rank() != 2 || Z.dim(1) != Zp.dim(1))
    throw ShapeError("l1_distance_matrix: embedding dims differ");
  const std::size_t n = Z.dim(0), m = Zp.dim(0), d = Z.dim(1);
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    const double* zi = Z.data() + i * d;
    for (std::size_t j = 0; j < m; ++j) {
      const double* zj = Zp.data() + j * d;
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += std::fabs(zi[k] - zj[k]);
      out(i, j) = acc;
    }
  }
  return out;
}

// Fills dZ/dZp (allocating if needed) with the pullback of dD through the
// distance matrix; signs are recomputed from Z rather than cached. sign(0)=0.
inline void l1_distance_backward(const Tensor& Z, const Tensor& Zp,
                                 const Tensor& dD, Tensor& dZ, Tensor& dZp) {
  const std::size_t n = Z.dim(0), m = Zp.dim(0), d = Z.dim(1);
  if (!dZ.same_shape(Z)) dZ = Tensor(Z.shape());
  if (!dZp.same_shape(Zp)) dZp = Tensor(Zp.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double* zi = Z.data() + i * d;
    double* gi = dZ.data() + i * d;
    for (std::size_t j = 0; j < m; ++j) {
      const double g = dD(i, j);
      if (g == 0.0) continue;
      const double* zj = Zp.data() + j * d;
      double* gj = dZp.data() + j * d;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = zi[k] - zj[k];
        const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        gi[k] += g * s;
        gj[k] -= g * s;
      }
    }
  }
}

// Soft symmetric alignment. alpha is the row softmax of -dist (an alignment
// of each position of Z onto Z'), beta the column softmax, and
// a = alpha + beta - alpha.*beta their symmetric combination. The score is
// the a-weighted mean negative distance; A = sum(a) acts as the soft
// alignment length.
struct AlignmentResult {
  Tensor dist;   // (n, m)
  Tensor alpha;  // (n, m) rows sum to 1
  Tensor beta;   // (n, m) columns sum to 1
  Tensor a;      // (n, m)
  double A = 0.0;
  double s_hat = 0.0;
};

inline AlignmentResult ssa_score(const Tensor& Z, const Tensor& Zp) {
  if (Z.dim(0) == 0 || Zp.dim(0) == 0)
    throw ShapeError("ssa_score: empty sequence");
  AlignmentResult r;
  r.dist = l1_distance_matrix(Z, Zp);
  const std::size_t n = r.dist.dim(0), m = r.dist.dim(1);
  r.alpha = Tensor({n, m});
  r.beta = Tensor({n, m});
  r.a = Tensor({n, m});
  // row softmax over -dist
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -r.dist(i, 0);
    for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, -r.dist(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      r.alpha(i, j) = std::exp(-r.dist(i, j) - mx);
      z += r.alpha(i, j);
    }
    for (std::size_t j = 0; j < m; ++j) r.alpha(i, j) /= z;
  }
  // column softmax over -dist
  for (std::size_t j = 0; j < m; ++j) {
    double mx = -r.dist(0, j);
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, -r.dist(i, j));
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      r.beta(i, j) = std::exp(-r.dist(i, j) - mx);
      z += r.beta(i, j);
    }
    for (std::size_t i = 0; i < n; ++i) r.beta(i, j) /= z;
  }
  double A = 0.0, S = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double aij =
          r.alpha(i, j) + r.beta(i, j) - r.alpha(i, j) * r.beta(i, j);
      r.a(i, j) = aij;
      A += aij;
      S += aij * r.dist(i, j);
    }
  r.A = A;
  r.s_hat = -S / A;
  return r;
}

// Pullback of ds through the whole SSA graph into the embeddings.
inline void ssa_backward(const AlignmentResult& r, const Tensor& Z,
                         const Tensor& Zp, double ds, Tensor& dZ,
                         Tensor& dZp) {
  const std::size_t n = r.dist.dim(0), m = r.dist.dim(1);
  // s = -S/A  =>  dS = -ds/A, dA = ds * S / A^2 = -ds * s / A
  const double dS = -ds / r.A;
  const double dA = -ds * r.s_hat / r.A;
  Tensor dDist({n, m});
  Tensor dAlpha({n, m}), dBeta({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double da = dA + dS * r.dist(i, j);  // through A and S
      dDist(i, j) = dS * r.a(i, j);              // direct S term
      dAlpha(i, j) = da * (1.0 - r.beta(i, j));
      dBeta(i, j) = da * (1.0 - r.alpha(i, j));
    }
  // softmax pullbacks; logits are -dist so the sign flips once more
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < m; ++j) dot += dAlpha(i, j) * r.alpha(i, j);
    for (std::size_t j = 0; j < m; ++j)
      dDist(i, j) -= r.alpha(i, j) * (dAlpha(i, j) - dot);
  }
  for (std::size_t j = 0; j < m; ++j) {
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += dBeta(i, j) * r.beta(i, j);
    for (std::size_t i = 0; i < n; ++i)
      dDist(i, j) -= r.beta(i, j) * (dBeta(i, j) - dot);
  }
  l1_distance_backward(Z, Zp, dDist, dZ, dZp);
}

// Uniform-alignment ablation: mean negative distance over all pairs.
inline double ua_score(const Tensor& Z, const Tensor& Zp) {
  if (Z.dim(0) == 0 || Zp.dim(0) == 0)
    throw ShapeError("ua_score: empty sequence");
  const Tensor d = l1_distance_matrix(Z, Zp);
  return -d.sum() / static_cast<double>(d.size());
}

inline void ua_backward(const Tensor& Z, const Tensor& Zp, double ds,
                        Tensor& dZ, Tensor& dZp) {
  const std::size_t n = Z.dim(0), m = Zp.dim(0);
  Tensor dDist({n, m});
  dDist.fill(-ds / static_cast<double>(n * m));
  l1_distance_backward(Z, Zp, dDist, dZ, dZp);
}

// Mean-embedding ablation: negative L1 distance between sequence means.
inline double me_score(const Tensor& Z, const Tensor& Zp) {
  if (Z.dim(0) == 0 || Zp.dim(0) == 0)
    throw ShapeError("me_score: empty sequence");
  const std::size_t n = Z.dim(0), m = Zp.dim(0), d = Z.dim(1);
  double acc = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) ma += Z(i, k);
    for (std::size_t j = 0; j < m; ++j) mb += Zp(j, k);
    acc += std::fabs(ma / static_cast<double>(n) -
                     mb / static_cast<double>(m));
  }
  return -acc;
}

inline void me_backward(const Tensor& Z, const Tensor& Zp, double ds,
                        Tensor& dZ, Tensor& dZp) {
  const std::size_t n = Z.dim(0), m = Zp.dim(0), d = Z.dim(1);
  if (!dZ.same_shape(Z)) dZ = Tensor(Z.shape());
  if (!dZp.same_shape(Zp)) dZp = Tensor(Zp.shape());
  for (std::size_t k = 0; k < d; ++k) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) ma += Z(i, k);
    for (std::size_t j = 0; j < m; ++j) mb += Zp(j, k);
    const double diff = ma / static_cast<double>(n) -
                        mb / static_cast<double>(m);
    const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    const double g = -ds * s;
    for (std::size_t i = 0; i < n; ++i)
      dZ(i, k) += g / static_cast<double>(n);
    for (std::size_t j = 0; j < m; ++j)
      dZp(j, k) -= g / static_cast<double>(m);
  }
}

// Ordinal regression head: p(y >= t) = sigmoid(theta_t * s + b_t) for
// t = 1..4, with theta_t = softplus(u_t) >= 0 so the probability is
// monotone in the score.
struct OrdinalHead {
  Parameter u;  // (4) free parameters, theta = softplus(u)
  Parameter b;  // (4)

  void init() {
    u = Parameter("ordinal.u", Tensor({4}));
    b = Parameter("ordinal.b", Tensor({4}));
    // softplus(0.5413) ~ 1.0: unit slopes, cutpoints spread over scores <= 0
    for (std::size_t t = 0; t < 4; ++t) {
      u.value[t] = 0.5413;
      b.value[t] = 3.0 - static_cast<double>(t);
    }
  }

  double theta(std::size_t t) const { return softplus(u.value[t]); }

  ParamRefs params() { return {&u, &b}; }
};

struct OrdinalProbs {
  std::array<double, 4> p_ge;  // p(y >= t); index t-1
  std::array<double, 5> p_eq;  // p(y = t) per the decomposition
};

// p(y=t) = p(y>=t) * (1 - p(y>=t+1)) with p(y>=0)=1 and p(y>=5)=0. The
// masses are used verbatim (they need not sum to 1); classification uses
// their argmax.
inline OrdinalProbs ordinal_probabilities(double s, const OrdinalHead& head) {
  OrdinalProbs out;
  std::array<double, 6> ge;
  ge[0] = 1.0;
  ge[5] = 0.0;
  for (std::size_t t = 1; t <= 4; ++t) {
    ge[t] = sigmoid(head.theta(t - 1) * s + head.b.value[t - 1]);
    out.p_ge[t - 1] = ge[t];
  }
  for (std::size_t t = 0; t <= 4; ++t)
    out.p_eq[t] = ge[t] * (1.0 - ge[t + 1]);
  return out;
}

// Argmax of p(y=t); ties break toward the smaller level.
inline int predict_level(double s, const OrdinalHead& head) {
  const OrdinalProbs probs = ordinal_probabilities(s, head);
  int best = 0;
  for (int t = 1; t <= 4; ++t)
    if (probs.p_eq[static_cast<std::size_t>(t)] >
        probs.p_eq[static_cast<std::size_t>(best)])
      best = t;
  return best;
}

// Mean over pairs of the negative ordinal log-likelihood
//   -sum_t [ 1(y>=t) log p(y>=t) + 1(y<t) log(1 - p(y>=t)) ].
// Stable form: log sigmoid(x) = -softplus(-x).
inline double similarity_loss(const std::vector<double>& scores,
                              const std::vector<int>& levels,
                              const OrdinalHead& head) {
  if (scores.size() != levels.size() || scores.empty())
    throw ShapeError("similarity_loss: bad batch");
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    for (std::size_t t = 1; t <= 4; ++t) {
      const double x =
          head.theta(t - 1) * scores[k] + head.b.value[t - 1];
      const bool ge = levels[k] >= static_cast<int>(t);
      total += ge ? softplus(-x) : softplus(x);
    }
  }
  return total / static_cast<double>(scores.size());
}

// Backward companion: accumulates head gradients and returns dL/dscore per
// pair.
inline std::vector<double> similarity_loss_backward(
    const std::vector<double>& scores, const std::vector<int>& levels,
    OrdinalHead& head, double upstream = 1.0) {
  const double scale = upstream / static_cast<double>(scores.size());
  std::vector<double> dscore(scores.size(), 0.0);
  for (std::size_t k = 0; k < scores.size(); ++k) {
    for (std::size_t t = 1; t <= 4; ++t) {
      const double theta = head.theta(t - 1);
      const double x = theta * scores[k] + head.b.value[t - 1];
      const bool ge = levels[k] >= static_cast<int>(t);
      // d/dx of the per-threshold loss = sigmoid(x) - 1(y>=t)
      const double dx = (sigmoid(x) - (ge ? 1.0 : 0.0)) * scale;
      dscore[k] += dx * theta;
      head.u.grad[t - 1] += dx * scores[k] * sigmoid(head.u.value[t - 1]);
      head.b.grad[t - 1] += dx;
    }
  }
  return dscore;
}

}  // namespace pse
