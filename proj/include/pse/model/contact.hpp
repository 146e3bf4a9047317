#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <tuple>
#include <vector>

#include "pse/core/checkpoint.hpp"
#include "pse/core/ops.hpp"
#include "pse/eval/metrics.hpp"

namespace pse {

// Symmetric pairwise features v_ij = [ |z_i - z_j| ; z_i * z_j ], shape
// (n, n, 2D). The first half of v_ii is exactly zero.
inline Tensor pairwise_features(const Tensor& Z) {
  const std::size_t n = Z.dim(0), d = Z.dim(1);
  Tensor v({n, n, 2 * d});
  for (std::size_t i = 0; i < n; ++i) {
    const double* zi = Z.data() + i * d;
    for (std::size_t j = 0; j < n; ++j) {
      const double* zj = Z.data() + j * d;
      double* out = v.data() + (i * n + j) * 2 * d;
      for (std::size_t k = 0; k < d; ++k) {
        out[k] = std::fabs(zi[k] - zj[k]);
        out[d + k] = zi[k] * zj[k];
      }
    }
  }
  return v;
}

struct ContactHeadConfig {
  std::size_t hidden = 16;  // H
};

// Width-1 hidden layer over pair features followed by one 7x7 filter with
// zero padding of 3 and a sigmoid.
struct ContactHeadParams {
  ContactHeadConfig cfg;
  std::size_t embed_dim = 0;
  Parameter W;       // (H, 2D)
  Parameter b;       // (H)
  Parameter filt;    // (7, 7, H)
  Parameter filt_b;  // (1)

  void init(const ContactHeadConfig& config, std::size_t d, Rng& rng) {
    cfg = config;
    if (cfg.hidden < 1) throw ConfigError("contact head: hidden must be >= 1");
    embed_dim = d;
    W = Parameter("contact.W", Tensor({cfg.hidden, 2 * d}));
    b = Parameter("contact.b", Tensor({cfg.hidden}));
    filt = Parameter("contact.filt", Tensor({7, 7, cfg.hidden}));
    filt_b = Parameter("contact.filt_b", Tensor({1}));
    init_uniform_glorot(W.value, rng);
    const double bound =
        std::sqrt(6.0 / (49.0 * static_cast<double>(cfg.hidden) + 1.0));
    init_uniform(filt.value, rng, bound);
  }

  ParamRefs params() { return {&W, &b, &filt, &filt_b}; }

  void save(Checkpoint& ck) {
    ck.meta["contact.hidden"] = static_cast<std::int64_t>(cfg.hidden);
    ck.meta["contact.embed_dim"] = static_cast<std::int64_t>(embed_dim);
    checkpoint_put_params(ck, params());
  }

  static ContactHeadParams load(const Checkpoint& ck) {
    ContactHeadConfig cfg;
    cfg.hidden = static_cast<std::size_t>(ck.meta_required("contact.hidden"));
    ContactHeadParams head;
    Rng scratch(0);
    head.init(cfg,
              static_cast<std::size_t>(ck.meta_required("contact.embed_dim")),
              scratch);
    checkpoint_get_params(ck, head.params());
    return head;
  }
};

struct ContactTrace {
  Tensor v;           // (n*n, 2D)
  Tensor hidden_pre;  // (n*n, H)
  Tensor hidden;      // (n*n, H)
  Tensor logits;      // (n, n)
  Tensor probs;       // (n, n)
};

inline ContactTrace contact_forward(const ContactHeadParams& head,
                                    const Tensor& Z) {
  const std::size_t n = Z.dim(0), d = Z.dim(1);
  if (d != head.embed_dim)
    throw ShapeError("contact_forward: embedding dim mismatch");
  const std::size_t H = head.cfg.hidden;
  ContactTrace tr;
  tr.v = pairwise_features(Z).reshaped({n * n, 2 * d});
  tr.hidden_pre = linear_forward(tr.v, head.W.value, head.b.value);
  tr.hidden = Tensor(tr.hidden_pre.shape());
  for (std::size_t k = 0; k < tr.hidden_pre.size(); ++k)
    tr.hidden[k] = relu(tr.hidden_pre[k]);
  tr.logits = Tensor({n, n});
  const double bias = head.filt_b.value[0];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = bias;
      for (std::size_t u = 0; u < 7; ++u) {
        const std::ptrdiff_t a =
            static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(u) -
            3;
        if (a < 0 || a >= static_cast<std::ptrdiff_t>(n)) continue;
        for (std::size_t v = 0; v < 7; ++v) {
          const std::ptrdiff_t c =
              static_cast<std::ptrdiff_t>(j) + static_cast<std::ptrdiff_t>(v) -
              3;
          if (c < 0 || c >= static_cast<std::ptrdiff_t>(n)) continue;
          const double* hrow =
              tr.hidden.data() +
              (static_cast<std::size_t>(a) * n + static_cast<std::size_t>(c)) *
                  H;
          const double* frow = head.filt.value.data() + (u * 7 + v) * H;
          for (std::size_t h = 0; h < H; ++h) acc += frow[h] * hrow[h];
        }
      }
      tr.logits(i, j) = acc;
    }
  tr.probs = Tensor({n, n});
  for (std::size_t k = 0; k < tr.probs.size(); ++k)
    tr.probs[k] = sigmoid(tr.logits[k]);
  return tr;
}

inline Tensor contact_probabilities(const ContactHeadParams& head,
                                    const Tensor& Z) {
  return contact_forward(head, Z).probs;
}

// Pullback of d(logits) through conv, hidden layer and pair features into
// dZ; head gradients are accumulated.
inline void contact_backward(ContactHeadParams& head, const Tensor& Z,
                             const ContactTrace& tr, const Tensor& d_logits,
                             Tensor& dZ) {
  const std::size_t n = Z.dim(0), d = Z.dim(1), H = head.cfg.hidden;
  Tensor d_hidden({n * n, H});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double g = d_logits(i, j);
      if (g == 0.0) continue;
      head.filt_b.grad[0] += g;
      for (std::size_t u = 0; u < 7; ++u) {
        const std::ptrdiff_t a =
            static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(u) -
            3;
        if (a < 0 || a >= static_cast<std::ptrdiff_t>(n)) continue;
        for (std::size_t v = 0; v < 7; ++v) {
          const std::ptrdiff_t c =
              static_cast<std::ptrdiff_t>(j) + static_cast<std::ptrdiff_t>(v) -
              3;
          if (c < 0 || c >= static_cast<std::ptrdiff_t>(n)) continue;
          const std::size_t cell =
              static_cast<std::size_t>(a) * n + static_cast<std::size_t>(c);
          const double* hrow = tr.hidden.data() + cell * H;
          const double* frow = head.filt.value.data() + (u * 7 + v) * H;
          double* gf = head.filt.grad.data() + (u * 7 + v) * H;
          double* gh = d_hidden.data() + cell * H;
          for (std::size_t h = 0; h < H; ++h) {
            gf[h] += g * hrow[h];
            gh[h] += g * frow[h];
          }
        }
      }
    }
  for (std::size_t k = 0; k < d_hidden.size(); ++k)
    if (tr.hidden_pre[k] <= 0.0) d_hidden[k] = 0.0;
  Tensor d_v;
  linear_backward(tr.v, head.W.value, d_hidden, d_v, head.W.grad, head.b.grad);
  if (!dZ.same_shape(Z)) dZ = Tensor(Z.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double* zi = Z.data() + i * d;
    double* gi = dZ.data() + i * d;
    for (std::size_t j = 0; j < n; ++j) {
      const double* zj = Z.data() + j * d;
      double* gj = dZ.data() + j * d;
      const double* gv = d_v.data() + (i * n + j) * 2 * d;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = zi[k] - zj[k];
        const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        gi[k] += gv[k] * s;
        gj[k] -= gv[k] * s;
        gi[k] += gv[d + k] * zj[k];
        gj[k] += gv[d + k] * zi[k];
      }
    }
  }
}

// Pairs entering the loss/metrics: both triangles, |i-j| >= min_separation.
inline std::size_t contact_mask_count(std::size_t n,
                                      std::size_t min_separation) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if ((i > j ? i - j : j - i) >= min_separation) ++count;
  return count;
}

// Mean binary cross entropy over masked pairs; 0 when the mask is empty
// (callers should warn).
inline double contact_loss(const Tensor& probs, const Tensor& observed,
                           std::size_t min_separation = 2) {
  if (!probs.same_shape(observed))
    throw ShapeError("contact_loss: shape mismatch");
  const std::size_t n = probs.dim(0);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if ((i > j ? i - j : j - i) < min_separation) continue;
      const double y = observed(i, j);
      if (y != 0.0 && y != 1.0)
        throw DataError("contact_loss: observed values must be 0/1");
      const double p = probs(i, j);
      total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
      ++count;
    }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

// Fused loss + backward from logits (numerically stable):
// bce(logit l, label y) = softplus(l) - y*l, d/dl = sigmoid(l) - y.
inline double contact_loss_backward(ContactHeadParams& head, const Tensor& Z,
                                    const ContactTrace& tr,
                                    const Tensor& observed,
                                    std::size_t min_separation, double upstream,
                                    Tensor& dZ) {
  const std::size_t n = tr.logits.dim(0);
  const std::size_t count = contact_mask_count(n, min_separation);
  if (count == 0) {
    if (!dZ.same_shape(Z)) dZ = Tensor(Z.shape());
    return 0.0;
  }
  const double scale = upstream / static_cast<double>(count);
  Tensor d_logits({n, n});
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if ((i > j ? i - j : j - i) < min_separation) continue;
      const double y = observed(i, j);
      if (y != 0.0 && y != 1.0)
        throw DataError("contact loss: observed values must be 0/1");
      const double l = tr.logits(i, j);
      total += softplus(l) - y * l;
      d_logits(i, j) = scale * (sigmoid(l) - y);
    }
  contact_backward(head, Z, tr, d_logits, dZ);
  return total / static_cast<double>(count);
}

struct ContactMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> aupr;
  std::optional<double> pr_at_l;
  std::optional<double> pr_at_l2;
  std::optional<double> pr_at_l5;
  std::size_t pairs = 0;
  std::size_t positives = 0;
};

// Evaluation view: probabilities symmetrized by averaging, pairs i<j with
// j-i >= separation, decision rule "contact iff p > 0.5" (strict). Ranked
// metrics order ties by (-p, i, j).
inline ContactMetrics contact_metrics(const Tensor& probs,
                                      const Tensor& observed,
                                      std::size_t separation) {
  if (!probs.same_shape(observed))
    throw ShapeError("contact_metrics: shape mismatch");
  const std::size_t n = probs.dim(0);
  std::vector<double> score;
  std::vector<int> label;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + separation; j < n; ++j) {
      score.push_back(0.5 * (probs(i, j) + probs(j, i)));
      label.push_back(observed(i, j) != 0.0 ? 1 : 0);
    }
  ContactMetrics out;
  out.pairs = score.size();
  for (int y : label) out.positives += y != 0 ? 1u : 0u;

  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t k = 0; k < score.size(); ++k) {
    const bool pred = score[k] > 0.5;
    if (pred && label[k]) ++tp;
    if (pred && !label[k]) ++fp;
    if (!pred && label[k]) ++fn;
  }
  if (tp + fp > 0)
    out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (out.positives > 0)
    out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (out.precision && out.recall) {
    const double p = *out.precision, r = *out.recall;
    out.f1 = (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  // entries are generated in (i, j) order, so a stable sort realizes the
  // (-p, i, j) tie rule
  out.aupr = average_precision(score, label);
  if (out.positives > 0 && !score.empty()) {
    std::vector<std::size_t> order(score.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return score[a] > score[b];
                     });
    const std::size_t L = n;
    auto pr_at = [&](std::size_t k) -> std::optional<double> {
      k = std::min(k, score.size());
      if (k == 0) return std::nullopt;
      std::size_t hits = 0;
      for (std::size_t r = 0; r < k; ++r) hits += label[order[r]] ? 1u : 0u;
      return static_cast<double>(hits) / static_cast<double>(k);
    };
    out.pr_at_l = pr_at(L);
    out.pr_at_l2 = pr_at((L + 1) / 2);
    out.pr_at_l5 = pr_at((L + 4) / 5);
  }
  return out;
}

}  // namespace pse
