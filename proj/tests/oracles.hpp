// Independent reference implementations used as test oracles. Everything
// here is written naively and stays decoupled from the library's internal
// code paths: metrics recompute definitions from scratch, the forward-pass
// oracle reads the model only through its public weight accessors, and the
// gradient oracle is a central finite difference.
#ifndef COPR_TESTS_ORACLES_HPP_
#define COPR_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "copr/model.hpp"

namespace oracle {

// --- ranking metrics over id lists (best first) ---------------------------

inline std::map<std::uint32_t, int> rank_position(const std::vector<std::uint32_t>& rank) {
  std::map<std::uint32_t, int> pos;
  for (std::size_t i = 0; i < rank.size(); ++i) pos[rank[i]] = static_cast<int>(i) + 1;
  return pos;
}

inline std::vector<std::uint32_t> top10(const std::vector<std::uint32_t>& rank) {
  std::vector<std::uint32_t> rel(rank.begin(),
                                 rank.begin() + std::min<std::size_t>(10, rank.size()));
  return rel;
}

inline double hr_at_k(const std::vector<std::uint32_t>& pre,
                      const std::vector<std::uint32_t>& rank, int k) {
  const auto rel = top10(rank);
  int hits = 0;
  for (int i = 0; i < k && i < static_cast<int>(pre.size()); ++i) {
    if (std::find(rel.begin(), rel.end(), pre[i]) != rel.end()) ++hits;
  }
  return static_cast<double>(hits) / std::min(k, 10);
}

inline double ndcg_at_k(const std::vector<std::uint32_t>& pre,
                        const std::vector<std::uint32_t>& rank, int k) {
  const auto pos = rank_position(rank);
  const int len = static_cast<int>(rank.size());
  double dcg = 0.0, idcg = 0.0;
  for (int i = 1; i <= k && i <= len; ++i) {
    const double rel_pre = len - pos.at(pre[i - 1]);
    const double rel_ideal = len - i;
    dcg += (std::pow(2.0, rel_pre) - 1.0) / std::log2(i + 1.0);
    idcg += (std::pow(2.0, rel_ideal) - 1.0) / std::log2(i + 1.0);
  }
  return idcg > 0.0 ? dcg / idcg : 1.0;
}

inline double map_at_k(const std::vector<std::uint32_t>& pre,
                       const std::vector<std::uint32_t>& rank, int k) {
  const auto rel = top10(rank);
  double ap = 0.0;
  int hits = 0;
  for (int i = 1; i <= k && i <= static_cast<int>(pre.size()); ++i) {
    if (std::find(rel.begin(), rel.end(), pre[i - 1]) != rel.end()) {
      ++hits;
      ap += static_cast<double>(hits) / i;
    }
  }
  return ap / std::min<int>(static_cast<int>(rel.size()), k);
}

// NDCG of a priority permutation against the ideal D-1..0 assignment, the
// brute-force oracle behind the delta-NDCG swap identity.
inline double ndcg_of_priorities(const std::vector<int>& priorities) {
  const int d = static_cast<int>(priorities.size());
  double dcg = 0.0, idcg = 0.0;
  for (int i = 1; i <= d; ++i) {
    dcg += (std::pow(2.0, priorities[i - 1]) - 1.0) / std::log2(i + 1.0);
    idcg += (std::pow(2.0, d - i) - 1.0) / std::log2(i + 1.0);
  }
  return dcg / idcg;
}

// --- naive forward pass ----------------------------------------------------

// Recomputes sigmoid(MLP(embed_concat(feats))) with plain vector loops,
// reading weights only through the public accessors.
inline double naive_pctr(const copr::CtrModel& model,
                         const std::vector<std::uint32_t>& feats) {
  std::vector<double> x;
  for (std::size_t f = 0; f < feats.size(); ++f) {
    const auto row = model.embedding_row(f, feats[f]);
    x.insert(x.end(), row.begin(), row.end());
  }
  const std::size_t n_layers = model.num_pred_layers();
  for (std::size_t li = 0; li < n_layers; ++li) {
    const auto w = model.pred_weights(li);
    const auto b = model.pred_bias(li);
    const std::size_t out_dim = b.size();
    const std::size_t in_dim = w.size() / out_dim;
    std::vector<double> next(out_dim, 0.0);
    for (std::size_t o = 0; o < out_dim; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < in_dim; ++i) acc += w[o * in_dim + i] * x[i];
      next[o] = acc;
    }
    if (li + 1 < n_layers) {
      for (auto& v : next) v = std::max(v, 0.0);
    }
    x = next;
  }
  const double z = x[0];
  return 1.0 / (1.0 + std::exp(-z));
}

// --- finite differences ----------------------------------------------------

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

// Central finite difference of `loss` over every model parameter, compared
// against `analytic` (flat layout). Relative error uses a floor so that
// near-zero gradients are compared absolutely.
inline GradCheckResult grad_check(copr::CtrModel& model, const std::function<double()>& loss,
                                  const std::vector<double>& analytic, double h = 1e-5,
                                  double floor = 1e-6) {
  GradCheckResult res;
  auto params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = loss();
    params[i] = saved - h;
    const double down = loss();
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), floor});
    const double rel = std::abs(numeric - analytic[i]) / denom;
    if (rel > res.max_rel_err) {
      res.max_rel_err = rel;
      res.worst_index = i;
      res.analytic_at_worst = analytic[i];
      res.numeric_at_worst = numeric;
    }
  }
  return res;
}

}  // namespace oracle

#endif  // COPR_TESTS_ORACLES_HPP_
