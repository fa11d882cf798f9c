#include "copr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace copr {

namespace {

constexpr int kRelevantTop = 10;

void check_same_set(std::span<const std::uint32_t> pre, std::span<const std::uint32_t> rank) {
  if (pre.size() != rank.size()) {
    throw std::invalid_argument("metrics: lists rank different candidate sets");
  }
  std::vector<std::uint32_t> a(pre.begin(), pre.end());
  std::vector<std::uint32_t> b(rank.begin(), rank.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) throw std::invalid_argument("metrics: lists rank different candidate sets");
}

std::unordered_set<std::uint32_t> relevant_set(std::span<const std::uint32_t> rank) {
  const auto n = std::min<std::size_t>(kRelevantTop, rank.size());
  return {rank.begin(), rank.begin() + n};
}

}  // namespace

double hr_at_k(std::span<const std::uint32_t> pre, std::span<const std::uint32_t> rank, int k) {
  if (k < 1) throw std::invalid_argument("hr_at_k: k must be positive");
  check_same_set(pre, rank);
  const auto rel = relevant_set(rank);
  const auto top = std::min<std::size_t>(k, pre.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < top; ++i) hits += rel.count(pre[i]);
  return static_cast<double>(hits) / static_cast<double>(std::min(k, kRelevantTop));
}

double ndcg_at_k(std::span<const std::uint32_t> pre, std::span<const std::uint32_t> rank, int k) {
  if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be positive");
  check_same_set(pre, rank);
  const auto len = rank.size();
  std::unordered_map<std::uint32_t, double> relevance;
  relevance.reserve(len);
  for (std::size_t p = 0; p < len; ++p) {
    relevance[rank[p]] = static_cast<double>(len - (p + 1));  // L - position
  }
  const auto top = std::min<std::size_t>(k, len);
  double dcg = 0.0, idcg = 0.0;
  for (std::size_t i = 0; i < top; ++i) {
    const double discount = std::log2(static_cast<double>(i + 2));
    dcg += (std::exp2(relevance.at(pre[i])) - 1.0) / discount;
    idcg += (std::exp2(static_cast<double>(len - (i + 1))) - 1.0) / discount;
  }
  return idcg > 0.0 ? dcg / idcg : 1.0;
}

double map_at_k(std::span<const std::uint32_t> pre, std::span<const std::uint32_t> rank, int k) {
  if (k < 1) throw std::invalid_argument("map_at_k: k must be positive");
  check_same_set(pre, rank);
  const auto rel = relevant_set(rank);
  const auto top = std::min<std::size_t>(k, pre.size());
  double score = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < top; ++i) {
    if (rel.count(pre[i])) {
      ++hits;
      score += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  const auto denom = std::min<std::size_t>(rel.size(), static_cast<std::size_t>(k));
  return score / static_cast<double>(denom);
}

RpcCurve rpc_curve(std::span<const std::vector<std::uint32_t>> pre_lists,
                   std::span<const std::vector<std::uint32_t>> rank_lists) {
  if (pre_lists.size() != rank_lists.size() || pre_lists.empty()) {
    throw std::invalid_argument("rpc_curve: need equally many non-empty list pairs");
  }
  const std::size_t len = rank_lists[0].size();
  RpcCurve curve;
  curve.mean_pre_pos.assign(len, 0.0);
  for (std::size_t li = 0; li < pre_lists.size(); ++li) {
    const auto& pre = pre_lists[li];
    const auto& rank = rank_lists[li];
    if (rank.size() != len) {
      throw std::invalid_argument("rpc_curve: lists must share one length");
    }
    check_same_set(pre, rank);
    std::unordered_map<std::uint32_t, std::size_t> pre_pos;
    pre_pos.reserve(len);
    for (std::size_t p = 0; p < len; ++p) pre_pos[pre[p]] = p + 1;
    for (std::size_t r = 0; r < len; ++r) {
      curve.mean_pre_pos[r] += static_cast<double>(pre_pos.at(rank[r]));
    }
  }
  for (auto& v : curve.mean_pre_pos) v /= static_cast<double>(pre_lists.size());
  return curve;
}

double rpc_identity_mae(const RpcCurve& curve) {
  if (curve.mean_pre_pos.empty()) return 0.0;
  double mae = 0.0;
  for (std::size_t r = 0; r < curve.mean_pre_pos.size(); ++r) {
    mae += std::abs(curve.mean_pre_pos[r] - static_cast<double>(r + 1));
  }
  return mae / static_cast<double>(curve.mean_pre_pos.size());
}

ConsistencyReport consistency_report(std::span<const std::vector<std::uint32_t>> pre_lists,
                                     std::span<const std::vector<std::uint32_t>> rank_lists,
                                     std::span<const int> ks) {
  if (pre_lists.size() != rank_lists.size() || pre_lists.empty()) {
    throw std::invalid_argument("consistency_report: need equally many non-empty list pairs");
  }
  ConsistencyReport report;
  report.ks.assign(ks.begin(), ks.end());
  report.hr.assign(ks.size(), 0.0);
  report.ndcg.assign(ks.size(), 0.0);
  report.map.assign(ks.size(), 0.0);
  report.n_lists = pre_lists.size();
  for (std::size_t li = 0; li < pre_lists.size(); ++li) {
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      report.hr[ki] += hr_at_k(pre_lists[li], rank_lists[li], ks[ki]);
      report.ndcg[ki] += ndcg_at_k(pre_lists[li], rank_lists[li], ks[ki]);
      report.map[ki] += map_at_k(pre_lists[li], rank_lists[li], ks[ki]);
    }
  }
  const auto n = static_cast<double>(report.n_lists);
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    report.hr[ki] /= n;
    report.ndcg[ki] /= n;
    report.map[ki] /= n;
  }
  return report;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("spearman: need two sequences of equal length >= 2");
  }
  auto ranks = [](std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // average 1-based rank
      for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace copr
