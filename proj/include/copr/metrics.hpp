#ifndef COPR_METRICS_HPP_
#define COPR_METRICS_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace copr {

/*!
 * Consistency metrics between a pre-ranking order and a ranking order over
 * the same candidate set. Lists are sequences of ad ids, best first. The
 * ranking list defines ground truth: its top 10 form the relevant set for
 * HR and MAP, and its positions define relevance L - p for NDCG.
 * Every operation throws when the two lists do not hold the same ads.
 */

/*! |top-k(pre) intersect top-10(rank)| / min(k, 10). */
double hr_at_k(std::span<const std::uint32_t> pre, std::span<const std::uint32_t> rank, int k);

/*! NDCG@k with gains 2^(L-p) - 1 and log2 position discounts. */
double ndcg_at_k(std::span<const std::uint32_t> pre, std::span<const std::uint32_t> rank, int k);

/*! Average precision at k against the top-10(rank) relevant set. */
double map_at_k(std::span<const std::uint32_t> pre, std::span<const std::uint32_t> rank, int k);

/*! Ranking-PreRanking Curve: mean pre-ranking position per ranking position. */
struct RpcCurve {
  std::vector<double> mean_pre_pos;  // index r-1 holds the mean for ranking position r
};

RpcCurve rpc_curve(std::span<const std::vector<std::uint32_t>> pre_lists,
                   std::span<const std::vector<std::uint32_t>> rank_lists);

/*! Mean |curve(r) - r| over ranking positions; 0 for perfectly consistent stages. */
double rpc_identity_mae(const RpcCurve& curve);

/*! Per-K averages over many list pairs. */
struct ConsistencyReport {
  std::vector<int> ks;
  std::vector<double> hr;
  std::vector<double> ndcg;
  std::vector<double> map;
  std::size_t n_lists = 0;
};

ConsistencyReport consistency_report(std::span<const std::vector<std::uint32_t>> pre_lists,
                                     std::span<const std::vector<std::uint32_t>> rank_lists,
                                     std::span<const int> ks);

/*!
 * Spearman rank correlation (average ranks on ties). Used to relate
 * consistency to simulated system performance across methods.
 */
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace copr

#endif  // COPR_METRICS_HPP_
