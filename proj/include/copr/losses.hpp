#ifndef COPR_LOSSES_HPP_
#define COPR_LOSSES_HPP_

#include <cstdint>
#include <vector>

#include "copr/logs.hpp"
#include "copr/rng.hpp"

namespace copr {

/*!
 * Two pairwise logistic forms over bid-weighted scores s = score * bid:
 *   ratio:      log(1 + exp(-(s_i / s_j - 1)))   scale-invariant
 *   difference: log(1 + exp(-(s_i - s_j)))       scale-sensitive
 * The pair must be oriented so i comes from a better (earlier) chunk.
 */
enum class PairForm { kDifference, kRatio };

/*!
 * Pairwise logistic loss on bid-weighted scores. Optional d_yi/d_yj receive
 * the partials w.r.t. the raw scores y_i and y_j. Numerically stable for
 * large margins. The ratio form rejects non-positive scores and bids.
 */
double pair_logistic_loss(double y_i, double bid_i, double y_j, double bid_j, PairForm form,
                          double* d_yi = nullptr, double* d_yj = nullptr);

/*! Ideal DCG of priorities D-1..0 with gains 2^p - 1 and log2 discounts. */
double ideal_dcg(int d);

/*!
 * NDCG utility drop from swapping chunk ranks i < j (1-indexed) in the
 * ideal list: (2^{D-i} - 2^{D-j}) / IDCG * (1/log2(i+1) - 1/log2(j+1)).
 * Strictly positive and at most 1.
 */
double delta_ndcg(int i, int j, int d);

/*!
 * Symmetric deviation penalty for the relaxation factor:
 *   alpha - 1      if alpha > 1
 *   1/alpha - 1    otherwise.
 * Optional d_alpha receives the derivative of the active branch.
 */
double relaxation_penalty(double alpha, double* d_alpha = nullptr);

/*! One chunk representative: a sampled ad with its chunk priority D-d. */
struct ChunkEntry {
  std::uint32_t ad_id = 0;
  double pctr_teacher = 0.0;
  double bid = 0.0;
  std::uint32_t priority = 0;
};

/*!
 * Compressed sub-list of a ranking log: D = ceil(M/K) chunks of K adjacent
 * ads, one uniformly sampled representative per chunk, priorities D-1..0.
 * The final chunk may be short when K does not divide M.
 */
struct ChunkSample {
  std::uint32_t request_id = 0;
  std::uint32_t chunk_size = 0;
  std::vector<ChunkEntry> entries;  // entries[d].priority == D-1-d
};

ChunkSample chunk_sample(const RankedList& ranked, std::uint32_t k, Rng& rng);

/*!
 * Core of chunk sampling: for a list of length m cut into ceil(m/k) chunks
 * of k adjacent positions, returns one uniformly drawn position per chunk.
 */
std::vector<std::uint32_t> chunk_rep_indices(std::uint32_t m, std::uint32_t k, Rng& rng);

}  // namespace copr

#endif  // COPR_LOSSES_HPP_
