#ifndef COPR_CASCADE_HPP_
#define COPR_CASCADE_HPP_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "copr/catalog.hpp"
#include "copr/logs.hpp"
#include "copr/model.hpp"

namespace copr {

/*!
 * Scores every candidate with the model and returns the ECPM-descending
 * list (ties by ascending ad_id). Relaxation models rank by the adjusted
 * score alpha * pctr, which is the whole point of the rank-alignment
 * design; plain models rank by raw pctr.
 */
RankedList score_and_rank(const CtrModel& model, const Request& request, const Catalog& catalog);

struct CascadeResult {
  RankedList pre;          // pre-ranking order over all M candidates
  RankedList rank;         // ranking order over the top n_pre survivors
  ImpressionLog displayed; // top n_disp with sampled clicks
};

/*!
 * Replays the funnel for one request: pre-rank all candidates, re-rank the
 * top n_pre with the ranking model, display the top n_disp, and sample one
 * Bernoulli(true_ctr) click per displayed ad from click_rng.
 */
CascadeResult run_cascade(const Request& request, const CtrModel& prerank, const CtrModel& rank,
                          std::uint32_t n_pre, std::uint32_t n_disp, Rng& click_rng,
                          const Catalog& catalog);

enum class RankingLogMode {
  kProduction,  // rank the pre-ranking survivors (needs a pre-rank model)
  kPublic,      // rank the request's fixed candidate sample directly
};

/*!
 * Records the ranking model's ECPM-ranked list per request. In production
 * mode the candidate set is the pre-ranking top-k_top; in public mode the
 * request's candidates are scored as-is (k_top ignored).
 */
std::vector<RankedList> collect_ranking_logs(std::span<const Request> requests,
                                             const CtrModel* prerank, const CtrModel& rank,
                                             RankingLogMode mode, std::uint32_t k_top,
                                             const Catalog& catalog);

/*!
 * Simulated system metrics: ctr  = clicks / displays,
 *                           rpm  = ctr * mean bid over clicked ads (0 if no clicks).
 */
std::pair<double, double> ctr_rpm(std::span<const ImpressionLog> impressions,
                                  const Catalog& catalog);

}  // namespace copr

#endif  // COPR_CASCADE_HPP_
