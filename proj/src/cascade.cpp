#include "copr/cascade.hpp"

#include <algorithm>
#include <stdexcept>

namespace copr {

namespace {

void sort_by_ecpm(std::vector<ScoredAd>& entries) {
  std::sort(entries.begin(), entries.end(), [](const ScoredAd& a, const ScoredAd& b) {
    if (a.ecpm != b.ecpm) return a.ecpm > b.ecpm;
    return a.ad_id < b.ad_id;
  });
}

ScoredAd score_one(const CtrModel& model, const Catalog& catalog, const Request& req,
                   std::uint32_t ad, std::vector<double>& x, MlpCache& cache) {
  const auto feats = catalog.features(req.user, ad, req.context);
  model.embed_concat(feats, x);
  double score = model.forward_pctr(x, &cache);
  if (model.has_relaxation()) {
    score = CtrModel::adjusted_pctr(score, model.forward_alpha(x, &cache));
  }
  ScoredAd out;
  out.ad_id = ad;
  out.pctr = score;
  out.bid = catalog.bid(ad);
  out.ecpm = 1000.0 * out.bid * out.pctr;
  return out;
}

}  // namespace

RankedList score_and_rank(const CtrModel& model, const Request& request, const Catalog& catalog) {
  if (request.candidates.empty()) {
    throw std::invalid_argument("score_and_rank: empty candidate list");
  }
  RankedList list;
  list.request_id = request.request_id;
  list.entries.reserve(request.candidates.size());
  std::vector<double> x(model.input_dim());
  MlpCache cache;
  for (const auto ad : request.candidates) {
    list.entries.push_back(score_one(model, catalog, request, ad, x, cache));
  }
  sort_by_ecpm(list.entries);
  return list;
}

CascadeResult run_cascade(const Request& request, const CtrModel& prerank, const CtrModel& rank,
                          std::uint32_t n_pre, std::uint32_t n_disp, Rng& click_rng,
                          const Catalog& catalog) {
  const auto m = static_cast<std::uint32_t>(request.candidates.size());
  if (!(n_disp <= n_pre && n_pre <= m)) {
    throw std::invalid_argument("run_cascade: need n_disp <= n_pre <= |candidates|");
  }
  CascadeResult result;
  result.pre = score_and_rank(prerank, request, catalog);

  Request survivors;
  survivors.request_id = request.request_id;
  survivors.user = request.user;
  survivors.context = request.context;
  survivors.candidates.reserve(n_pre);
  for (std::uint32_t i = 0; i < n_pre; ++i) {
    survivors.candidates.push_back(result.pre.entries[i].ad_id);
  }
  result.rank = score_and_rank(rank, survivors, catalog);

  result.displayed.request_id = request.request_id;
  result.displayed.entries.reserve(n_disp);
  for (std::uint32_t i = 0; i < n_disp; ++i) {
    const auto ad = result.rank.entries[i].ad_id;
    const double p = catalog.true_ctr(request.user, ad, request.context);
    result.displayed.entries.push_back({ad, static_cast<std::uint8_t>(click_rng.bernoulli(p))});
  }
  return result;
}

std::vector<RankedList> collect_ranking_logs(std::span<const Request> requests,
                                             const CtrModel* prerank, const CtrModel& rank,
                                             RankingLogMode mode, std::uint32_t k_top,
                                             const Catalog& catalog) {
  std::vector<RankedList> logs;
  logs.reserve(requests.size());
  for (const auto& req : requests) {
    if (mode == RankingLogMode::kPublic) {
      logs.push_back(score_and_rank(rank, req, catalog));
    } else {
      if (prerank == nullptr) {
        throw std::invalid_argument("collect_ranking_logs: production mode needs a prerank model");
      }
      const RankedList pre = score_and_rank(*prerank, req, catalog);
      Request survivors;
      survivors.request_id = req.request_id;
      survivors.user = req.user;
      survivors.context = req.context;
      const auto keep = std::min<std::size_t>(k_top, pre.entries.size());
      for (std::size_t i = 0; i < keep; ++i) survivors.candidates.push_back(pre.entries[i].ad_id);
      logs.push_back(score_and_rank(rank, survivors, catalog));
    }
  }
  return logs;
}

std::pair<double, double> ctr_rpm(std::span<const ImpressionLog> impressions,
                                  const Catalog& catalog) {
  std::uint64_t displays = 0, clicks = 0;
  double clicked_bid_sum = 0.0;
  for (const auto& log : impressions) {
    for (const auto& e : log.entries) {
      ++displays;
      if (e.y) {
        ++clicks;
        clicked_bid_sum += catalog.bid(e.ad_id);
      }
    }
  }
  if (displays == 0) throw std::invalid_argument("ctr_rpm: no displayed ads");
  const double ctr = static_cast<double>(clicks) / static_cast<double>(displays);
  const double rpm =
      clicks == 0 ? 0.0 : ctr * (clicked_bid_sum / static_cast<double>(clicks));
  return {ctr, rpm};
}

}  // namespace copr
