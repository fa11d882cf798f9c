#include "copr/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace copr {

namespace {

/*! log(1 + exp(-m)) without overflow, with d/dm = -sigmoid(-m). */
double softplus_neg(double m, double* dm) {
  double loss;
  if (m >= 0.0) {
    loss = std::log1p(std::exp(-m));
  } else {
    loss = -m + std::log1p(std::exp(m));
  }
  if (dm) {
    // -1/(1 + e^m), evaluated on the non-overflowing side
    *dm = m >= 0.0 ? -std::exp(-m) / (1.0 + std::exp(-m)) : -1.0 / (1.0 + std::exp(m));
  }
  return loss;
}

}  // namespace

double pair_logistic_loss(double y_i, double bid_i, double y_j, double bid_j, PairForm form,
                          double* d_yi, double* d_yj) {
  const double s_i = y_i * bid_i;
  const double s_j = y_j * bid_j;
  double dm = 0.0;
  if (form == PairForm::kDifference) {
    const double loss = softplus_neg(s_i - s_j, (d_yi || d_yj) ? &dm : nullptr);
    if (d_yi) *d_yi = dm * bid_i;
    if (d_yj) *d_yj = -dm * bid_j;
    return loss;
  }
  if (!(y_i > 0.0 && y_j > 0.0 && bid_i > 0.0 && bid_j > 0.0)) {
    throw std::invalid_argument("pair_logistic_loss: ratio form needs positive scores and bids");
  }
  const double loss = softplus_neg(s_i / s_j - 1.0, (d_yi || d_yj) ? &dm : nullptr);
  if (d_yi) *d_yi = dm * bid_i / s_j;
  if (d_yj) *d_yj = -dm * s_i / (s_j * y_j);
  return loss;
}

double ideal_dcg(int d) {
  if (d < 1) throw std::invalid_argument("ideal_dcg: d must be positive");
  double idcg = 0.0;
  for (int i = 1; i <= d; ++i) {
    idcg += (std::exp2(static_cast<double>(d - i)) - 1.0) / std::log2(static_cast<double>(i + 1));
  }
  return idcg;
}

double delta_ndcg(int i, int j, int d) {
  if (d < 2) throw std::invalid_argument("delta_ndcg: need at least two chunks");
  if (!(1 <= i && i < j && j <= d)) {
    throw std::invalid_argument("delta_ndcg: require 1 <= i < j <= d");
  }
  const double gain_gap =
      std::exp2(static_cast<double>(d - i)) - std::exp2(static_cast<double>(d - j));
  const double discount_gap =
      1.0 / std::log2(static_cast<double>(i + 1)) - 1.0 / std::log2(static_cast<double>(j + 1));
  return gain_gap * discount_gap / ideal_dcg(d);
}

double relaxation_penalty(double alpha, double* d_alpha) {
  if (alpha > 1.0) {
    if (d_alpha) *d_alpha = 1.0;
    return alpha - 1.0;
  }
  if (d_alpha) *d_alpha = -1.0 / (alpha * alpha);
  return 1.0 / alpha - 1.0;
}

std::vector<std::uint32_t> chunk_rep_indices(std::uint32_t m, std::uint32_t k, Rng& rng) {
  if (k == 0) throw std::invalid_argument("chunk_sample: chunk size must be positive");
  if (m == 0) throw std::invalid_argument("chunk_sample: empty ranked list");
  const std::uint32_t n_chunks = (m + k - 1) / k;
  std::vector<std::uint32_t> picks;
  picks.reserve(n_chunks);
  for (std::uint32_t d = 0; d < n_chunks; ++d) {
    const std::uint32_t begin = d * k;
    const std::uint32_t end = std::min(begin + k, m);
    picks.push_back(begin + static_cast<std::uint32_t>(rng.below(end - begin)));
  }
  return picks;
}

ChunkSample chunk_sample(const RankedList& ranked, std::uint32_t k, Rng& rng) {
  const auto m = static_cast<std::uint32_t>(ranked.entries.size());
  const auto picks = chunk_rep_indices(m, k, rng);
  const auto n_chunks = static_cast<std::uint32_t>(picks.size());
  ChunkSample sample;
  sample.request_id = ranked.request_id;
  sample.chunk_size = k;
  sample.entries.reserve(n_chunks);
  for (std::uint32_t d = 0; d < n_chunks; ++d) {
    const ScoredAd& ad = ranked.entries[picks[d]];
    sample.entries.push_back({ad.ad_id, ad.pctr, ad.bid, n_chunks - 1 - d});
  }
  return sample;
}

}  // namespace copr
