#ifndef COPR_CATALOG_HPP_
#define COPR_CATALOG_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "copr/config.hpp"
#include "copr/rng.hpp"

namespace copr {

/*! Field layout: two user fields, two ad fields, one context field. */
constexpr int kUserFields = 2;
constexpr int kAdFields = 2;
constexpr int kNumFields = kUserFields + kAdFields + 1;

struct WorldConfig {
  std::uint64_t seed = 1;
  std::uint32_t n_users = 1000;
  std::uint32_t n_ads = 5000;
  std::array<std::uint32_t, kUserFields> user_vocab = {50, 4};
  std::array<std::uint32_t, kAdFields> ad_vocab = {100, 20};
  std::uint32_t context_vocab = 24;

  // Bids are log-normal. bid_scale is the distribution mean; the default
  // sigma puts the 95th-percentile bid near 10x the median, matching a
  // heavy-tailed price-as-bid regime.
  double bid_scale = 1.0;
  double bid_sigma = 1.4;

  // Hidden click oracle: logistic(bias + interaction * <h_user, h_ad> + ctx).
  double base_ctr = 0.05;
  std::uint32_t oracle_dim = 8;
  double oracle_mean_sigma = 0.4;
  double oracle_hidden_sigma = 0.4;
  double oracle_ctx_sigma = 0.3;
  double oracle_interaction = 1.0;

  static WorldConfig from_config(const Config& cfg);
  void validate() const;
  /*! Canonical textual form of every field; its FNV digest tags catalogs
   *  and checkpoints so mismatched worlds are rejected at load time. */
  std::string canonical() const;
  std::uint64_t digest() const;
};

/*! Hidden ground-truth CTR parameters. Never exposed to any model. */
struct OracleParams {
  std::uint32_t dim = 0;
  // Per-field per-id latent vectors, flattened vocab x dim.
  std::array<std::vector<double>, kUserFields> user_field;
  std::array<std::vector<double>, kAdFields> ad_field;
  std::vector<double> ctx_offset;
  double interaction = 1.0;
  double bias = 0.0;
};

struct Request {
  std::uint32_t request_id = 0;
  std::uint32_t user = 0;
  std::uint32_t context = 0;
  std::vector<std::uint32_t> candidates;  // distinct ad indices
};

/*!
 * The synthetic ad world: users, ads, bids, and the hidden click oracle.
 * Immutable after generation; safe to share read-only across threads.
 */
class Catalog {
 public:
  /*! Generates the world from config. Bit-identical for identical configs. */
  static Catalog generate(const WorldConfig& cfg);

  const WorldConfig& config() const { return cfg_; }
  std::uint32_t n_users() const { return cfg_.n_users; }
  std::uint32_t n_ads() const { return cfg_.n_ads; }
  std::uint32_t context_vocab() const { return cfg_.context_vocab; }
  std::uint64_t world_digest() const { return cfg_.digest(); }

  std::array<std::uint32_t, kUserFields> user_features(std::uint32_t user) const;
  std::array<std::uint32_t, kAdFields> ad_features(std::uint32_t ad) const;
  /*! Concatenated (user, ad, context) feature ids in model field order. */
  std::array<std::uint32_t, kNumFields> features(std::uint32_t user, std::uint32_t ad,
                                                 std::uint32_t context) const;

  double bid(std::uint32_t ad) const;
  double mean_bid() const;

  /*! Ground-truth click probability, strictly inside (0, 1). */
  double true_ctr(std::uint32_t user, std::uint32_t ad, std::uint32_t context) const;

  /*! Monte-Carlo mean of true_ctr over random (user, ad, context) triples. */
  double estimate_base_rate(std::uint32_t samples, std::uint64_t seed) const;

  /*! Per-field vocabulary sizes in model field order. */
  std::vector<std::uint32_t> field_vocabs() const;

  void save(const std::string& path) const;
  static Catalog load(const std::string& path);

 private:
  Catalog() = default;
  void check_user(std::uint32_t user) const;
  void check_ad(std::uint32_t ad) const;
  void check_ctx(std::uint32_t ctx) const;
  double oracle_logit(std::uint32_t user, std::uint32_t ad, std::uint32_t context) const;

  WorldConfig cfg_;
  std::vector<std::uint32_t> user_feat_;  // n_users x kUserFields
  std::vector<std::uint32_t> ad_feat_;    // n_ads x kAdFields
  std::vector<double> bids_;
  OracleParams oracle_;
};

/*!
 * One request: a uniform user, uniform context, and m distinct candidate
 * ads. Deterministic given the rng state.
 */
Request gen_request(const Catalog& catalog, std::uint32_t request_id, std::uint32_t m, Rng& rng);

}  // namespace copr

#endif  // COPR_CATALOG_HPP_
