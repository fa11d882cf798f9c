#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "copr/catalog.hpp"
#include "copr/text.hpp"

using namespace copr;

namespace {

WorldConfig tiny_world(std::uint64_t seed) {
  WorldConfig cfg;
  cfg.seed = seed;
  cfg.n_users = 40;
  cfg.n_ads = 120;
  cfg.user_vocab = {8, 3};
  cfg.ad_vocab = {12, 5};
  cfg.context_vocab = 6;
  return cfg;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("minimal world: one user, one ad") {
  WorldConfig cfg;
  cfg.seed = 7;
  cfg.n_users = 1;
  cfg.n_ads = 1;
  const Catalog cat = Catalog::generate(cfg);
  CHECK(cat.n_users() == 1);
  CHECK(cat.n_ads() == 1);
  CHECK(cat.bid(0) > 0.0);
}

TEST_CASE("bids are positive and log-normal around the configured scale") {
  WorldConfig cfg = tiny_world(1);
  cfg.n_ads = 5000;
  cfg.n_users = 1000;
  cfg.bid_scale = 2.5;
  const Catalog cat = Catalog::generate(cfg);
  double lo = 1e300;
  for (std::uint32_t a = 0; a < cat.n_ads(); ++a) lo = std::min(lo, cat.bid(a));
  CHECK(lo > 0.0);
  // Empirical mean of 5000 log-normal draws stays well within a factor of
  // two of the distribution mean at sigma = 1.4.
  CHECK(cat.mean_bid() > 0.5 * cfg.bid_scale);
  CHECK(cat.mean_bid() < 2.0 * cfg.bid_scale);
}

TEST_CASE("generation is bit-identical for identical configs") {
  const WorldConfig cfg = tiny_world(99);
  const Catalog a = Catalog::generate(cfg);
  const Catalog b = Catalog::generate(cfg);
  for (std::uint32_t u = 0; u < cfg.n_users; ++u) {
    CHECK(a.user_features(u) == b.user_features(u));
  }
  for (std::uint32_t ad = 0; ad < cfg.n_ads; ++ad) {
    CHECK(a.bid(ad) == b.bid(ad));
    CHECK(a.ad_features(ad) == b.ad_features(ad));
  }
  CHECK(a.true_ctr(3, 17, 2) == b.true_ctr(3, 17, 2));

  const Catalog c = Catalog::generate(tiny_world(100));
  bool any_diff = false;
  for (std::uint32_t ad = 0; ad < cfg.n_ads && !any_diff; ++ad) {
    any_diff = a.bid(ad) != c.bid(ad);
  }
  CHECK(any_diff);
}

TEST_CASE("feature ids respect vocabulary bounds") {
  const WorldConfig cfg = tiny_world(5);
  const Catalog cat = Catalog::generate(cfg);
  for (std::uint32_t u = 0; u < cfg.n_users; ++u) {
    const auto f = cat.user_features(u);
    CHECK(f[0] < cfg.user_vocab[0]);
    CHECK(f[1] < cfg.user_vocab[1]);
  }
  for (std::uint32_t a = 0; a < cfg.n_ads; ++a) {
    const auto f = cat.ad_features(a);
    CHECK(f[0] < cfg.ad_vocab[0]);
    CHECK(f[1] < cfg.ad_vocab[1]);
  }
}

TEST_CASE("config validation rejects zero counts") {
  WorldConfig cfg = tiny_world(1);
  cfg.n_ads = 0;
  CHECK_THROWS_AS(Catalog::generate(cfg), ConfigError);
  cfg = tiny_world(1);
  cfg.user_vocab[1] = 0;
  CHECK_THROWS_AS(Catalog::generate(cfg), ConfigError);
  cfg = tiny_world(1);
  cfg.base_ctr = 0.0;
  CHECK_THROWS_AS(Catalog::generate(cfg), ConfigError);
}

TEST_CASE("true_ctr lies strictly inside (0,1), is deterministic, rejects bad indices") {
  const Catalog cat = Catalog::generate(tiny_world(11));
  for (std::uint32_t u = 0; u < 10; ++u) {
    for (std::uint32_t a = 0; a < 10; ++a) {
      const double p = cat.true_ctr(u, a, u % 6);
      CHECK(p > 0.0);
      CHECK(p < 1.0);
      CHECK(p == cat.true_ctr(u, a, u % 6));
    }
  }
  CHECK_THROWS_AS(cat.true_ctr(cat.n_users(), 0, 0), std::out_of_range);
  CHECK_THROWS_AS(cat.true_ctr(0, cat.n_ads(), 0), std::out_of_range);
  CHECK_THROWS_AS(cat.true_ctr(0, 0, 99), std::out_of_range);
}

TEST_CASE("oracle bias calibration hits the configured base rate") {
  WorldConfig cfg = tiny_world(2);
  cfg.n_users = 500;
  cfg.n_ads = 800;
  SUBCASE("default 0.05") {
    const Catalog cat = Catalog::generate(cfg);
    CHECK(cat.estimate_base_rate(10000, 123) == doctest::Approx(0.05).epsilon(0.4));
    CHECK(std::abs(cat.estimate_base_rate(10000, 123) - 0.05) < 0.02);
  }
  SUBCASE("custom 0.2") {
    cfg.base_ctr = 0.2;
    const Catalog cat = Catalog::generate(cfg);
    CHECK(std::abs(cat.estimate_base_rate(10000, 123) - 0.2) < 0.03);
  }
}

TEST_CASE("catalog round-trips losslessly through its file format") {
  const WorldConfig cfg = tiny_world(21);
  const Catalog a = Catalog::generate(cfg);
  const std::string path = temp_path("copr_test_catalog.bin");
  a.save(path);
  const Catalog b = Catalog::load(path);
  CHECK(a.world_digest() == b.world_digest());
  for (std::uint32_t ad = 0; ad < cfg.n_ads; ++ad) CHECK(a.bid(ad) == b.bid(ad));
  for (std::uint32_t u = 0; u < 5; ++u) {
    for (std::uint32_t ad = 0; ad < 5; ++ad) {
      CHECK(a.true_ctr(u, ad, 1) == b.true_ctr(u, ad, 1));
    }
  }
  // saving twice produces identical bytes
  const std::string path2 = temp_path("copr_test_catalog2.bin");
  b.save(path2);
  CHECK(file_digest(path) == file_digest(path2));
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("gen_request samples distinct ads uniformly") {
  const Catalog cat = Catalog::generate(tiny_world(31));

  SUBCASE("m equals n_ads yields a permutation") {
    Rng rng(5);
    const Request req = gen_request(cat, 0, cat.n_ads(), rng);
    std::set<std::uint32_t> seen(req.candidates.begin(), req.candidates.end());
    CHECK(seen.size() == cat.n_ads());
    CHECK(*seen.rbegin() == cat.n_ads() - 1);
  }
  SUBCASE("m = 100 yields 100 distinct ads") {
    Rng rng(6);
    const Request req = gen_request(cat, 1, 100, rng);
    std::set<std::uint32_t> seen(req.candidates.begin(), req.candidates.end());
    CHECK(req.candidates.size() == 100);
    CHECK(seen.size() == 100);
  }
  SUBCASE("same rng state, same request") {
    Rng a(7), b(7);
    const Request ra = gen_request(cat, 2, 20, a);
    const Request rb = gen_request(cat, 2, 20, b);
    CHECK(ra.user == rb.user);
    CHECK(ra.context == rb.context);
    CHECK(ra.candidates == rb.candidates);
  }
  SUBCASE("m beyond n_ads is rejected") {
    Rng rng(8);
    CHECK_THROWS_AS(gen_request(cat, 3, cat.n_ads() + 1, rng), std::invalid_argument);
  }
}

TEST_CASE("rng stream determinism and uniform range") {
  Rng a = Rng::stream(42, 7);
  Rng b = Rng::stream(42, 7);
  Rng c = Rng::stream(42, 8);
  bool all_equal = true, any_diff_stream = false;
  for (int i = 0; i < 100; ++i) {
    const double va = a.uniform();
    all_equal = all_equal && va == b.uniform();
    any_diff_stream = any_diff_stream || va != c.uniform();
    CHECK(va >= 0.0);
    CHECK(va < 1.0);
  }
  CHECK(all_equal);
  CHECK(any_diff_stream);
}
