#include "copr/catalog.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "copr/binio.hpp"
#include "copr/text.hpp"

namespace copr {

namespace {

constexpr char kCatalogMagic[8] = {'C', 'O', 'P', 'R', 'C', 'A', 'T', '1'};
constexpr std::uint32_t kCatalogVersion = 1;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Distinct stream ids for the generator's independent draws.
enum StreamId : std::uint64_t {
  kStreamUserFeat = 1,
  kStreamAdFeat = 2,
  kStreamBids = 3,
  kStreamOracle = 4,
  kStreamCalibration = 5,
};

}  // namespace

WorldConfig WorldConfig::from_config(const Config& cfg) {
  WorldConfig w;
  w.seed = static_cast<std::uint64_t>(cfg.get_int("world.seed", 1));
  w.n_users = static_cast<std::uint32_t>(cfg.get_int("world.n_users", w.n_users));
  w.n_ads = static_cast<std::uint32_t>(cfg.get_int("world.n_ads", w.n_ads));
  w.user_vocab[0] = static_cast<std::uint32_t>(cfg.get_int("world.user_vocab1", w.user_vocab[0]));
  w.user_vocab[1] = static_cast<std::uint32_t>(cfg.get_int("world.user_vocab2", w.user_vocab[1]));
  w.ad_vocab[0] = static_cast<std::uint32_t>(cfg.get_int("world.ad_vocab1", w.ad_vocab[0]));
  w.ad_vocab[1] = static_cast<std::uint32_t>(cfg.get_int("world.ad_vocab2", w.ad_vocab[1]));
  w.context_vocab = static_cast<std::uint32_t>(cfg.get_int("world.context_vocab", w.context_vocab));
  w.bid_scale = cfg.get_double("world.bid_scale", w.bid_scale);
  w.bid_sigma = cfg.get_double("world.bid_sigma", w.bid_sigma);
  w.base_ctr = cfg.get_double("world.base_ctr", w.base_ctr);
  w.oracle_dim = static_cast<std::uint32_t>(cfg.get_int("world.oracle_dim", w.oracle_dim));
  w.oracle_mean_sigma = cfg.get_double("world.oracle_mean_sigma", w.oracle_mean_sigma);
  w.oracle_hidden_sigma = cfg.get_double("world.oracle_hidden_sigma", w.oracle_hidden_sigma);
  w.oracle_ctx_sigma = cfg.get_double("world.oracle_ctx_sigma", w.oracle_ctx_sigma);
  w.oracle_interaction = cfg.get_double("world.oracle_interaction", w.oracle_interaction);
  w.validate();
  return w;
}

void WorldConfig::validate() const {
  auto positive = [](std::uint64_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("world config: ") + name + " must be positive");
  };
  positive(n_users, "world.n_users");
  positive(n_ads, "world.n_ads");
  positive(user_vocab[0], "world.user_vocab1");
  positive(user_vocab[1], "world.user_vocab2");
  positive(ad_vocab[0], "world.ad_vocab1");
  positive(ad_vocab[1], "world.ad_vocab2");
  positive(context_vocab, "world.context_vocab");
  positive(oracle_dim, "world.oracle_dim");
  if (!(bid_scale > 0.0)) throw ConfigError("world config: world.bid_scale must be positive");
  if (!(bid_sigma >= 0.0)) throw ConfigError("world config: world.bid_sigma must be >= 0");
  if (!(base_ctr > 0.0 && base_ctr < 1.0)) {
    throw ConfigError("world config: world.base_ctr must lie in (0, 1)");
  }
}

std::string WorldConfig::canonical() const {
  std::ostringstream ss;
  ss << "seed=" << seed << "\nn_users=" << n_users << "\nn_ads=" << n_ads
     << "\nuser_vocab1=" << user_vocab[0] << "\nuser_vocab2=" << user_vocab[1]
     << "\nad_vocab1=" << ad_vocab[0] << "\nad_vocab2=" << ad_vocab[1]
     << "\ncontext_vocab=" << context_vocab << "\nbid_scale=" << format_double(bid_scale)
     << "\nbid_sigma=" << format_double(bid_sigma) << "\nbase_ctr=" << format_double(base_ctr)
     << "\noracle_dim=" << oracle_dim
     << "\noracle_mean_sigma=" << format_double(oracle_mean_sigma)
     << "\noracle_hidden_sigma=" << format_double(oracle_hidden_sigma)
     << "\noracle_ctx_sigma=" << format_double(oracle_ctx_sigma)
     << "\noracle_interaction=" << format_double(oracle_interaction) << "\n";
  return ss.str();
}

std::uint64_t WorldConfig::digest() const { return fnv1a64(canonical()); }

Catalog Catalog::generate(const WorldConfig& cfg) {
  cfg.validate();
  Catalog cat;
  cat.cfg_ = cfg;

  {
    Rng rng = Rng::stream(cfg.seed, kStreamUserFeat);
    cat.user_feat_.resize(static_cast<std::size_t>(cfg.n_users) * kUserFields);
    for (std::uint32_t u = 0; u < cfg.n_users; ++u) {
      for (int f = 0; f < kUserFields; ++f) {
        cat.user_feat_[static_cast<std::size_t>(u) * kUserFields + f] =
            static_cast<std::uint32_t>(rng.below(cfg.user_vocab[f]));
      }
    }
  }
  {
    Rng rng = Rng::stream(cfg.seed, kStreamAdFeat);
    cat.ad_feat_.resize(static_cast<std::size_t>(cfg.n_ads) * kAdFields);
    for (std::uint32_t a = 0; a < cfg.n_ads; ++a) {
      for (int f = 0; f < kAdFields; ++f) {
        cat.ad_feat_[static_cast<std::size_t>(a) * kAdFields + f] =
            static_cast<std::uint32_t>(rng.below(cfg.ad_vocab[f]));
      }
    }
  }
  {
    // Log-normal with mean = bid_scale: mu = ln(scale) - sigma^2/2.
    Rng rng = Rng::stream(cfg.seed, kStreamBids);
    const double mu = std::log(cfg.bid_scale) - 0.5 * cfg.bid_sigma * cfg.bid_sigma;
    cat.bids_.resize(cfg.n_ads);
    for (auto& b : cat.bids_) b = rng.lognormal(mu, cfg.bid_sigma);
  }
  {
    Rng rng = Rng::stream(cfg.seed, kStreamOracle);
    OracleParams& o = cat.oracle_;
    o.dim = cfg.oracle_dim;
    o.interaction = cfg.oracle_interaction;
    // A shared mean vector gives every latent factor a common component, so
    // <h_user, h_ad> decomposes into learnable main effects plus a genuine
    // low-rank interaction.
    std::vector<double> mean(o.dim);
    for (auto& m : mean) m = rng.normal(0.0, cfg.oracle_mean_sigma);
    auto fill_field = [&](std::vector<double>& dst, std::uint32_t vocab) {
      dst.resize(static_cast<std::size_t>(vocab) * o.dim);
      for (std::uint32_t id = 0; id < vocab; ++id) {
        for (std::uint32_t d = 0; d < o.dim; ++d) {
          dst[static_cast<std::size_t>(id) * o.dim + d] =
              mean[d] + rng.normal(0.0, cfg.oracle_hidden_sigma);
        }
      }
    };
    for (int f = 0; f < kUserFields; ++f) fill_field(o.user_field[f], cfg.user_vocab[f]);
    for (int f = 0; f < kAdFields; ++f) fill_field(o.ad_field[f], cfg.ad_vocab[f]);
    o.ctx_offset.resize(cfg.context_vocab);
    for (auto& c : o.ctx_offset) c = rng.normal(0.0, cfg.oracle_ctx_sigma);
  }

  // Calibrate the bias so the mean CTR over random triples hits base_ctr.
  // The Monte-Carlo mean is monotone in the bias, so bisection converges.
  {
    Rng rng = Rng::stream(cfg.seed, kStreamCalibration);
    constexpr std::uint32_t kCalSamples = 20000;
    std::vector<double> logits(kCalSamples);
    cat.oracle_.bias = 0.0;
    for (auto& l : logits) {
      const auto u = static_cast<std::uint32_t>(rng.below(cfg.n_users));
      const auto a = static_cast<std::uint32_t>(rng.below(cfg.n_ads));
      const auto c = static_cast<std::uint32_t>(rng.below(cfg.context_vocab));
      l = cat.oracle_logit(u, a, c);
    }
    double lo = -30.0, hi = 10.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      double mean = 0.0;
      for (const double l : logits) mean += sigmoid(mid + l);
      mean /= static_cast<double>(kCalSamples);
      (mean < cfg.base_ctr ? lo : hi) = mid;
    }
    cat.oracle_.bias = 0.5 * (lo + hi);
  }
  return cat;
}

std::array<std::uint32_t, kUserFields> Catalog::user_features(std::uint32_t user) const {
  check_user(user);
  const std::size_t base = static_cast<std::size_t>(user) * kUserFields;
  return {user_feat_[base], user_feat_[base + 1]};
}

std::array<std::uint32_t, kAdFields> Catalog::ad_features(std::uint32_t ad) const {
  check_ad(ad);
  const std::size_t base = static_cast<std::size_t>(ad) * kAdFields;
  return {ad_feat_[base], ad_feat_[base + 1]};
}

std::array<std::uint32_t, kNumFields> Catalog::features(std::uint32_t user, std::uint32_t ad,
                                                        std::uint32_t context) const {
  check_ctx(context);
  const auto u = user_features(user);
  const auto a = ad_features(ad);
  return {u[0], u[1], a[0], a[1], context};
}

double Catalog::bid(std::uint32_t ad) const {
  check_ad(ad);
  return bids_[ad];
}

double Catalog::mean_bid() const {
  const double sum = std::accumulate(bids_.begin(), bids_.end(), 0.0);
  return sum / static_cast<double>(bids_.size());
}

double Catalog::oracle_logit(std::uint32_t user, std::uint32_t ad, std::uint32_t context) const {
  const OracleParams& o = oracle_;
  const auto uf = user_features(user);
  const auto af = ad_features(ad);
  check_ctx(context);
  double dot = 0.0;
  for (std::uint32_t d = 0; d < o.dim; ++d) {
    double hu = 0.0, ha = 0.0;
    for (int f = 0; f < kUserFields; ++f) {
      hu += o.user_field[f][static_cast<std::size_t>(uf[f]) * o.dim + d];
    }
    for (int f = 0; f < kAdFields; ++f) {
      ha += o.ad_field[f][static_cast<std::size_t>(af[f]) * o.dim + d];
    }
    dot += (hu / kUserFields) * (ha / kAdFields);
  }
  return o.interaction * dot + o.ctx_offset[context];
}

double Catalog::true_ctr(std::uint32_t user, std::uint32_t ad, std::uint32_t context) const {
  return sigmoid(oracle_.bias + oracle_logit(user, ad, context));
}

double Catalog::estimate_base_rate(std::uint32_t samples, std::uint64_t seed) const {
  Rng rng(seed);
  double sum = 0.0;
  for (std::uint32_t i = 0; i < samples; ++i) {
    const auto u = static_cast<std::uint32_t>(rng.below(cfg_.n_users));
    const auto a = static_cast<std::uint32_t>(rng.below(cfg_.n_ads));
    const auto c = static_cast<std::uint32_t>(rng.below(cfg_.context_vocab));
    sum += true_ctr(u, a, c);
  }
  return sum / static_cast<double>(samples);
}

std::vector<std::uint32_t> Catalog::field_vocabs() const {
  return {cfg_.user_vocab[0], cfg_.user_vocab[1], cfg_.ad_vocab[0], cfg_.ad_vocab[1],
          cfg_.context_vocab};
}

void Catalog::check_user(std::uint32_t user) const {
  if (user >= cfg_.n_users) {
    throw std::out_of_range("user index " + std::to_string(user) + " out of range");
  }
}

void Catalog::check_ad(std::uint32_t ad) const {
  if (ad >= cfg_.n_ads) {
    throw std::out_of_range("ad index " + std::to_string(ad) + " out of range");
  }
}

void Catalog::check_ctx(std::uint32_t ctx) const {
  if (ctx >= cfg_.context_vocab) {
    throw std::out_of_range("context id " + std::to_string(ctx) + " out of range");
  }
}

void Catalog::save(const std::string& path) const {
  BinaryWriter w(path);
  w.magic(kCatalogMagic);
  w.u32(kCatalogVersion);
  w.u64(world_digest());
  const std::string canon = cfg_.canonical();
  w.u64(canon.size());
  for (char c : canon) w.u8(static_cast<std::uint8_t>(c));
  w.u32_vec(user_feat_);
  w.u32_vec(ad_feat_);
  w.f64_vec(bids_);
  w.u32(oracle_.dim);
  w.f64(oracle_.interaction);
  w.f64(oracle_.bias);
  for (int f = 0; f < kUserFields; ++f) w.f64_vec(oracle_.user_field[f]);
  for (int f = 0; f < kAdFields; ++f) w.f64_vec(oracle_.ad_field[f]);
  w.f64_vec(oracle_.ctx_offset);
  w.close();
}

Catalog Catalog::load(const std::string& path) {
  BinaryReader r(path);
  r.expect_magic(kCatalogMagic);
  const auto version = r.u32();
  if (version != kCatalogVersion) {
    throw std::runtime_error("unsupported catalog version " + std::to_string(version));
  }
  const auto digest = r.u64();
  const auto canon_len = r.u64();
  std::string canon(canon_len, '\0');
  for (auto& c : canon) c = static_cast<char>(r.u8());

  // Rebuild the config from its canonical dump.
  Config kv = Config::from_string(canon, path);
  WorldConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed"));
  cfg.n_users = static_cast<std::uint32_t>(kv.get_int("n_users"));
  cfg.n_ads = static_cast<std::uint32_t>(kv.get_int("n_ads"));
  cfg.user_vocab = {static_cast<std::uint32_t>(kv.get_int("user_vocab1")),
                    static_cast<std::uint32_t>(kv.get_int("user_vocab2"))};
  cfg.ad_vocab = {static_cast<std::uint32_t>(kv.get_int("ad_vocab1")),
                  static_cast<std::uint32_t>(kv.get_int("ad_vocab2"))};
  cfg.context_vocab = static_cast<std::uint32_t>(kv.get_int("context_vocab"));
  cfg.bid_scale = kv.get_double("bid_scale");
  cfg.bid_sigma = kv.get_double("bid_sigma");
  cfg.base_ctr = kv.get_double("base_ctr");
  cfg.oracle_dim = static_cast<std::uint32_t>(kv.get_int("oracle_dim"));
  cfg.oracle_mean_sigma = kv.get_double("oracle_mean_sigma");
  cfg.oracle_hidden_sigma = kv.get_double("oracle_hidden_sigma");
  cfg.oracle_ctx_sigma = kv.get_double("oracle_ctx_sigma");
  cfg.oracle_interaction = kv.get_double("oracle_interaction");
  if (cfg.digest() != digest) {
    throw std::runtime_error("catalog digest mismatch in " + path);
  }

  Catalog cat;
  cat.cfg_ = cfg;
  cat.user_feat_ = r.u32_vec();
  cat.ad_feat_ = r.u32_vec();
  cat.bids_ = r.f64_vec();
  cat.oracle_.dim = r.u32();
  cat.oracle_.interaction = r.f64();
  cat.oracle_.bias = r.f64();
  for (int f = 0; f < kUserFields; ++f) cat.oracle_.user_field[f] = r.f64_vec();
  for (int f = 0; f < kAdFields; ++f) cat.oracle_.ad_field[f] = r.f64_vec();
  cat.oracle_.ctx_offset = r.f64_vec();

  if (cat.user_feat_.size() != static_cast<std::size_t>(cfg.n_users) * kUserFields ||
      cat.ad_feat_.size() != static_cast<std::size_t>(cfg.n_ads) * kAdFields ||
      cat.bids_.size() != cfg.n_ads) {
    throw std::runtime_error("catalog arrays inconsistent with config in " + path);
  }
  return cat;
}

Request gen_request(const Catalog& catalog, std::uint32_t request_id, std::uint32_t m, Rng& rng) {
  if (m == 0) throw std::invalid_argument("gen_request: m must be positive");
  if (m > catalog.n_ads()) {
    throw std::invalid_argument("gen_request: m = " + std::to_string(m) + " exceeds n_ads = " +
                                std::to_string(catalog.n_ads()));
  }
  Request req;
  req.request_id = request_id;
  req.user = static_cast<std::uint32_t>(rng.below(catalog.n_users()));
  req.context = static_cast<std::uint32_t>(rng.below(catalog.context_vocab()));
  req.candidates = rng.sample_distinct(catalog.n_ads(), m);
  return req;
}

}  // namespace copr
