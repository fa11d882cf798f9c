#ifndef COPR_RNG_HPP_
#define COPR_RNG_HPP_

#include <cstdint>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace copr {

/*! SplitMix64 finalizer. Used to spread raw seeds and to derive stream ids. */
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/*!
 * Deterministic random stream. The mt19937_64 output sequence is pinned by
 * the standard; every value transform (uniform, normal, integer range) is
 * implemented here so results never depend on libstdc++ distribution
 * internals. Streams are cheap to fork by id, which keeps per-request
 * randomness independent of processing order.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  /*! Independent stream derived from (seed, stream_id). */
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    return Rng(mix64(seed) ^ mix64(~stream_id));
  }

  std::uint64_t next_u64() { return engine_(); }

  /*! Uniform in [0, 1) with 53-bit resolution. */
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /*! Unbiased integer in [0, n). */
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = kMax - kMax % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  /*! Standard normal via Box-Muller; the paired deviate is cached. */
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

  bool bernoulli(double p) { return uniform() < p; }

  /*! In-place Fisher-Yates shuffle (std::shuffle is implementation-defined). */
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /*!
   * m distinct values drawn uniformly from [0, n). Uses prefix Fisher-Yates
   * when m is a large fraction of n, rejection sampling otherwise.
   */
  std::vector<std::uint32_t> sample_distinct(std::uint32_t n, std::uint32_t m);

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

inline std::vector<std::uint32_t> Rng::sample_distinct(std::uint32_t n, std::uint32_t m) {
  if (m > n) throw std::invalid_argument("Rng::sample_distinct: m exceeds n");
  std::vector<std::uint32_t> out;
  out.reserve(m);
  if (static_cast<std::uint64_t>(m) * 4 >= n) {
    std::vector<std::uint32_t> pool(n);
    for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
    for (std::uint32_t i = 0; i < m; ++i) {
      const std::uint64_t j = i + below(n - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
  } else {
    std::vector<bool> seen(n, false);
    while (out.size() < m) {
      const auto v = static_cast<std::uint32_t>(below(n));
      if (!seen[v]) {
        seen[v] = true;
        out.push_back(v);
      }
    }
  }
  return out;
}

}  // namespace copr

#endif  // COPR_RNG_HPP_
