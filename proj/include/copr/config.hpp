#ifndef COPR_CONFIG_HPP_
#define COPR_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace copr {

/*! Raised for malformed files or bad values; the message names the key. */
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/*!
 * Flat `key = value` config with `#` comments and dotted sections
 * (world.n_ads, student.lr, ...). Keys are case-sensitive. Values are kept
 * as strings; typed getters convert on demand and report the offending key
 * on failure.
 */
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_string(std::string_view text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  /*! Required getters: throw ConfigError when the key is absent or invalid. */
  std::string get_str(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /*! Defaulted getters. */
  std::string get_str(const std::string& key, const std::string& def) const;
  std::int64_t get_int(const std::string& key, std::int64_t def) const;
  double get_double(const std::string& key, double def) const;
  bool get_bool(const std::string& key, bool def) const;
  std::vector<std::int64_t> get_int_list(const std::string& key,
                                         const std::vector<std::int64_t>& def) const;

  /*! Sorted `key = value` lines; the digest input for reproducibility checks. */
  std::string canonical(const std::string& prefix = "") const;
  std::uint64_t digest(const std::string& prefix = "") const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace copr

#endif  // COPR_CONFIG_HPP_
